"""Differential-privacy mechanisms, calibration, and budget accounting."""

from hybridfl.dpcore.ledger import BudgetLedger, LedgerEntry
from hybridfl.dpcore.mechanisms import (
    NoiseDraw,
    PrivacyParams,
    TrustTooLowError,
    calibrate_gaussian_sigma,
    gamma_share_noise,
    gamma_share_std,
    gaussian_noise,
    laplace_noise,
    trust_scaled_gaussian,
    trust_scaled_std,
)

__all__ = [
    "BudgetLedger",
    "LedgerEntry",
    "NoiseDraw",
    "PrivacyParams",
    "TrustTooLowError",
    "calibrate_gaussian_sigma",
    "gamma_share_noise",
    "gamma_share_std",
    "gaussian_noise",
    "laplace_noise",
    "trust_scaled_gaussian",
    "trust_scaled_std",
]
