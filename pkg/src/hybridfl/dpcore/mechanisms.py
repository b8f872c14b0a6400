"""Noise mechanisms: Gaussian, Laplace, and their distributed variants.

The distributed variants implement the t-of-n trust model: when at least
t parties are honest and non-colluding, each party may scale its noise
down so that any t-1 honest contributions already add up to the full
central mechanism. Gaussian variance divides by t-1 directly; Laplace is
split as a difference of Gamma(1/(t-1)) draws, whose sum over t-1
parties is exactly Laplace.

All samplers take an injected ``numpy.random.Generator``; nothing reads
global randomness. Samplers are pure given the generator state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class TrustTooLowError(ValueError):
    """Trust parameter below 2; the 1/(t-1) reduction is undefined."""


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy configuration for one query.

    Either ``epsilon`` (with optional ``delta``) or ``sigma`` is the
    primary knob; the other side is derivable via calibration.
    """

    epsilon: Optional[float] = None
    delta: Optional[float] = None
    sigma: Optional[float] = None
    sensitivity: float = 1.0
    trust_t: int = 2
    n_parties: int = 2

    def __post_init__(self) -> None:
        if self.epsilon is None and self.sigma is None:
            raise ValueError("one of epsilon or sigma must be set")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.sensitivity < 0:
            raise ValueError("sensitivity must be non-negative")
        if self.trust_t < 2:
            raise TrustTooLowError("trust_t must be at least 2")
        if self.trust_t > self.n_parties:
            raise ValueError("trust_t cannot exceed n_parties")


@dataclass(frozen=True)
class NoiseDraw:
    value: float
    mechanism: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError("noise draw must be finite")


def calibrate_gaussian_sigma(epsilon: float, delta: float) -> float:
    """Noise multiplier sqrt(2*ln(1.25/delta))/epsilon for (eps, delta)-DP.

    The closed form is only a theorem for epsilon < 1; larger budgets are
    permitted but flagged with a warning.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if epsilon >= 1:
        warnings.warn(
            "gaussian calibration is only guaranteed for epsilon < 1",
            stacklevel=2,
        )
    return math.sqrt(2.0 * math.log(1.25 / delta)) / epsilon


def gaussian_noise(params: PrivacyParams, rng: np.random.Generator) -> NoiseDraw:
    """One draw from N(0, sensitivity^2 * sigma^2)."""
    if params.sigma is None:
        raise ValueError("gaussian_noise requires sigma")
    std = params.sensitivity * params.sigma
    value = float(rng.normal(0.0, std)) if std > 0 else 0.0
    return NoiseDraw(value, "gaussian", {"std": std, "sigma": params.sigma})


def trust_scaled_std(params: PrivacyParams) -> float:
    """Per-party noise std under the t-of-n reduction: S*sigma/sqrt(t-1)."""
    if params.sigma is None:
        raise ValueError("trust scaling requires sigma")
    if params.trust_t < 2:
        raise TrustTooLowError("trust_t must be at least 2")
    return params.sensitivity * params.sigma / math.sqrt(params.trust_t - 1)


def trust_scaled_gaussian(
    params: PrivacyParams, rng: np.random.Generator
) -> NoiseDraw:
    """One party's share of distributed Gaussian noise.

    Draws N(0, S^2 * sigma^2 / (t-1)); the decrypted sum over n parties
    then carries variance n/(t-1) * S^2 sigma^2 >= the central S^2 sigma^2.
    """
    std = trust_scaled_std(params)
    value = float(rng.normal(0.0, std)) if std > 0 else 0.0
    return NoiseDraw(
        value,
        "gaussian",
        {"std": std, "sigma": params.sigma, "trust_t": params.trust_t},
    )


def laplace_noise(
    epsilon: float, sensitivity: float, rng: np.random.Generator
) -> NoiseDraw:
    """One draw from Lap(sensitivity/epsilon)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if sensitivity < 0:
        raise ValueError("sensitivity must be non-negative")
    scale = sensitivity / epsilon
    value = float(rng.laplace(0.0, scale)) if scale > 0 else 0.0
    return NoiseDraw(value, "laplace", {"scale": scale})


def gamma_share_std(epsilon: float, sensitivity: float, trust_t: int) -> float:
    """Std of one Gamma-difference share: sqrt(2/(t-1)) * S/epsilon."""
    if trust_t < 2:
        raise TrustTooLowError("trust_t must be at least 2")
    return math.sqrt(2.0 / (trust_t - 1)) * sensitivity / epsilon


def gamma_share_noise(
    epsilon: float,
    sensitivity: float,
    trust_t: int,
    rng: np.random.Generator,
) -> NoiseDraw:
    """One party's share of distributed Laplace noise.

    Returns g1 - g2 with g_i ~ Gamma(1/(t-1), S/eps). The sum of t-1
    independent shares is distributed Lap(S/eps), so any t-1 honest
    parties already contribute the full central Laplace noise. At t=2 a
    single share is itself exactly Laplace.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if trust_t < 2:
        raise TrustTooLowError("trust_t must be at least 2")
    shape = 1.0 / (trust_t - 1)
    scale = sensitivity / epsilon
    if scale == 0:
        value = 0.0
    else:
        value = float(rng.gamma(shape, scale) - rng.gamma(shape, scale))
    return NoiseDraw(
        value,
        "gamma-share",
        {"shape": shape, "scale": scale, "trust_t": trust_t},
    )
