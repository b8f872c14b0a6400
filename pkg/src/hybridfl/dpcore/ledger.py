"""Cumulative privacy-budget accounting.

Two composition views over the same entries: basic composition (epsilons
and deltas add) and zCDP for Gaussian releases (rho = 1/(2*sigma^2) per
entry, converted to (eps, delta) at a target delta).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class LedgerEntry:
    label: str
    epsilon: float = 0.0
    delta: float = 0.0
    sigma: Optional[float] = None

    @property
    def rho(self) -> float:
        if self.sigma is None or self.sigma == 0:
            return 0.0
        return 1.0 / (2.0 * self.sigma * self.sigma)


@dataclass
class BudgetLedger:
    """Single-writer record of per-query privacy spend."""

    entries: list[LedgerEntry] = field(default_factory=list)

    def charge(
        self,
        label: str,
        *,
        epsilon: float = 0.0,
        delta: float = 0.0,
        sigma: Optional[float] = None,
    ) -> None:
        if epsilon < 0 or delta < 0:
            raise ValueError("epsilon and delta charges must be non-negative")
        if sigma is not None and sigma <= 0:
            raise ValueError("sigma charges must be positive")
        self.entries.append(LedgerEntry(label, epsilon, delta, sigma))

    # fsum: exactly-rounded totals, so charging order cannot matter.
    @property
    def total_epsilon(self) -> float:
        return math.fsum(e.epsilon for e in self.entries)

    @property
    def total_delta(self) -> float:
        return math.fsum(e.delta for e in self.entries)

    @property
    def total_rho(self) -> float:
        return math.fsum(e.rho for e in self.entries)

    def to_eps_delta(
        self, delta_target: Optional[float] = None
    ) -> tuple[float, float]:
        """Overall (eps, delta) across all entries.

        Without a target delta this is plain basic composition. With one,
        Gaussian entries are composed as zCDP, rho-to-DP converted via
        eps = rho + 2*sqrt(rho*ln(1/delta_target)), and any pure-epsilon
        entries are added on top.
        """
        if not self.entries:
            return 0.0, 0.0
        if delta_target is None:
            return self.total_epsilon, self.total_delta
        if not 0 < delta_target < 1:
            raise ValueError("delta_target must lie in (0, 1)")
        rho = self.total_rho
        zcdp_eps = rho + 2.0 * math.sqrt(rho * math.log(1.0 / delta_target))
        return self.total_epsilon + zcdp_eps, self.total_delta + delta_target

    def report(self, delta_target: Optional[float] = None) -> dict:
        eps, delta = self.to_eps_delta(delta_target)
        return {
            "entries": [
                {
                    "label": e.label,
                    "epsilon": e.epsilon,
                    "delta": e.delta,
                    "sigma": e.sigma,
                }
                for e in self.entries
            ],
            "total_epsilon": self.total_epsilon,
            "total_delta": self.total_delta,
            "total_rho": self.total_rho,
            "composed_epsilon": eps,
            "composed_delta": delta,
            "delta_target": delta_target,
        }

    def to_json(self, delta_target: Optional[float] = None) -> str:
        return json.dumps(self.report(delta_target), indent=2)
