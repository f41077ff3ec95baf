"""Binomial confidence intervals, McNemar's paired test and Holm adjustment."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from statistics import NormalDist

EXACT_BELOW = 25


def wilson_ci(successes: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("wilson_ci needs n > 0")
    if not 0 <= successes <= n:
        raise ValueError("successes must lie in [0, n]")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    z = NormalDist().inv_cdf(1.0 - (1.0 - level) / 2.0)
    p = successes / n
    z2n = z * z / n
    centre = (p + z2n / 2.0) / (1.0 + z2n)
    half = z / (1.0 + z2n) * math.sqrt(p * (1.0 - p) / n + z2n / (4.0 * n))
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True, slots=True)
class McNemarResult:
    statistic: float
    p_value: float
    variant: str  # "exact" | "corrected"
    degenerate: bool = False

    def to_json(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value, "variant": self.variant,
                "degenerate": self.degenerate}


def mcnemar(b: int, c: int) -> McNemarResult:
    """Exact two-sided binomial test below 25 discordant pairs, continuity-corrected chi-square otherwise.

    With no discordant pairs the test is degenerate and reports ``p = 1``.
    """
    if b < 0 or c < 0:
        raise ValueError("discordant counts must be non-negative")
    n = b + c
    if n == 0:
        return McNemarResult(0.0, 1.0, "exact", degenerate=True)
    if n < EXACT_BELOW:
        k = min(b, c)
        tail = sum(math.comb(n, i) for i in range(k + 1)) / 2**n
        return McNemarResult(float(k), min(1.0, 2.0 * tail), "exact")
    stat = (abs(b - c) - 1) ** 2 / n
    return McNemarResult(stat, math.erfc(math.sqrt(stat / 2.0)), "corrected")


def holm(p_values: Sequence[float]) -> list[float]:
    """Holm step-down adjusted p-values, returned in input order."""
    m = len(p_values)
    order = sorted(range(m), key=lambda i: p_values[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, min(1.0, (m - rank) * p_values[i]))
        adjusted[i] = running
    return adjusted


@dataclass(frozen=True, slots=True)
class PairedOutcome:
    both: int
    baseline_only: int
    treatment_only: int
    neither: int

    @classmethod
    def from_flags(cls, baseline: Sequence[bool], treatment: Sequence[bool]) -> PairedOutcome:
        if len(baseline) != len(treatment):
            raise ValueError("paired outcomes need equal-length sequences")
        pairs = list(zip(baseline, treatment))
        return cls(sum(x and y for x, y in pairs), sum(x and not y for x, y in pairs),
                   sum(y and not x for x, y in pairs), sum(not x and not y for x, y in pairs))

    @property
    def n(self) -> int:
        return self.both + self.baseline_only + self.treatment_only + self.neither

    def test(self) -> McNemarResult:
        return mcnemar(self.baseline_only, self.treatment_only)

    def to_json(self) -> dict:
        return {"a": self.both, "b": self.baseline_only, "c": self.treatment_only, "d": self.neither}
