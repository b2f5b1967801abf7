"""When to prefer indirect over direct entries.

With n resources per host, r_l lookups and r_m migrations per unit time::

    migration  direct   n*c_p + c_q        indirect  c_p + c_q
    lookup     direct   c_g + c_r          indirect  2*(c_g + c_r)

The weighted overall costs are ``w_l*r_l*lookup + w_m*r_m*migration`` and
indirect entries pay off when

    (w_l/w_m) * (r_l/r_m) < (n - 1)*c_p / (c_g + c_r)

Verdicts are computed on the cross-multiplied form with exact rationals,
which equals the cost comparison even when r_m or c_g + c_r is zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction


class Recommendation(str, enum.Enum):
    DIRECT = "direct"
    INDIRECT = "indirect"
    TIE = "tie"


@dataclass(frozen=True)
class CostParams:
    c_g: float = 30.0
    c_p: float = 50.0
    c_r: float = 200.0
    c_q: float = 500.0
    n: int = 1
    r_l: float = 1.0
    r_m: float = 1.0
    w_l: float = 1.0
    w_m: float = 1.0

    def __post_init__(self):
        for name in ("c_g", "c_p", "c_r", "c_q", "r_l", "r_m"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        for name in ("w_l", "w_m"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n!r}")


@dataclass(frozen=True)
class CostReport:
    migration_direct: float
    migration_indirect: float
    lookup_direct: float
    lookup_indirect: float
    overall_direct: float
    overall_indirect: float
    weighted_direct: float
    weighted_indirect: float
    recommendation: Recommendation
    lhs: float
    rhs: float


def migration_cost_direct(p: CostParams) -> float:
    return p.n * p.c_p + p.c_q


def migration_cost_indirect(p: CostParams) -> float:
    return p.c_p + p.c_q


def lookup_costs(p: CostParams) -> tuple[float, float]:
    one_hop = p.c_g + p.c_r
    return one_hop, 2 * one_hop


def overall_costs(p: CostParams) -> tuple[float, float]:
    lookup_d, lookup_i = lookup_costs(p)
    return (
        p.r_l * lookup_d + p.r_m * migration_cost_direct(p),
        p.r_l * lookup_i + p.r_m * migration_cost_indirect(p),
    )


def weighted_costs(p: CostParams) -> tuple[float, float]:
    lookup_d, lookup_i = lookup_costs(p)
    return (
        p.w_l * p.r_l * lookup_d + p.w_m * p.r_m * migration_cost_direct(p),
        p.w_l * p.r_l * lookup_i + p.w_m * p.r_m * migration_cost_indirect(p),
    )


def _verdict(left: Fraction, right: Fraction) -> Recommendation:
    if left < right:
        return Recommendation.INDIRECT
    if left > right:
        return Recommendation.DIRECT
    return Recommendation.TIE


def _ratio(num: float, den: float) -> float:
    if den != 0:
        return num / den
    if num == 0:
        return math.nan
    return math.copysign(math.inf, num)


def threshold_sides(p: CostParams) -> tuple[float, float]:
    """The two sides of the weighted threshold, for display (may be inf/nan)."""
    lhs = _ratio(p.w_l * p.r_l, p.w_m * p.r_m)
    rhs = _ratio((p.n - 1) * p.c_p, p.c_g + p.c_r)
    return lhs, rhs


def recommend(p: CostParams) -> CostReport:
    F = Fraction
    # lookup-side penalty of indirect vs migration-side saving, both scaled by w_m*r_m*(c_g+c_r)
    penalty = F(p.w_l) * F(p.r_l) * (F(p.c_g) + F(p.c_r))
    saving = F(p.w_m) * F(p.r_m) * (p.n - 1) * F(p.c_p)
    lookup_d, lookup_i = lookup_costs(p)
    overall_d, overall_i = overall_costs(p)
    weighted_d, weighted_i = weighted_costs(p)
    lhs, rhs = threshold_sides(p)
    return CostReport(
        migration_direct=migration_cost_direct(p),
        migration_indirect=migration_cost_indirect(p),
        lookup_direct=lookup_d,
        lookup_indirect=lookup_i,
        overall_direct=overall_d,
        overall_indirect=overall_i,
        weighted_direct=weighted_d,
        weighted_indirect=weighted_i,
        recommendation=_verdict(penalty, saving),
        lhs=lhs,
        rhs=rhs,
    )


def approx_threshold(W: float, R: float, p: CostParams) -> Recommendation:
    """Large-n shortcut: indirect iff ``W*R < n*c_p / (c_g + c_r)``.

    ``W`` is the lookup-vs-migration importance ratio and ``R`` the
    lookup-vs-migration rate ratio. Differs from :func:`recommend` only in
    using n instead of n - 1.
    """
    if not (W > 0 and R > 0):
        raise ValueError("W and R must be positive")
    F = Fraction
    return _verdict(F(W) * F(R) * (F(p.c_g) + F(p.c_r)), p.n * F(p.c_p))
