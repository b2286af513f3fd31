"""Closed-form bound formulas and cross-family comparison tables.

Every bound is carried as a log-value internally; exponentiation happens
only when a caller asks for the linear value or at serialization, since the
exponents routinely reach -100 and below.  Default constants follow the
family-specific admissibility thresholds with a 0.1 margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .disorder import DisorderLaw, q1, q2
from .kernel import FamilyKind, SlowlyVaryingFamily

__all__ = [
    "MhValue",
    "SharperBounds",
    "BoundReport",
    "log_upper_general",
    "upper_general",
    "sharper_bounds",
    "rss_threshold",
    "log_rss_bound",
    "rss_bounds",
    "psi",
    "m_h",
    "bound_table",
]

_LOG_COUNT_GUARD = 700.0


def log_upper_general(
    family: SlowlyVaryingFamily, law: DisorderLaw, beta: float, h: float, b: float = 0.9
) -> float:
    """Log of the general change-of-measure upper bound.

    -b * q1(beta) * (1/h) * log(tail(1/h) / L(1/h)); the log-ratio can be
    negative when h is too large for the family, in which case the "bound"
    exceeds one and callers are expected to flag it.
    """
    if not 0.0 < b < 1.0:
        raise ValueError(f"b must lie in (0, 1), got {b}")
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    x = 1.0 / h
    ratio = family.tail(x) / family.evaluate(x)
    return -b * q1(law, beta) * x * math.log(ratio)


def upper_general(family, law, beta, h, b: float = 0.9) -> float:
    """Linear value of the general upper bound (may underflow to 0.0)."""
    return math.exp(min(log_upper_general(family, law, beta, h, b), _LOG_COUNT_GUARD))


@dataclass(frozen=True)
class SharperBounds:
    """Family-sharp bracket in log form; lower may be omitted (with reason)."""

    log_lower: float | None
    log_upper: float
    c_minus: float | None
    c_plus: float
    lower_omitted_reason: str | None = None


def sharper_bounds(
    family: SlowlyVaryingFamily,
    law: DisorderLaw,
    beta: float,
    h: float,
    delta: float = 0.05,
) -> SharperBounds:
    """Family-specific two-sided bounds with default constants.

    Sub-logarithmic: lower uses q2 with c- = upsilon + 1.1, upper uses q1
    with c+ = upsilon - 0.1.  Logarithmic: both use q1 with c- = 5/2 +
    upsilon + 0.1 and c+ = upsilon - 1.1.  Super-logarithmic: symmetric
    envelope exp(-(1 +/- delta) (h/q1)^(-upsilon/(upsilon-1))), delta
    standing in for the vanishing correction.
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    u = family.upsilon
    q1v = q1(law, beta)
    log_inv_h = math.log(1.0 / h)

    if family.kind is FamilyKind.SUPER_LOGARITHMIC:
        expo = (h / q1v) ** (-u / (u - 1.0))
        return SharperBounds(
            log_lower=-(1.0 + delta) * expo,
            log_upper=-(1.0 - delta) * expo,
            c_minus=1.0 + delta,
            c_plus=1.0 - delta,
        )

    if log_inv_h <= 1.0:
        raise ValueError(f"h={h} too large: log(1/h) must exceed 1 for this family")
    loglog = math.log(log_inv_h)

    if family.kind is FamilyKind.SUB_LOGARITHMIC:
        c_minus, c_plus = u + 1.1, u - 0.1
        log_upper = -c_plus * q1v * loglog / h
        q2v = q2(law, beta)
        if math.isinf(q2v):
            return SharperBounds(
                log_lower=None,
                log_upper=log_upper,
                c_minus=None,
                c_plus=c_plus,
                lower_omitted_reason="q2 is infinite: 2*beta reaches the cumulant domain boundary",
            )
        return SharperBounds(
            log_lower=-c_minus * q2v * loglog / h,
            log_upper=log_upper,
            c_minus=c_minus,
            c_plus=c_plus,
        )

    c_minus, c_plus = 2.5 + u + 0.1, u - 1.0 - 0.1
    if c_plus <= 0:
        raise ValueError(f"upsilon={u} leaves no admissible upper constant")
    return SharperBounds(
        log_lower=-c_minus * q1v * log_inv_h / h,
        log_upper=-c_plus * q1v * log_inv_h / h,
        c_minus=c_minus,
        c_plus=c_plus,
    )


def rss_threshold(family: SlowlyVaryingFamily) -> float:
    """Smallest admissible constant for the rare-stretch lower bound."""
    if family.kind is FamilyKind.SUB_LOGARITHMIC:
        return 3.5
    if family.kind is FamilyKind.LOGARITHMIC:
        return 2.5 + family.upsilon
    return 1.0


def log_rss_bound(
    family: SlowlyVaryingFamily, law: DisorderLaw, beta: float, h: float, b: float = None
) -> float:
    """Log of the rare-stretch lower bound.

    Sub-logarithmic and logarithmic families: -b * q1 * log(1/h) / h.
    Super-logarithmic: -b * h^(-upsilon/(upsilon-1)) * q1^(upsilon/(upsilon-1)),
    the exponent the block construction actually delivers.
    """
    thresh = rss_threshold(family)
    if b is None:
        b = thresh + 0.1
    if b <= thresh:
        raise ValueError(
            f"b={b} not admissible for the {family.kind.value} family: need b > {thresh}"
        )
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    q1v = q1(law, beta)
    u = family.upsilon
    if family.kind is FamilyKind.SUPER_LOGARITHMIC:
        p = u / (u - 1.0)
        return -b * h**-p * q1v**p
    return -b * q1v * math.log(1.0 / h) / h


def rss_bounds(family, law, beta, h, b: float = None) -> float:
    """Linear value of the rare-stretch lower bound."""
    return math.exp(log_rss_bound(family, law, beta, h, b))


def psi(family: SlowlyVaryingFamily, u_arg: float, eps: float) -> float:
    """Scale companion of the targeted-penalization window size."""
    if u_arg <= 1.0:
        raise ValueError(f"psi needs an argument > 1, got {u_arg}")
    ups = family.upsilon
    if family.kind is FamilyKind.SUB_LOGARITHMIC:
        base = ups * math.log(math.log(u_arg))
    elif family.kind is FamilyKind.LOGARITHMIC:
        base = (ups - 1.0) * math.log(u_arg)
    else:
        base = u_arg ** (1.0 / (ups - 1.0))
    return (1.0 - eps) * base


@dataclass(frozen=True)
class MhValue:
    """Window size used by the targeted penalization; count is None on overflow."""

    log_value: float
    count: int | None


def m_h(family: SlowlyVaryingFamily, h: float, eps: float) -> MhValue:
    """Three-case coarse-graining window size, rounded down.

    Sub-logarithmic: exp((1-eps) * upsilon * log log(1/h) / h); logarithmic:
    exp((1-eps) * (upsilon-1) * log(1/h) / h); super-logarithmic:
    exp((1-eps) * h^(-upsilon/(upsilon-1))).  Returned in log form with the
    integer count attached whenever it fits in the float range.
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    ups = family.upsilon
    if family.kind is FamilyKind.SUPER_LOGARITHMIC:
        log_m = (1.0 - eps) * h ** (-ups / (ups - 1.0))
    else:
        log_inv_h = math.log(1.0 / h)
        if log_inv_h <= 1.0:
            raise ValueError(f"h={h} too large: log(1/h) must exceed 1 for this family")
        if family.kind is FamilyKind.SUB_LOGARITHMIC:
            log_m = (1.0 - eps) * ups * math.log(log_inv_h) / h
        else:
            log_m = (1.0 - eps) * (ups - 1.0) * log_inv_h / h
    if log_m > _LOG_COUNT_GUARD:
        return MhValue(log_value=log_m, count=None)
    return MhValue(log_value=log_m, count=int(math.floor(math.exp(log_m))))


@dataclass(frozen=True)
class BoundReport:
    """Evaluated bound formulas for one (family, beta, h) point, in log form."""

    family: str
    upsilon: float
    c_L: float
    beta: float
    h: float
    log_upper_general: float
    log_upper_sharper: float
    log_lower_rss: float
    log_lower_sublog: float | None
    constants_used: dict
    flags: str

    def to_dict(self) -> dict:
        return asdict(self)


def bound_table(
    family: SlowlyVaryingFamily,
    law: DisorderLaw,
    beta: float,
    h_grid,
    b_general: float = 0.9,
    b_rss: float = None,
    delta: float = 0.05,
) -> list[BoundReport]:
    """All bounds over a descending h grid; ordering violations are flagged."""
    h_grid = [float(h) for h in h_grid]
    if not h_grid:
        raise ValueError("h grid must be nonempty")
    if any(b >= a for a, b in zip(h_grid, h_grid[1:])):
        raise ValueError("h grid must be strictly descending")
    if b_rss is None:
        b_rss = rss_threshold(family) + 0.1

    rows = []
    for h in h_grid:
        flags = []
        lug = log_upper_general(family, law, beta, h, b_general)
        if lug > 0:
            flags.append("upper_general_exceeds_one")
        sb = sharper_bounds(family, law, beta, h, delta)
        lrss = log_rss_bound(family, law, beta, h, b_rss)
        log_lower_sublog = None
        if family.kind is FamilyKind.SUB_LOGARITHMIC and sb.log_lower is not None:
            log_lower_sublog = sb.log_lower
        if lrss > lug:
            flags.append("rss_above_upper_general")
        rows.append(
            BoundReport(
                family=family.kind.value,
                upsilon=family.upsilon,
                c_L=family.c_L,
                beta=beta,
                h=h,
                log_upper_general=lug,
                log_upper_sharper=sb.log_upper,
                log_lower_rss=lrss,
                log_lower_sublog=log_lower_sublog,
                constants_used={
                    "b": b_general,
                    "c_plus": sb.c_plus,
                    "c_minus": sb.c_minus,
                    "c": b_rss,
                    "delta": delta,
                },
                flags=";".join(flags),
            )
        )
    return rows
