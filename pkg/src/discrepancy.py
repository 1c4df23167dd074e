"""How far the smoothed profile drifts from the profile itself.

``A(x, t) = |f(t+x) + f(t-x) - 2 f(t)|`` is the second difference of the
trapezoid profile. Because ``f`` is piecewise linear, the inner integral
``integral of A(x, t)/t dt`` has a closed form on every piece where the
three shifted profiles are linear at once, so only the outer integral
against the kernel is done numerically.

The double integral ``D_n`` over ``[0, 2] x [0, 1]`` is computed directly and
also as the sum of seven regions aligned with the kink lines; one of them
(``plateau``) vanishes identically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from src.config import get_settings
from src.errors import InvalidRange, check_tol
from src.extremal import SmoothingKernel, TrapezoidProfile
from src.quadrature import integrate

logger = logging.getLogger(__name__)

REGIONS = ("upper", "corner", "low_strip", "diagonal", "plateau", "band", "far")

_HALF = 0.5


@lru_cache(maxsize=64)
def _profile(n: int) -> TrapezoidProfile:
    return TrapezoidProfile(n)


def second_difference(n: int, x: Any, t: Any) -> Any:
    """``|f(t+x) + f(t-x) - 2 f(t)|`` for profile parameter *n*."""
    prof = _profile(n)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.abs(prof.values(t + x) + prof.values(t - x) - 2.0 * prof.values(t))
    return float(out) if out.ndim == 0 else out


# ----------------------------------------------------------------------
# Inner integral in closed form
# ----------------------------------------------------------------------


def _piece(u: float, v: float, su: float, sv: float) -> float:
    """``integral over [u, v] of |S(t)|/t`` for linear ``S`` of one sign."""
    if v <= u:
        return 0.0
    beta = (sv - su) / (v - u)
    if u == 0.0:
        # S(0) = 0 since f is odd
        return abs(beta * v)
    alpha = su - beta * u
    return abs(alpha * math.log(v / u) + beta * (v - u))


def inner_integral(n: int, x: float, a: float = 0.0, b: float = 1.0) -> float:
    """``integral over [a, b] of A(x, t)/t dt``, exactly on linear pieces."""
    if b <= a:
        return 0.0
    prof = _profile(n)
    xs, _ = prof.knots
    cand = np.concatenate([xs - x, xs + x, xs, [a, b]])
    pts = np.unique(np.clip(cand, a, b))
    s = prof.values(pts + x) + prof.values(pts - x) - 2.0 * prof.values(pts)
    total = 0.0
    for u, v, su, sv in zip(pts[:-1], pts[1:], s[:-1], s[1:]):
        if su * sv < 0:
            z = u + su * (v - u) / (su - sv)
            total += _piece(u, z, su, 0.0) + _piece(z, v, 0.0, sv)
        else:
            total += _piece(u, v, su, sv)
    return total


# ----------------------------------------------------------------------
# Outer integrals
# ----------------------------------------------------------------------


def _x_breakpoints(n: int, lo: float, hi: float) -> list[float]:
    xs, _ = _profile(n).knots
    diffs = np.abs(xs[:, None] - xs[None, :]).ravel()
    h = 1.0 / n
    width = SmoothingKernel(n).width
    cand = set(diffs.tolist()) | set((diffs / 2).tolist())
    cand |= {h, _HALF - h, _HALF, 1.0 - h, 2.0 * h}
    cand |= {m * width for m in (0.5, 1, 2, 4, 8)}
    return sorted(c for c in cand if lo < c < hi)


def _outer(
    n: int,
    lo: float,
    hi: float,
    t_range: Callable[[float], tuple[float, float]],
    tol: float,
) -> tuple[float, float]:
    if hi <= lo:
        return 0.0, 0.0
    kern = SmoothingKernel(n)

    def integrand(x: np.ndarray) -> np.ndarray:
        g = np.array([inner_integral(n, float(xi), *t_range(float(xi))) for xi in x])
        return g * kern.values(x)

    res = integrate(
        integrand, lo, hi, abs_tol=tol, rel_tol=0.0, breakpoints=_x_breakpoints(n, lo, hi)
    )
    return float(res.value), res.abs_error


def _regions(n: int) -> dict[str, tuple[float, float, Callable[[float], tuple[float, float]]]]:
    h = 1.0 / n
    s = _HALF
    return {
        "upper": (0.0, 2.0, lambda x: (s, 1.0)),
        "corner": (0.0, h, lambda x: (0.0, min(x, h))),
        "low_strip": (h, 2.0, lambda x: (0.0, h)),
        "diagonal": (0.0, h, lambda x: (x, min(x + h, s))),
        "plateau": (0.0, s - h, lambda x: (x + h, s)),
        "band": (h, s - h, lambda x: (h, x + h)),
        "far": (max(s - h, h), 2.0, lambda x: (h, s)),
    }


def region_integral(n: int, name: str, tol: float | None = None) -> float:
    """One of the seven pieces of ``D_n``; ``plateau`` is identically zero."""
    if name not in REGIONS:
        raise ValueError(f"unknown region {name!r}; expected one of {REGIONS}")
    tol = check_tol(get_settings().tol if tol is None else tol)
    lo, hi, t_range = _regions(n)[name]
    if name == "plateau":
        return 0.0
    return _outer(n, lo, hi, t_range, tol)[0]


@dataclass(frozen=True)
class DiscrepancyReport:
    """``D_n`` with its seven-region breakdown."""

    n: int
    D_n: float
    region_values: dict[str, float] = field(default_factory=dict)
    region_sum: float = 0.0
    ratio: float = 0.0
    abs_error_est: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def discrepancy_integral(n: int, tol: float | None = None) -> DiscrepancyReport:
    """``integral over [0, 2] x [0, 1] of A(x, t)/t * phi_n(x)``.

    Raises :class:`ToleranceNotMet` if any outer quadrature stalls.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    tol = check_tol(get_settings().tol if tol is None else tol)
    share = tol / 8
    direct, err = _outer(n, 0.0, 2.0, lambda x: (0.0, 1.0), share)
    values: dict[str, float] = {}
    for name, (lo, hi, t_range) in _regions(n).items():
        if name == "plateau":
            values[name] = 0.0
            continue
        v, e = _outer(n, lo, hi, t_range, share)
        values[name] = v
        err += e
    region_sum = math.fsum(values.values())
    logger.info("D_%d = %.12g (regions sum to %.12g)", n, direct, region_sum)
    return DiscrepancyReport(
        n=n,
        D_n=direct,
        region_values=values,
        region_sum=region_sum,
        ratio=direct / math.log(n),
        abs_error_est=err,
    )


def region_bounds(n: int) -> dict[str, float]:
    """Closed-form bound for each region from ``A <= 4 min(nx, nt, 1)``."""
    h = 1.0 / n
    s = _HALF
    kern = SmoothingKernel(n)
    band = 0.0
    if s - h > h:
        band = 4.0 * float(
            integrate(lambda x: np.log(n * x + 1.0) * kern.values(x), h, s - h, abs_tol=1e-12).value
        )
    far_lo = max(s - h, h)
    mass = float(integrate(kern.values, far_lo, 2.0, abs_tol=1e-14).value)
    return {
        "upper": 2.0 * math.log(2.0),
        "corner": 2.0,
        "low_strip": 2.0,
        "diagonal": 2.0,
        "plateau": 0.0,
        "band": band,
        "far": 4.0 * math.log(s / h) * mass,
    }


def pointwise_gap(n: int, t: float, tol: float | None = None) -> float:
    """``integral over [0, 2] of A(x, t) phi_n(x) dx``, a bound on ``|P_n(t) - f(t)|``."""
    if not 0.0 <= t <= 1.0:
        raise InvalidRange(f"t must lie in [0, 1], got {t}")
    tol = check_tol(get_settings().tol if tol is None else tol)
    if t == 0.0:
        return 0.0
    prof = _profile(n)
    kern = SmoothingKernel(n)
    xs, _ = prof.knots
    bps = sorted({abs(float(k) - t) for k in xs} | {m * kern.width for m in (1, 2, 4)})
    res = integrate(
        lambda x: second_difference(n, x, t) * kern.values(x), 0.0, 2.0, abs_tol=tol, breakpoints=bps
    )
    return float(res.value)
