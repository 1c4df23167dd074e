"""Principal-value oscillatory integrals ``p.v. integral of exp(i p(t)) dt / t``.

The line is cut at the critical points of the phase and, inside each monotone
piece, at the crossings of the levels ``m * pi``. Between consecutive crossings
(a lobe) ``sin(p(t))`` keeps one sign, so each lobe is a smooth, cheap
Gauss-Kronrod panel. Beyond the last critical point the lobes alternate with
slowly decaying magnitudes; their partial sums are accelerated by repeated
averaging, and the magnitude of the last lobe is kept as a certified
alternating-series remainder bound.

Odd phases reduce to ``2 |integral over (0, inf) of sin(p(t))/t dt|``; even
phases give exactly zero; anything else is assembled from a nonsingular
symmetric piece near the origin plus one-sided complex tails.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Union

import numpy as np

from src.config import get_settings
from src.errors import InvalidRange, NotConverged, check_tol
from src.phase import Phase, PolyPhase, extremal_phase
from src.poly import Poly
from src.quadrature import fsum, integrate_panels

logger = logging.getLogger(__name__)

PhaseLike = Union[Poly, Phase]

_PI = math.pi
_MAX_DOUBLINGS = 200
_MIN_BATCH = 16
_MAX_BATCH = 4096
_SEGMENT_LOBE_LIMIT = 100_000


@dataclass(frozen=True)
class PVResult:
    """A principal-value integral and how it was obtained."""

    value: float
    abs_error_est: float
    truncation_radius: float
    lobe_count: int
    converged: bool

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class TailResult:
    """A one-sided tail integral over ``[t0, inf)``."""

    value: Union[float, complex]
    abs_error_est: float
    remainder_bound: float
    truncation_radius: float
    lobe_count: int
    cutoff_index: int
    lobes: tuple = ()

    def to_dict(self, include_lobes: bool = False) -> dict[str, Any]:
        out = asdict(self)
        if not include_lobes:
            out.pop("lobes")
        if isinstance(self.value, complex):
            out["value"] = [self.value.real, self.value.imag]
        return out


@dataclass(frozen=True)
class _Segment:
    value: Union[float, complex]
    error: float
    count: int


# ----------------------------------------------------------------------
# Lobe machinery
# ----------------------------------------------------------------------


def _as_phase(p: PhaseLike) -> Phase:
    if isinstance(p, Phase):
        return p
    return PolyPhase(p.drop_constant())


def _integrand(phase: Phase, kind: str) -> Callable[[np.ndarray], np.ndarray]:
    if kind == "sin":
        return lambda t: phase.sin(t) / t
    if kind == "osc":
        # weight 1, for finite intervals only
        return lambda t: phase.expi(t)
    return lambda t: phase.expi(t) / t


def _levels_between(q1: float, q2: float) -> np.ndarray:
    """Multiples of pi strictly between two phase values, in travel order."""
    lo, hi = min(q1, q2), max(q1, q2)
    m_lo = math.floor(lo / _PI) + 1
    m_hi = math.ceil(hi / _PI) - 1
    if m_hi < m_lo:
        return np.zeros(0)
    if m_hi - m_lo + 1 > get_settings().max_lobes:
        raise NotConverged(
            f"phase sweeps {m_hi - m_lo + 1} lobes on a finite piece, above max_lobes"
        )
    levels = np.arange(m_lo, m_hi + 1, dtype=float) * _PI
    return levels if q2 >= q1 else levels[::-1]


def lobe_edges(phase: Phase, a: float, b: float) -> np.ndarray:
    """Critical points of the phase and its ``m * pi`` crossings in ``[a, b]``."""
    cuts = [a] + phase.critical_points(a, b) + [b]
    edges = [np.array([a])]
    for left, right in zip(cuts[:-1], cuts[1:]):
        levels = _levels_between(phase.value(left), phase.value(right))
        if levels.size:
            edges.append(np.clip(phase.solve_levels(levels, left, right), left, right))
        edges.append(np.array([right]))
    return np.maximum.accumulate(np.concatenate(edges))


def _finite_lobes(phase: Phase, a: float, b: float, tol: float, kind: str) -> _Segment:
    if not b > a:
        return _Segment(0.0 if kind == "sin" else 0j, 0.0, 0)
    edges = lobe_edges(phase, a, b)
    vals, errs = integrate_panels(_integrand(phase, kind), edges[:-1], edges[1:], abs_tol=tol)
    return _Segment(fsum(vals), float(np.sum(errs)), int(vals.size))


def _bracket(phase: Phase, direction: int, start: float, hi: float, target: float) -> float:
    """A point past *start* where the phase has moved beyond *target*."""
    hi = max(hi, start, 1.0)
    for _ in range(_MAX_DOUBLINGS):
        if direction * (phase.value(hi) - target) > 0:
            return hi
        hi *= 2.0
    raise NotConverged(f"phase does not reach level {target:.6g} before t = {hi:.3g}")


def _level_time(phase: Phase, t0: float, level: float) -> float:
    """Solve ``q(t) = level`` on the monotone ray ``[t0, inf)``."""
    direction = phase.tail_direction()
    hi = _bracket(phase, direction, t0, max(2.0 * t0, 1.0), level)
    return float(phase.solve_levels(np.array([level]), t0, hi)[0])


def _euler_average(sums: np.ndarray, end: int, depth: int) -> Union[float, complex]:
    arr = sums[end - depth : end + 1]
    for _ in range(depth):
        arr = 0.5 * (arr[:-1] + arr[1:])
    return arr[0]


def accelerate(lobes: Any) -> tuple[Any, float] | None:
    """Accelerated sum of an alternating lobe sequence and its error estimate.

    Needs at least ten lobes with the last eight strictly decreasing in
    magnitude; otherwise returns ``None``.
    """
    lobes = np.asarray(lobes)
    n = lobes.size
    if n < 10:
        return None
    mags = np.abs(lobes[-8:])
    if not np.all(mags[:-1] > mags[1:]):
        return None
    sums = np.cumsum(lobes)
    depth = min(12, n - 2)
    last = _euler_average(sums, n - 1, depth)
    prev = _euler_average(sums, n - 2, depth)
    return last, float(abs(last - prev))


def cutoff_index(lobes: Any) -> int:
    """First index from which lobe magnitudes decrease strictly to the end."""
    mags = np.abs(np.asarray(lobes))
    i = mags.size - 1
    while i > 0 and mags[i - 1] > mags[i]:
        i -= 1
    return max(i, 0)


def _monotone_tail(phase: Phase, t0: float, tol: float, kind: str) -> TailResult:
    """``integral over [t0, inf)`` where the phase is monotone."""
    direction = phase.tail_direction()
    if direction == 0:
        raise NotConverged("phase is constant on the tail; the integral diverges")
    max_lobes = get_settings().max_lobes
    f = _integrand(phase, kind)
    q0 = phase.value(t0)
    m = math.floor(q0 / _PI) + 1 if direction > 0 else math.ceil(q0 / _PI) - 1
    left = t0
    hi = max(2.0 * t0, 1.0)
    lobes: list[Any] = []
    quad_err = 0.0
    batch = _MIN_BATCH
    result: tuple[Any, float] | None = None

    while True:
        if len(lobes) >= max_lobes:
            raise NotConverged(
                f"no convergence after {len(lobes)} lobes from t = {t0:g} (max_lobes={max_lobes})"
            )
        levels = (m + direction * np.arange(batch)) * _PI
        hi = _bracket(phase, direction, left, hi, float(levels[-1]))
        ts = np.maximum.accumulate(np.clip(phase.solve_levels(levels, left, hi), left, hi))
        edges = np.concatenate([[left], ts])
        vals, errs = integrate_panels(f, edges[:-1], edges[1:], abs_tol=tol / 4)
        lobes.extend(vals.tolist())
        quad_err += float(np.sum(errs))
        left = float(ts[-1])
        m += direction * batch
        batch = min(2 * batch, _MAX_BATCH)
        result = accelerate(lobes)
        logger.debug("tail from %g: %d lobes, radius %g, estimate %s", t0, len(lobes), left, result)
        if result is not None and result[1] + quad_err <= tol:
            break

    value, acc_err = result
    if kind == "sin":
        value = float(np.real(value))
    else:
        value = complex(value)
    return TailResult(
        value=value,
        abs_error_est=acc_err + quad_err,
        remainder_bound=float(abs(lobes[-1])),
        truncation_radius=left,
        lobe_count=len(lobes),
        cutoff_index=cutoff_index(lobes),
        lobes=tuple(lobes),
    )


def one_sided_tail(phase: PhaseLike, t0: float, tol: float, kind: str = "exp") -> TailResult:
    """``integral over [t0, inf) of g(q(t)) / t dt`` with ``g`` = sin or exp(i.)."""
    if kind not in ("sin", "exp"):
        raise ValueError(f"kind must be 'sin' or 'exp', got {kind!r}")
    if not t0 > 0 and kind == "exp":
        raise InvalidRange("complex tails need t0 > 0")
    phase = _as_phase(phase)
    tol = check_tol(tol)
    turn = max(t0, phase.last_critical_point(t0))
    head = _finite_lobes(phase, t0, turn, tol / 2, kind)
    tail = _monotone_tail(phase, turn, tol / 2, kind)
    return TailResult(
        value=head.value + tail.value,
        abs_error_est=head.error + tail.abs_error_est,
        remainder_bound=tail.remainder_bound,
        truncation_radius=tail.truncation_radius,
        lobe_count=head.count + tail.lobe_count,
        cutoff_index=tail.cutoff_index,
        lobes=tail.lobes,
    )


# ----------------------------------------------------------------------
# Public operations
# ----------------------------------------------------------------------


def _resolve_tol(tol: float | None) -> float:
    return check_tol(get_settings().tol if tol is None else tol)


def _finish(value: float, err: float, radius: float, lobes: int, tol: float) -> PVResult:
    converged = err <= tol
    if not converged:
        logger.warning("principal value error estimate %.3g exceeds tol %.3g", err, tol)
    return PVResult(float(value), float(err), float(radius), int(lobes), converged)


def _odd_half_line(phase: Phase, tol: float) -> tuple[float, float, float, int]:
    """``integral over (0, inf) of sin(q(t))/t`` for an odd phase."""
    turn = phase.last_critical_point(0.0)
    head = _finite_lobes(phase, 0.0, turn, tol / 2, "sin")
    tail = _monotone_tail(phase, turn, tol / 2, "sin")
    value = float(head.value) + float(tail.value)
    return value, head.error + tail.abs_error_est, tail.truncation_radius, head.count + tail.lobe_count


def _symmetric_integrand(p: Poly) -> Callable[[np.ndarray], np.ndarray]:
    even = PolyPhase(p.even_part())
    odd = PolyPhase(p.odd_part())
    # (exp(i p(t)) - exp(i p(-t))) / t, free of the 1/t singularity
    return lambda t: 2j * even.expi(t) * odd.sin(t) / t


def symmetric_integral(p: Poly, a: float, b: float, tol: float) -> tuple[complex, float]:
    """``integral over a <= |t| <= b of exp(i p(t)) dt / t`` for ``0 <= a < b``
    with a moderate number of lobes, as ``(value, error)``."""
    if not 0 <= a < b:
        raise InvalidRange(f"need 0 <= a < b, got a={a}, b={b}")
    pos = PolyPhase(p.drop_constant())
    neg = pos.reflect()
    edges = np.unique(np.concatenate([lobe_edges(pos, a, b), lobe_edges(neg, a, b)]))
    vals, errs = integrate_panels(_symmetric_integrand(pos.poly), edges[:-1], edges[1:], abs_tol=tol)
    return complex(fsum(vals)), float(np.sum(errs))


def oscillatory_integral(p: PhaseLike, a: float, b: float, tol: float | None = None) -> complex:
    """``integral over [a, b] of exp(i p(t)) dt`` by lobe summation."""
    if not a < b:
        raise InvalidRange(f"need a < b, got [{a}, {b}]")
    tol = _resolve_tol(tol)
    phase = p if isinstance(p, Phase) else PolyPhase(p)
    return complex(_finite_lobes(phase, a, b, tol, "osc").value)


def _split_radius(pos: Phase, neg: Phase) -> float:
    turn = max(pos.last_critical_point(0.0), neg.last_critical_point(0.0))
    if turn > 0:
        return turn
    return min(_level_time(ph, 0.0, ph.tail_direction() * _PI) for ph in (pos, neg))


def pv_complex(p: PhaseLike, tol: float | None = None) -> tuple[complex, float, float, int]:
    """The complex principal value with ``(value, error, radius, lobes)``."""
    tol = _resolve_tol(tol)
    phase = _as_phase(p)
    if phase.is_constant or phase.parity == "even":
        return 0j, 0.0, 0.0, 0
    if phase.parity == "odd":
        s, err, radius, count = _odd_half_line(phase, tol / 2)
        return 2j * s, 2 * err, radius, count
    assert isinstance(phase, PolyPhase)
    poly = phase.poly
    pos, neg = phase, phase.reflect()
    split = _split_radius(pos, neg)
    edges = np.unique(np.concatenate([lobe_edges(pos, 0.0, split), lobe_edges(neg, 0.0, split)]))
    vals, errs = integrate_panels(_symmetric_integrand(poly), edges[:-1], edges[1:], abs_tol=tol / 3)
    t_pos = one_sided_tail(pos, split, tol / 3, "exp")
    t_neg = one_sided_tail(neg, split, tol / 3, "exp")
    value = complex(fsum(vals)) + complex(t_pos.value) - complex(t_neg.value)
    err = float(np.sum(errs)) + t_pos.abs_error_est + t_neg.abs_error_est
    radius = max(t_pos.truncation_radius, t_neg.truncation_radius)
    return value, err, radius, int(vals.size) + t_pos.lobe_count + t_neg.lobe_count


def pv_integral(p: PhaseLike, tol: float | None = None) -> PVResult:
    """``|p.v. integral over R of exp(i p(t)) dt / t|``.

    The constant term of a polynomial phase is dropped (it only rotates the
    integral).
    """
    tol = _resolve_tol(tol)
    phase = _as_phase(p)
    if phase.is_constant or phase.parity == "even":
        return PVResult(0.0, 0.0, 0.0, 0, True)
    value, err, radius, count = pv_complex(phase, tol)
    return _finish(abs(value), err, radius, count, tol)


def pv_integral_extremal(n: int, k: int | None = None, tol: float | None = None) -> PVResult:
    """``I(P_k)`` for profile parameter ``n`` through :class:`ExtremalPhase`."""
    return pv_integral(extremal_phase(n, k), tol)


def _segment(phase: Phase, a: float, b: float, tol: float, kind: str) -> Union[float, complex]:
    """``integral over [a, b]``, directly or as a difference of tails."""
    cuts = [a] + phase.critical_points(a, b) + [b]
    qs = [phase.value(x) for x in cuts]
    sweep = sum(abs(q2 - q1) for q1, q2 in zip(qs[:-1], qs[1:])) / _PI
    if sweep <= _SEGMENT_LOBE_LIMIT:
        return _finite_lobes(phase, a, b, tol, kind).value
    return one_sided_tail(phase, a, tol / 2, kind).value - one_sided_tail(phase, b, tol / 2, kind).value


def segment_integral(
    p: PhaseLike, a: float, b: float = math.inf, tol: float | None = None
) -> complex:
    """``integral over [a, b] of exp(i p(t)) dt / t`` for ``0 < a < b <= inf``."""
    if not 0 < a < b:
        raise InvalidRange(f"need 0 < a < b, got a={a}, b={b}")
    tol = _resolve_tol(tol)
    phase = _as_phase(p)
    if phase.is_constant:
        if math.isinf(b):
            raise NotConverged("constant phase: exp(ic)/t is not integrable at infinity")
        return complex(math.log(b / a))
    if math.isinf(b):
        return complex(one_sided_tail(phase, a, tol, "exp").value)
    return complex(_segment(phase, a, b, tol, "exp"))


def pv_integral_truncated(p: PhaseLike, eps: float, R: float, tol: float | None = None) -> complex:
    """``integral over eps <= |t| <= R of exp(i p(t)) dt / t``."""
    if not 0 < eps < R:
        raise InvalidRange(f"need 0 < eps < R, got eps={eps}, R={R}")
    tol = _resolve_tol(tol)
    phase = _as_phase(p)
    if phase.is_constant or phase.parity == "even":
        return 0j
    if phase.parity == "odd":
        return 2j * float(np.real(_segment(phase, eps, R, tol / 2, "sin")))
    assert isinstance(phase, PolyPhase)
    pos, neg = phase, phase.reflect()
    split = min(max(eps, _split_radius(pos, neg)), R)
    total = 0j
    if split > eps:
        edges = np.unique(np.concatenate([lobe_edges(pos, eps, split), lobe_edges(neg, eps, split)]))
        vals, _ = integrate_panels(_symmetric_integrand(phase.poly), edges[:-1], edges[1:], abs_tol=tol / 3)
        total += complex(fsum(vals))
    if R > split:
        total += complex(_segment(pos, split, R, tol / 3, "exp"))
        total -= complex(_segment(neg, split, R, tol / 3, "exp"))
    return total


def unit_interval_integral(p: PhaseLike, tol: float | None = None) -> float:
    """Signed ``integral over [0, 1] of sin(p(t))/t dt``; the integrand is
    continuous at 0 with value ``p'(0)``."""
    tol = _resolve_tol(tol)
    phase = _as_phase(p)
    if phase.is_constant:
        return 0.0
    return float(np.real(_finite_lobes(phase, 0.0, 1.0, tol, "sin").value))


def unit_interval_part(p: PhaseLike, tol: float | None = None) -> float:
    """``|integral over [0, 1] of sin(p(t))/t dt|``."""
    return abs(unit_interval_integral(p, tol))


def tail_part(p: PhaseLike, T0: float = 1.0, tol: float | None = None) -> TailResult:
    """``integral over [T0, inf) of sin(p(t))/t dt`` by lobe summation."""
    if T0 < 1:
        raise InvalidRange(f"tail must start at T0 >= 1, got {T0}")
    tol = _resolve_tol(tol)
    phase = _as_phase(p)
    if phase.is_constant:
        raise NotConverged("constant phase: sin(c)/t is not integrable at infinity")
    return one_sided_tail(phase, T0, tol, "sin")
