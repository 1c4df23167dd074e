"""Machinery behind the logarithmic upper bound.

Four pieces, each computed rather than estimated:

- :func:`vdc_check` measures ``|integral over [a, b] of exp(i lam phi)|``
  against ``lam ** (-1/k)`` once ``|phi^(k)| >= 1`` has been verified exactly.
- :func:`split_at_half` cuts a phase into its low and high halves and rescales
  the argument so the largest high coefficient is exactly 1.
- :func:`small_derivative_log_measure` is the ``dt/t`` measure of the set
  where ``|p'|`` is small, with its dyadic certificate.
- :func:`kd_trace` runs the halving recursion and records every piece of
  every level.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence, Union

import numpy as np

from src.config import get_settings
from src.errors import (
    DegenerateDerivative,
    DegreeTooSmall,
    InvalidRange,
    PreconditionFailed,
    check_tol,
)
from src.phase import PolyPhase
from src.poly import Poly, derivative, evaluate, isolate_roots, root_bound, scale_argument
from src.pvint import oscillatory_integral, segment_integral, symmetric_integral
from src.sublevel import sublevel_measure

logger = logging.getLogger(__name__)

Interval = tuple[float, float]


# ----------------------------------------------------------------------
# Van der Corput ratio checks
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class VdCCheck:
    """``|integral over [a, b] of exp(i lam phi)|`` and its scaled ratio."""

    k: int
    lam: float
    interval: Interval
    integral_modulus: float
    ratio: float
    precondition_verified: bool = True
    min_derivative: float = 1.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "lambda": self.lam,
            "interval": list(self.interval),
            "integral_modulus": self.integral_modulus,
            "ratio": self.ratio,
            "ratio_over_k": self.ratio / self.k,
            "precondition_verified": self.precondition_verified,
            "min_derivative": self.min_derivative,
        }


def _cut_points(g: Poly, levels: Sequence[Fraction], a: float, b: float) -> list[float]:
    cuts = {a, b}
    if g.degree >= 1:
        for level in levels:
            shifted = g.shift(-level)
            if not shifted.is_zero:
                cuts.update(isolate_roots(shifted, a, b).values())
    return sorted(c for c in cuts if a <= c <= b)


def _verify_floor(g: Poly, a: float, b: float) -> float:
    """Smallest ``|g|`` seen at the cut points; raises if ``|g| < 1`` anywhere."""
    if g.is_zero:
        raise PreconditionFailed("derivative vanishes identically", point=a)
    pts = _cut_points(g, (Fraction(1), Fraction(-1)), a, b)
    seen = [abs(float(evaluate(g, Fraction(x)))) for x in pts]
    for u, v in zip(pts[:-1], pts[1:]):
        if v <= u:
            continue
        mid = Fraction(u) / 2 + Fraction(v) / 2
        val = abs(evaluate(g, mid))
        if val < 1:
            raise PreconditionFailed(
                f"|phi^(k)| = {float(val):.6g} < 1 at t = {float(mid):.6g}", point=float(mid)
            )
        seen.append(float(val))
    return min(seen)


def _verify_monotone(h: Poly, a: float, b: float) -> None:
    """``h`` (the second derivative) keeps one sign on ``(a, b)``."""
    if h.is_zero or h.degree == 0:
        return
    pts = _cut_points(h, (Fraction(0),), a, b)
    signs: list[tuple[float, int]] = []
    for u, v in zip(pts[:-1], pts[1:]):
        if v <= u:
            continue
        s = evaluate(h, Fraction(u) / 2 + Fraction(v) / 2)
        if s != 0:
            signs.append((u, 1 if s > 0 else -1))
    for (_, s1), (u2, s2) in zip(signs[:-1], signs[1:]):
        if s1 != s2:
            raise PreconditionFailed(f"phi' is not monotone: phi'' changes sign at t = {u2:.6g}", point=u2)


def vdc_check(
    phi: Poly, k: int, lam: float, a: float, b: float, tol: float | None = None
) -> VdCCheck:
    """Verify ``|phi^(k)| >= 1`` on ``[a, b]`` exactly, then integrate.

    For ``k = 1`` the slope must also be monotone. Raises
    :class:`PreconditionFailed` with a witness point otherwise.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    if not a < b:
        raise InvalidRange(f"need a < b, got [{a}, {b}]")
    tol = check_tol(get_settings().tol if tol is None else tol)
    exact = phi.to_exact()
    floor = _verify_floor(derivative(exact, k), a, b)
    if k == 1:
        _verify_monotone(derivative(exact, 2), a, b)

    value = oscillatory_integral(exact * Fraction(lam), a, b, tol)
    modulus = abs(value)
    ratio = modulus * lam ** (1.0 / k)
    logger.debug("vdc k=%d lam=%g on [%g, %g]: |I| = %.6g, ratio %.4g", k, lam, a, b, modulus, ratio)
    return VdCCheck(
        k=k,
        lam=float(lam),
        interval=(float(a), float(b)),
        integral_modulus=modulus,
        ratio=ratio,
        precondition_verified=True,
        min_derivative=floor,
    )


@dataclass(frozen=True)
class VdCSuite:
    """Ratios over a seeded family of admissible phases."""

    seed: int
    checks: tuple[VdCCheck, ...] = ()

    @property
    def max_ratio_over_k(self) -> float:
        return max((c.ratio / c.k for c in self.checks), default=0.0)

    def by_lambda(self, min_k: int = 1) -> dict[float, float]:
        """Largest ``ratio / k`` at each ``lam`` over checks with ``k >= min_k``."""
        out: dict[float, float] = {}
        for c in self.checks:
            if c.k < min_k:
                continue
            out[c.lam] = max(out.get(c.lam, 0.0), c.ratio / c.k)
        return out

    def lambda_growth(self, min_k: int = 2) -> float:
        """``by_lambda`` at the largest ``lam`` over its value at the smallest.

        For ``k = 1`` the ratio keeps oscillating in ``lam`` without settling,
        so the trend is read from ``k >= 2`` by default. NaN when fewer than
        two ``lam`` values are covered.
        """
        by = self.by_lambda(min_k)
        if len(by) < 2:
            return math.nan
        low = by[min(by)]
        high = by[max(by)]
        return high / low if low > 0 else math.inf

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "count": len(self.checks),
            "max_ratio_over_k": self.max_ratio_over_k,
            "by_lambda": {repr(lam): v for lam, v in sorted(self.by_lambda().items())},
            "lambda_growth": self.lambda_growth(),
            "checks": [c.to_dict() for c in self.checks],
        }


def admissible_phase(rng: np.random.Generator, k: int) -> Poly:
    """``s t^k/k! + c t^(k+1)/(k+1)!`` plus small lower terms.

    With ``s`` in ``[1, 2]`` and ``c`` in ``[0, 1]`` the k-th derivative is
    ``s + c t >= 1`` on ``[0, 1]`` and the slope is monotone when ``k = 1``.
    """
    s = Fraction(float(rng.uniform(1.0, 2.0)))
    c = Fraction(float(rng.uniform(0.0, 1.0)))
    coeffs = [Fraction(0)] + [Fraction(float(rng.uniform(-0.1, 0.1))) for _ in range(1, k)]
    coeffs += [s / math.factorial(k), c / math.factorial(k + 1)]
    return Poly.exact(coeffs)


def vdc_suite(
    seed: int,
    count: int = 10,
    lambdas: Sequence[float] = (1e2, 1e4, 1e6),
    k_max: int = 6,
    tol: float | None = None,
) -> VdCSuite:
    """Run :func:`vdc_check` on ``count`` seeded phases at every ``lam``."""
    rng = np.random.default_rng(seed)
    checks = []
    for _ in range(count):
        k = int(rng.integers(1, k_max + 1))
        phi = admissible_phase(rng, k)
        for lam in lambdas:
            checks.append(vdc_check(phi, k, lam, 0.0, 1.0, tol))
    suite = VdCSuite(seed=seed, checks=tuple(checks))
    logger.info("vdc suite seed=%d: %d checks, max ratio/k %.4g", seed, len(checks), suite.max_ratio_over_k)
    return suite


# ----------------------------------------------------------------------
# Low/high split with normalisation
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SplitResult:
    """``p(lam t) = Q(t) + R(t)`` with ``max |high coefficient| = 1``."""

    Q: Poly
    Rpart: Poly
    lam_norm: float
    all_high_zero: bool = False
    tail_coeff_sum: float = 0.0
    k: int = 0
    degree_bound: int = 0

    @property
    def scaled(self) -> Poly:
        return self.Q + self.Rpart


def split_at_half(p: Poly, degree_bound: int | None = None) -> SplitResult:
    """Split at ``k = degree_bound // 2`` (the degree by default).

    ``Q`` keeps the powers ``1..k`` and ``Rpart`` the powers ``k+1..d``, both
    after the argument scaling ``t -> lam_norm t`` that brings the largest high
    coefficient to modulus 1. That coefficient is then set to exactly ``+-1``
    and any other high coefficient that rounding left above 1 in modulus is
    clamped to ``+-1``; every other coefficient is that of ``p(lam_norm t)``.
    When every high coefficient vanishes, ``lam_norm = 1`` and
    ``all_high_zero`` is set.
    """
    if p.coefficient(0) != 0:
        raise ValueError("phase must have no constant term")
    d = p.degree if degree_bound is None else degree_bound
    if d < 2:
        raise DegreeTooSmall(f"split needs degree >= 2, got {d}")
    if p.degree > d:
        raise ValueError(f"degree bound {d} is below the degree {p.degree}")
    k = d // 2
    high = p.slice(k + 1, d)
    if high.is_zero:
        return SplitResult(Q=p.slice(1, k), Rpart=high, lam_norm=1.0, all_high_zero=True, k=k, degree_bound=d)

    lam = min(abs(float(c)) ** (-1.0 / j) for j, c in enumerate(p.coeffs) if j > k and c != 0)
    coeffs = list(scale_argument(p, lam).coeffs)
    top = max(range(k + 1, len(coeffs)), key=lambda j: abs(coeffs[j]))
    one = coeffs[top] / abs(coeffs[top])
    for j in range(k + 1, len(coeffs)):
        if j == top or abs(coeffs[j]) > 1:
            coeffs[j] = one if j == top else coeffs[j] / abs(coeffs[j])
    scaled = Poly(tuple(coeffs), p.representation)
    tail = 2.0 * math.fsum(abs(float(c)) / j for j, c in enumerate(coeffs) if j > k)
    return SplitResult(
        Q=scaled.slice(1, k),
        Rpart=scaled.slice(k + 1, d),
        lam_norm=lam,
        all_high_zero=False,
        tail_coeff_sum=tail,
        k=k,
        degree_bound=d,
    )


# ----------------------------------------------------------------------
# Small-derivative sets
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SmallDerivativeMeasure:
    """``integral over {t >= 1 : |p'(t)| <= alpha} of dt/t`` with certificates."""

    log_measure: float
    dyadic_certificate: float
    dyadic_blocks: tuple[float, ...] = ()
    vinogradov_sum: float = math.inf
    components: tuple[Interval, ...] = ()
    alpha: float = 0.0
    t_max: float = 1.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "log_measure": self.log_measure,
            "dyadic_certificate": self.dyadic_certificate,
            "dyadic_blocks": list(self.dyadic_blocks),
            "vinogradov_sum": self.vinogradov_sum,
            "components": [list(c) for c in self.components],
            "alpha": self.alpha,
            "t_max": self.t_max,
        }


def _small_set_end(g: Poly, alpha: Fraction) -> float:
    """Past this point ``|g| > alpha`` and ``g`` is monotone."""
    bounds = [root_bound(g.shift(-alpha)), root_bound(g.shift(alpha)), root_bound(derivative(g))]
    return max(1.0, *bounds) + 1.0


def small_derivative_log_measure(p: Poly, alpha: float) -> SmallDerivativeMeasure:
    """Exact ``dt/t`` measure of ``{t >= 1 : |p'(t)| <= alpha}``.

    The dyadic certificate sums ``|{s in [1, 2] : |p'(2**m s)| <= alpha}|`` over
    the blocks covering the set and is never smaller than the log measure.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if p.degree <= 1:
        raise DegenerateDerivative("p' is constant; its sublevel sets are degenerate")
    g = derivative(p.to_exact())
    t_max = _small_set_end(g, Fraction(alpha))
    found = sublevel_measure(g, alpha, 1.0, t_max)
    log_measure = math.fsum(math.log(v / u) for u, v in found.components)

    blocks = []
    bounds = []
    for m in range(max(1, math.ceil(math.log2(t_max)))):
        res = sublevel_measure(scale_argument(g, 2**m), alpha, 1.0, 2.0)
        blocks.append(res.measure)
        bounds.append(res.bound)
    return SmallDerivativeMeasure(
        log_measure=log_measure,
        dyadic_certificate=math.fsum(blocks),
        dyadic_blocks=tuple(blocks),
        vinogradov_sum=math.fsum(bounds),
        components=found.components,
        alpha=float(alpha),
        t_max=t_max,
    )


# ----------------------------------------------------------------------
# Halving recursion
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class KdTrace:
    """One level of the halving recursion and everything below it."""

    d: int
    actual_degree: int
    alpha_used: float
    I1: float
    I2_plus: float
    I2_minus: float
    small_deriv_log_measure: float
    oscillatory_piece: float
    tail_coeff_sum: float
    total: float
    level_increment: float
    decomposed: bool
    lam_norm: float = 1.0
    recursion_child: Optional[KdTrace] = None
    sides: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return 0 if self.recursion_child is None else 1 + self.recursion_child.depth

    def levels(self) -> list[KdTrace]:
        out, node = [], self
        while node is not None:
            out.append(node)
            node = node.recursion_child
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "actual_degree": self.actual_degree,
            "alpha_used": self.alpha_used,
            "I1": self.I1,
            "I2_plus": self.I2_plus,
            "I2_minus": self.I2_minus,
            "small_deriv_log_measure": self.small_deriv_log_measure,
            "oscillatory_piece": self.oscillatory_piece,
            "tail_coeff_sum": self.tail_coeff_sum,
            "total": self.total,
            "level_increment": self.level_increment,
            "decomposed": self.decomposed,
            "lam_norm": self.lam_norm,
            "sides": self.sides,
            "recursion_child": None if self.recursion_child is None else self.recursion_child.to_dict(),
        }


def auto_alpha(d: int) -> float:
    """``d ** ((d - 1) / d)``."""
    return float(d) ** ((d - 1) / d) if d >= 1 else 1.0


def _oscillatory_piece(side: Poly, small: SmallDerivativeMeasure, tol: float) -> float:
    """Sum of ``|integral of exp(i p)/t|`` over the monotone pieces of ``{t >= 1 : |p'| > alpha}``."""
    turns = PolyPhase(derivative(side)).critical_points(1.0, small.t_max)
    cuts = sorted({1.0, small.t_max, *turns, *(x for c in small.components for x in c)})
    pieces: list[Interval] = []
    for u, v in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (u + v)
        if v > u and not any(a <= mid <= b for a, b in small.components):
            pieces.append((u, v))
    share = tol / (len(pieces) + 1)
    total = math.fsum(abs(segment_integral(side, u, v, share)) for u, v in pieces)
    return total + abs(segment_integral(side, small.t_max, math.inf, share))


def _level_pieces(p: Poly, tol: float) -> tuple[complex, complex, complex]:
    inner, _ = symmetric_integral(p, 0.0, 1.0, tol / 3)
    right = segment_integral(p, 1.0, math.inf, tol / 3)
    left = segment_integral(p.reflect(), 1.0, math.inf, tol / 3)
    return inner, right, left


def _zero_trace(d: int, alpha: Union[str, float], tol: float) -> KdTrace:
    child = kd_trace(Poly.zero(), alpha, tol, d // 2) if d > 1 else None
    return KdTrace(
        d=d, actual_degree=-1, alpha_used=0.0, I1=0.0, I2_plus=0.0, I2_minus=0.0,
        small_deriv_log_measure=0.0, oscillatory_piece=0.0, tail_coeff_sum=0.0,
        total=0.0, level_increment=0.0, decomposed=False, recursion_child=child,
    )


def kd_trace(
    p: Poly,
    alpha: Union[str, float] = "auto",
    tol: float | None = None,
    degree_bound: int | None = None,
) -> KdTrace:
    """Decompose ``I(p)`` level by level down to degree 1.

    The root level uses the power of two at or above ``deg p`` as its degree
    bound; each child gets half of it and the low part ``Q``. A level whose
    phase has constant slope is measured but not decomposed.
    """
    tol = check_tol(get_settings().tol if tol is None else tol)
    if isinstance(alpha, str) and alpha != "auto":
        raise ValueError(f"alpha must be a number or 'auto', got {alpha!r}")
    if not isinstance(alpha, str) and not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    p0 = p.drop_constant()
    if p0.is_zero:
        return _zero_trace(degree_bound or 1, alpha, tol)
    d_act = p0.degree
    bound = degree_bound if degree_bound is not None else (1 if d_act <= 1 else 2 ** (d_act - 1).bit_length())
    if bound < d_act:
        raise ValueError(f"degree bound {bound} is below the degree {d_act}")

    decomposed = bound >= 2 and d_act >= 2
    sides: dict[str, dict[str, float]] = {}
    small_total = osc_total = tail_sum = 0.0
    lam = 1.0
    if decomposed:
        split = split_at_half(p0, bound)
        phase_poly, child_poly = split.scaled, split.Q
        lam, tail_sum = split.lam_norm, split.tail_coeff_sum
        alpha_used = auto_alpha(d_act) if alpha == "auto" else float(alpha)
        for name, side in (("plus", phase_poly), ("minus", phase_poly.reflect())):
            small = small_derivative_log_measure(side, alpha_used)
            osc = _oscillatory_piece(side, small, tol / 4)
            sides[name] = {
                "small_deriv_log_measure": small.log_measure,
                "dyadic_certificate": small.dyadic_certificate,
                "oscillatory_piece": osc,
            }
            small_total += small.log_measure
            osc_total += osc
    else:
        phase_poly, child_poly = p0, p0
        alpha_used = auto_alpha(d_act) if alpha == "auto" else float(alpha)

    inner, right, left = _level_pieces(phase_poly, tol)
    total = abs(inner + right - left)
    child = kd_trace(child_poly, alpha, tol, bound // 2) if bound > 1 else None
    increment = total - (child.total if child is not None else 0.0)
    logger.info(
        "level d=%d (degree %d): total %.6g, I1 %.4g, I2+ %.4g, I2- %.4g, increment %.4g",
        bound, d_act, total, abs(inner), abs(right), abs(left), increment,
    )
    return KdTrace(
        d=bound,
        actual_degree=d_act,
        alpha_used=alpha_used,
        I1=abs(inner),
        I2_plus=abs(right),
        I2_minus=abs(left),
        small_deriv_log_measure=small_total,
        oscillatory_piece=osc_total,
        tail_coeff_sum=tail_sum,
        total=total,
        level_increment=increment,
        decomposed=decomposed,
        lam_norm=lam,
        recursion_child=child,
        sides=sides,
    )
