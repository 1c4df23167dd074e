"""Sublevel sets of polynomials and the interpolation bound on their size.

``E = {t in [lo, hi] : |h(t)| <= alpha}`` is computed exactly from the roots of
``h - alpha`` and ``h + alpha``. Its measure is bounded through Lagrange
interpolation at ``n + 1`` well-spread points of ``E``:

    |E| <= (M_n * alpha / max_k |b_k|) ** (1/n)

with ``M_n = max_k C(n, n-k) 2**(2n-k) n**n / n!`` computed exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

from src.errors import DuplicatePoints, EmptySet, InvalidRange, ZeroPolynomial
from src.poly import Poly, evaluate, isolate_roots

logger = logging.getLogger(__name__)

Interval = tuple[float, float]


@dataclass(frozen=True)
class SublevelResult:
    """Exact sublevel measure with the interpolation bound."""

    measure: float
    components: tuple[Interval, ...] = ()
    bound: float = math.inf
    constant_Mn: Fraction = Fraction(1)
    degenerate: bool = False
    alpha: float = 0.0
    lo: float = 1.0
    hi: float = 2.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "measure": self.measure,
            "components": [list(c) for c in self.components],
            "bound": self.bound,
            "constant_Mn": str(self.constant_Mn),
            "degenerate": self.degenerate,
            "alpha": self.alpha,
            "lo": self.lo,
            "hi": self.hi,
        }


def vinogradov_constant(n: int) -> Fraction:
    """``M_n = max over k of C(n, n-k) * 2**(2n-k) * n**n / n!``, exactly."""
    if n < 1:
        raise ValueError(f"degree must be >= 1, got {n}")
    scale = Fraction(n**n, math.factorial(n))
    return max(math.comb(n, n - k) * 2 ** (2 * n - k) * scale for k in range(n + 1))


def _max_coeff(h: Poly) -> float:
    return max(abs(float(c)) for c in h.coeffs)


def vinogradov_bound(h: Poly, alpha: float) -> float:
    """``(M_n * alpha / max_k |b_k|) ** (1/n)`` with ``n = deg h``."""
    if h.is_zero:
        raise ZeroPolynomial("sublevel bound is undefined for the zero polynomial")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    n = h.degree
    top = _max_coeff(h)
    if n == 0:
        return math.inf if alpha >= top else 0.0
    m = vinogradov_constant(n)
    log_m = math.log(m.numerator) - math.log(m.denominator)
    return math.exp((log_m + math.log(alpha) - math.log(top)) / n)


def sublevel_measure(h: Poly, alpha: float, lo: float = 1.0, hi: float = 2.0) -> SublevelResult:
    """Exact measure of ``{t in [lo, hi] : |h(t)| <= alpha}``.

    The set is closed: a root of ``h -+ alpha`` that no interval covers is a
    tangential touch and comes back as a degenerate ``(t, t)`` component
    with zero length. The zero polynomial gives the whole interval with
    ``degenerate=True``.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if not lo < hi:
        raise InvalidRange(f"need lo < hi, got [{lo}, {hi}]")
    if h.is_zero:
        return SublevelResult(
            measure=hi - lo, components=((lo, hi),), bound=math.inf,
            degenerate=True, alpha=alpha, lo=lo, hi=hi,
        )
    exact = h.to_exact()
    a = Fraction(alpha)
    roots: set[float] = set()
    if exact.degree >= 1:
        for shifted in (exact.shift(-a), exact.shift(a)):
            if not shifted.is_zero:
                roots.update(isolate_roots(shifted, lo, hi).values())
    pts = sorted(c for c in roots | {lo, hi} if lo <= c <= hi)

    comps: list[list[float]] = []
    for u, v in zip(pts[:-1], pts[1:]):
        if v <= u:
            continue
        mid = Fraction(u) / 2 + Fraction(v) / 2
        if abs(evaluate(exact, mid)) <= a:
            if comps and comps[-1][1] == u:
                comps[-1][1] = v
            else:
                comps.append([u, v])
    touches = [r for r in roots if lo <= r <= hi and not any(u <= r <= v for u, v in comps)]
    if touches:
        logger.debug("sublevel set has %d touch point(s)", len(touches))
        comps = sorted(comps + [[r, r] for r in touches])
    components = tuple((float(u), float(v)) for u, v in comps)
    measure = math.fsum(v - u for u, v in components)
    n = exact.degree
    return SublevelResult(
        measure=measure,
        components=components,
        bound=vinogradov_bound(exact, alpha),
        constant_Mn=vinogradov_constant(n) if n >= 1 else Fraction(1),
        alpha=alpha,
        lo=lo,
        hi=hi,
    )


def slide_and_select(components: Sequence[Interval], n: int) -> list[float]:
    """``n + 1`` points of the union, equally spaced once the gaps are closed.

    Components are slid together left to right into ``[0, L]``; the points
    ``j * L / n`` are mapped back, so ``|x_j - x_k| >= L |j - k| / n``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    comps = sorted((float(a), float(b)) for a, b in components if b > a)
    total = math.fsum(b - a for a, b in comps)
    if not total > 0:
        raise EmptySet("components have zero total length")
    points: list[float] = []
    for j in range(n + 1):
        s = total * j / n
        offset = 0.0
        for idx, (a, b) in enumerate(comps):
            length = b - a
            if s <= offset + length or idx == len(comps) - 1:
                points.append(min(a + max(s - offset, 0.0), b))
                break
            offset += length
    return points


def elementary_symmetric(values: Sequence[Any]) -> list[Any]:
    """``[sigma_0, sigma_1, ..., sigma_m]`` of the given values."""
    e: list[Any] = [1] + [0] * len(values)
    for x in values:
        for m in range(len(values), 0, -1):
            e[m] = e[m] + e[m - 1] * x
    return e


def _is_rational(v: Any) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def lagrange_coefficients(points: Sequence[Any], values: Sequence[Any]) -> Poly:
    """Coefficients of the interpolant through ``(points[j], values[j])``.

    ``b_k = sum_j y_j (-1)**(n-k) sigma_{n-k}(x without x_j) / prod_{i != j}(x_j - x_i)``,
    evaluated exactly. Rational inputs give an exact polynomial, float inputs a
    float one.
    """
    if len(points) != len(values):
        raise ValueError("points and values must have the same length")
    if not points:
        raise ValueError("need at least one point")
    xs = [Fraction(p) for p in points]
    ys = [Fraction(v) for v in values]
    if len(set(xs)) != len(xs):
        raise DuplicatePoints("interpolation points must be pairwise distinct")
    n = len(xs) - 1
    coeffs = [Fraction(0)] * (n + 1)
    for j, (xj, yj) in enumerate(zip(xs, ys)):
        if yj == 0:
            continue
        others = xs[:j] + xs[j + 1 :]
        w = Fraction(1)
        for xi in others:
            w *= xj - xi
        sig = elementary_symmetric(others)
        for k in range(n + 1):
            sign = -1 if (n - k) % 2 else 1
            coeffs[k] += yj * sign * sig[n - k] / w
    if all(_is_rational(v) for v in list(points) + list(values)):
        return Poly.exact(coeffs)
    return Poly.from_floats(coeffs)


def sigma_bound_check(points: Sequence[float]) -> float:
    """Largest ratio ``sigma_{n-k}(x without x_j) / (C(n, n-k) 2**(n-k))``.

    At most 1 whenever every point lies in ``[0, 2]``.
    """
    xs = [Fraction(p) for p in points]
    n = len(xs) - 1
    worst = 0.0
    for j in range(n + 1):
        sig = elementary_symmetric(xs[:j] + xs[j + 1 :])
        for k in range(n + 1):
            ratio = sig[n - k] / (math.comb(n, n - k) * 2 ** (n - k))
            worst = max(worst, float(ratio))
    return worst


def coefficient_bound(points: Sequence[float], A: float) -> list[float]:
    """Bound on every ``|b_k|`` of a degree-``n`` polynomial with ``|h| <= A``
    at the ``n + 1`` given points, from the Lagrange formula."""
    xs = [Fraction(p) for p in points]
    if len(set(xs)) != len(xs):
        raise DuplicatePoints("points must be pairwise distinct")
    n = len(xs) - 1
    bounds = [Fraction(0)] * (n + 1)
    for j, xj in enumerate(xs):
        others = xs[:j] + xs[j + 1 :]
        w = Fraction(1)
        for xi in others:
            w *= abs(xj - xi)
        sig = elementary_symmetric([abs(x) for x in others])
        for k in range(n + 1):
            bounds[k] += sig[n - k] / w
    return [float(b) * A for b in bounds]


def spacing_coefficient_bound(n: int, A: float, length: float) -> list[float]:
    """The closed form ``A C(n, n-k) 2**(2n-k) n**n / (n! L**n)`` for points in
    ``[0, 2]`` spread as :func:`slide_and_select` spreads them."""
    if not length > 0:
        raise EmptySet("spacing bound needs positive length")
    scale = n**n / math.factorial(n) / length**n
    return [A * math.comb(n, n - k) * 2 ** (2 * n - k) * scale for k in range(n + 1)]
