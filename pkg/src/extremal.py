"""Extremal odd polynomials built by smoothing a trapezoid profile.

The profile ``f`` is the odd piecewise-linear function that ramps from 0 to 1
on ``[0, 1/n]``, stays at 1 up to ``1 - 1/n`` and ramps back to 0 at 1. The
kernel ``phi_k(y) = c_k (1 - y**2/4) ** (k*k)`` is a polynomial approximation to
the identity on ``[-2, 2]``, normalised to unit mass. Their convolution

    P_k(t) = integral over [-1, 1] of f(x) * phi_k(t - x) dx

is an odd polynomial of degree ``2k**2 - 1``. It is held two ways: an exact
rational coefficient form, and a quadrature (convolution) evaluator that stays
accurate where the coefficient form cancels catastrophically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Any

import numpy as np
from scipy.special import betaln

from src.config import get_settings
from src.errors import InvalidRange, check_tol
from src.poly import HornerEvaluator, Poly, to_descriptor
from src.quadrature import NODES, gauss_kronrod_panels, integrate

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# Profile
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TrapezoidProfile:
    """The odd trapezoid ``f`` with ramps of width ``1/n``."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"profile parameter n must be >= 2, got {self.n}")

    @property
    def h(self) -> Fraction:
        return Fraction(1, self.n)

    @property
    def lipschitz(self) -> int:
        return self.n

    @cached_property
    def knots(self) -> tuple[np.ndarray, np.ndarray]:
        h = 1.0 / self.n
        pts = [(-1.0, 0.0), (-1.0 + h, -1.0), (-h, -1.0), (h, 1.0), (1.0 - h, 1.0), (1.0, 0.0)]
        xs: list[float] = []
        ys: list[float] = []
        for x, y in pts:
            if xs and x == xs[-1]:
                continue
            xs.append(x)
            ys.append(y)
        return np.array(xs), np.array(ys)

    def values(self, t: Any) -> np.ndarray:
        xs, ys = self.knots
        return np.interp(np.asarray(t, dtype=float), xs, ys, left=0.0, right=0.0)

    def slopes(self, t: Any) -> np.ndarray:
        a = np.abs(np.asarray(t, dtype=float))
        h = 1.0 / self.n
        out = np.zeros_like(a)
        out[a < h] = self.n
        out[(a > 1.0 - h) & (a < 1.0)] = -self.n
        return out

    def moment(self, j: int) -> Fraction:
        """Exact ``integral over [-1, 1] of f(x) x**j dx`` (zero for even j)."""
        if j < 0:
            raise ValueError("moment order must be >= 0")
        if j % 2 == 0:
            return Fraction(0)
        n, h = self.n, self.h
        g = 1 - h
        inner = n * h ** (j + 2) / (j + 2)
        plateau = (g ** (j + 1) - h ** (j + 1)) / (j + 1)
        outer = n * ((1 - g ** (j + 1)) / (j + 1) - (1 - g ** (j + 2)) / (j + 2))
        return 2 * (inner + plateau + outer)


def profile_eval(prof: TrapezoidProfile, t: float) -> float:
    """Value of the profile at a single point."""
    return float(prof.values(t))


# ----------------------------------------------------------------------
# Kernel
# ----------------------------------------------------------------------


@lru_cache(maxsize=None)
def _beta_half(m: int) -> Fraction:
    # B(1/2, m + 1) = 2 * 4**m * (m!)**2 / (2m + 1)!
    return Fraction(2 * 4**m * math.factorial(m) ** 2, math.factorial(2 * m + 1))


@lru_cache(maxsize=None)
def kernel_normalizer(k: int) -> Fraction:
    """Exact ``c_k = 1 / (2 * B(1/2, k**2 + 1))``."""
    if k < 1:
        raise ValueError(f"kernel index k must be >= 1, got {k}")
    return 1 / (2 * _beta_half(k * k))


@dataclass(frozen=True)
class SmoothingKernel:
    """``phi_k(y) = c_k (1 - y**2/4) ** (k*k)``, evaluated in log scale."""

    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"kernel index k must be >= 1, got {self.k}")

    @property
    def K(self) -> int:
        return self.k * self.k

    @cached_property
    def c(self) -> Fraction:
        return kernel_normalizer(self.k)

    @cached_property
    def log_c(self) -> float:
        m = self.K
        log_beta = math.log(2 * 4**m * math.factorial(m) ** 2) - math.log(math.factorial(2 * m + 1))
        return -math.log(2.0) - log_beta

    @property
    def width(self) -> float:
        """Standard deviation scale of the bump near 0."""
        return math.sqrt(2.0) / self.k

    def log_abs(self, y: Any) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            return self.log_c + self.K * np.log(np.abs(1.0 - 0.25 * y * y))

    def values(self, y: Any) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore"):
            mag = np.exp(self.log_abs(y))
        outside_sign = -1.0 if self.K % 2 else 1.0
        return np.where(np.abs(y) > 2.0, outside_sign * mag, mag)

    def normalization_integral(self, tol: float = 1e-13) -> float:
        w = self.width
        bps = [0.0] + [s * m * w for m in (1, 2, 4, 8) for s in (-1, 1) if m * w < 2]
        return float(integrate(self.values, -2.0, 2.0, abs_tol=tol, breakpoints=bps).value)

    def log_normalizer_check(self) -> float:
        """Disagreement between the exact ``log c_k`` and ``scipy.special.betaln``."""
        return abs(self.log_c - (-math.log(2.0) - float(betaln(0.5, self.K + 1.0))))


# ----------------------------------------------------------------------
# Extremal polynomial, coefficient form
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ExtremalPoly:
    """``P_k`` for profile parameter ``n``."""

    n: int
    k: int
    coeff_form: Poly
    a_k: Fraction

    @property
    def degree(self) -> int:
        return 2 * self.k * self.k - 1

    @property
    def c_k(self) -> Fraction:
        return kernel_normalizer(self.k)

    @cached_property
    def evaluator(self) -> HornerEvaluator:
        return HornerEvaluator(self.coeff_form)

    def to_descriptor(self) -> dict[str, Any]:
        return to_descriptor(
            self.coeff_form, n=self.n, k=self.k, a_k=f"{self.a_k.numerator}/{self.a_k.denominator}"
        )


def leading_coefficient_formula(n: int, k: int) -> Fraction:
    """``(-1)**(K+1) * 2 c_k K (1 - 1/n) / 4**K`` with ``K = k*k``."""
    K = k * k
    sign = 1 if (K + 1) % 2 == 0 else -1
    return sign * 2 * kernel_normalizer(k) * K * (1 - Fraction(1, n)) / Fraction(4**K)


@lru_cache(maxsize=64)
def construct_extremal(n: int, k: int | None = None) -> ExtremalPoly:
    """Expand the convolution into exact rational coefficients.

    ``(1 - (t-x)**2/4) ** K`` is expanded binomially twice and integrated
    against the profile moments; only odd moments survive, so every even
    power of ``t`` vanishes identically.
    """
    k = n if k is None else k
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    K = k * k
    c = kernel_normalizer(k)
    prof = TrapezoidProfile(n)
    mu = [prof.moment(j) for j in range(2 * K + 1)]
    coeffs = [Fraction(0)] * (2 * K)
    for m in range(1, K + 1):
        base = c * math.comb(K, m) * Fraction((-1) ** m, 4**m)
        for j in range(1, 2 * m + 1, 2):
            coeffs[2 * m - j] -= base * math.comb(2 * m, j) * mu[j]
    p = Poly.exact(coeffs)
    logger.debug("constructed P_%d for n=%d (degree %d)", k, n, p.degree)
    return ExtremalPoly(n=n, k=k, coeff_form=p, a_k=p.leading)


def top_derivative(n: int, k: int | None = None) -> Fraction:
    """The constant ``(2K - 1)! * a_k`` left after ``2K - 1`` derivatives."""
    ep = construct_extremal(n, k)
    return math.factorial(ep.degree) * ep.a_k


def implied_constant(n: int, k: int | None = None) -> float:
    """``|a_k| 4**K / (k**3 (1 - 1/n))``, the constant a lower bound of the
    form ``const * k**3 (1 - 1/n) / 4**K`` on ``|a_k|`` would carry."""
    ep = construct_extremal(n, k)
    K = ep.k * ep.k
    return float(abs(ep.a_k) * 4**K / (ep.k**3 * (1 - Fraction(1, n))))


# ----------------------------------------------------------------------
# Convolution form
# ----------------------------------------------------------------------


_NPTS = len(NODES)


class ConvolutionEvaluator:
    """Batched quadrature evaluation of ``P_k`` and ``P_k'``.

    Each point gets a composite Gauss-Kronrod rule on panels aligned with the
    profile knots and the kernel's special points, no wider than half the
    smaller of the ramp width and the kernel width. Points whose error
    estimate misses the tolerance are redone adaptively.
    """

    def __init__(self, n: int, k: int | None = None, tol: float | None = None) -> None:
        self.n = n
        self.k = n if k is None else k
        self.profile = TrapezoidProfile(n)
        self.kernel = SmoothingKernel(self.k)
        self.tol = check_tol(tol if tol is not None else get_settings().conv_tol)
        self._step = 0.5 * min(1.0 / n, self.kernel.width)

    def _integrand(self, x: np.ndarray, t: Any) -> np.ndarray:
        return self.profile.values(x) * self.kernel.values(t - x)

    def breakpoints(self, t: float) -> list[float]:
        xs, _ = self.profile.knots
        extra = [t + d for d in (-2.0, 0.0, 2.0) if -1.0 < t + d < 1.0]
        return sorted(set(xs.tolist()) | set(extra))

    def _subdivide(self, edges: list[float]) -> np.ndarray:
        parts = []
        for a, b in zip(edges[:-1], edges[1:]):
            m = max(1, int(math.ceil((b - a) / self._step)))
            parts.append(np.linspace(a, b, m + 1)[:-1])
        parts.append(np.array([edges[-1]]))
        return np.concatenate(parts)

    def _target(self, value: float) -> float:
        return max(self.tol, 1e-13 * abs(value))

    def values(self, t: Any) -> tuple[np.ndarray, np.ndarray]:
        """``(P_k(t), error estimate)`` for every entry of *t*."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lefts, rights, owner = [], [], []
        for i, ti in enumerate(t):
            grid = self._subdivide(self.breakpoints(float(ti)))
            lefts.append(grid[:-1])
            rights.append(grid[1:])
            owner.append(np.full(grid.size - 1, i))
        lefts_a = np.concatenate(lefts)
        rights_a = np.concatenate(rights)
        owner_a = np.concatenate(owner)
        tp = np.repeat(t[owner_a], _NPTS)
        vals, errs = gauss_kronrod_panels(lambda x: self._integrand(x, tp), lefts_a, rights_a)
        total = np.bincount(owner_a, weights=vals, minlength=t.size)
        err = np.bincount(owner_a, weights=errs, minlength=t.size)
        for i in np.flatnonzero(err > np.maximum(self.tol, 1e-13 * np.abs(total))):
            total[i], err[i] = self._adaptive_value(float(t[i]))
        return total, err

    def _adaptive_value(self, t: float, raise_on_failure: bool = False) -> tuple[float, float]:
        res = integrate(
            lambda x: self._integrand(x, t), -1.0, 1.0,
            abs_tol=self.tol, rel_tol=1e-13,
            breakpoints=self._subdivide(self.breakpoints(t))[1:-1],
            raise_on_failure=raise_on_failure,
        )
        return float(res.value), res.abs_error

    def _slope_pieces(self, t: float) -> list[tuple[float, float, float]]:
        h = 1.0 / self.n
        return [(t - h, t + h, 1.0), (t - 1.0, t - 1.0 + h, -1.0), (t + 1.0 - h, t + 1.0, -1.0)]

    def _kernel_grid(self, a: float, b: float) -> np.ndarray:
        edges = sorted({a, b} | {s for s in (-2.0, 0.0, 2.0) if a < s < b})
        return self._subdivide(edges)

    def slopes(self, t: Any) -> tuple[np.ndarray, np.ndarray]:
        """``(P_k'(t), error estimate)``: ``f'`` is piecewise constant, so the
        slope is a signed sum of three kernel integrals of length ``1/n``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lefts, rights, owner, weight = [], [], [], []
        for i, ti in enumerate(t):
            for a, b, w in self._slope_pieces(float(ti)):
                grid = self._kernel_grid(a, b)
                lefts.append(grid[:-1])
                rights.append(grid[1:])
                owner.append(np.full(grid.size - 1, i))
                weight.append(np.full(grid.size - 1, w * self.n))
        owner_a = np.concatenate(owner)
        weight_a = np.concatenate(weight)
        vals, errs = gauss_kronrod_panels(self.kernel.values, np.concatenate(lefts), np.concatenate(rights))
        total = np.bincount(owner_a, weights=vals * weight_a, minlength=t.size)
        err = np.bincount(owner_a, weights=errs * np.abs(weight_a), minlength=t.size)
        for i in np.flatnonzero(err > np.maximum(self.tol, 1e-13 * np.abs(total))):
            total[i], err[i] = self._adaptive_slope(float(t[i]))
        return total, err

    def _adaptive_slope(self, t: float, raise_on_failure: bool = False) -> tuple[float, float]:
        value = 0.0
        err = 0.0
        for a, b, w in self._slope_pieces(t):
            res = integrate(
                self.kernel.values, a, b, abs_tol=self.tol / (3 * self.n), rel_tol=1e-13,
                breakpoints=self._kernel_grid(a, b)[1:-1], raise_on_failure=raise_on_failure,
            )
            value += w * self.n * float(res.value)
            err += self.n * res.abs_error
        return value, err


@lru_cache(maxsize=32)
def convolution_evaluator(n: int, k: int | None = None, tol: float | None = None) -> ConvolutionEvaluator:
    """Shared evaluator per ``(n, k, tol)``."""
    return ConvolutionEvaluator(n, k, tol)


def eval_extremal_convolution(n: int, k: int | None, t: float, tol: float | None = None) -> float:
    """``P_k(t)`` as a convolution integral, adaptively to *tol*.

    Raises :class:`ToleranceNotMet` if refinement stalls.
    """
    ev = convolution_evaluator(n, k, tol)
    if t == 0:
        return 0.0
    return ev._adaptive_value(float(t), raise_on_failure=True)[0]


def eval_extremal_slope(n: int, k: int | None, t: float, tol: float | None = None) -> float:
    """``P_k'(t)`` from the profile's piecewise-constant derivative."""
    ev = convolution_evaluator(n, k, tol)
    return ev._adaptive_slope(float(t), raise_on_failure=True)[0]


def eval_extremal_symmetric(n: int, k: int | None, t: float, tol: float | None = None) -> float:
    """``P_k(t) = integral over [0, 2] of (f(t+x) + f(t-x)) phi_k(x) dx`` for ``|t| <= 1``."""
    if not -1.0 <= t <= 1.0:
        raise InvalidRange(f"symmetric form needs t in [-1, 1], got {t}")
    ev = convolution_evaluator(n, k, tol)
    prof, kern = ev.profile, ev.kernel

    def integrand(x: np.ndarray) -> np.ndarray:
        return (prof.values(t + x) + prof.values(t - x)) * kern.values(x)

    xs, _ = prof.knots
    bps = {abs(t - float(xk)) for xk in xs} | {abs(float(xk) - t) for xk in xs}
    bps |= {m * kern.width for m in (1, 2, 4)}
    res = integrate(integrand, 0.0, 2.0, abs_tol=ev.tol, rel_tol=1e-13, breakpoints=sorted(bps))
    return float(res.value)
