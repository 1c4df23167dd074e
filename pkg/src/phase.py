"""Phases for the lobe engine.

A phase is a real function ``q`` on the line that the principal-value engine
integrates ``sin(q(t))/t`` or ``exp(i q(t))/t`` against. The engine needs
values (reduced for trigonometric use), slopes, critical points, and the
solutions of ``q(t) = level`` on a monotone piece.

:class:`PolyPhase` wraps any polynomial and gets its critical points exactly
from root isolation. :class:`ExtremalPhase` represents ``P_k`` and switches to
the convolution form for large ``k``, where the coefficient form cancels.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from functools import cached_property, lru_cache
from typing import Any

import numpy as np
from scipy.optimize import brentq

from src.config import get_settings
from src.extremal import ConvolutionEvaluator, ExtremalPoly, construct_extremal
from src.poly import (
    HornerEvaluator,
    Poly,
    derivative,
    evaluate_extended,
    isolate_roots,
    reduce_angle,
    reduced_phase,
    root_bound,
)

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


class Phase(ABC):
    """Interface the lobe engine integrates against."""

    @abstractmethod
    def values(self, t: Any) -> np.ndarray:
        """Phase values (not reduced)."""

    @abstractmethod
    def angles(self, t: Any) -> np.ndarray:
        """Phase values fit for ``sin``/``cos``."""

    @abstractmethod
    def slope(self, t: Any) -> np.ndarray:
        """First derivative."""

    @abstractmethod
    def critical_points(self, lo: float, hi: float) -> list[float]:
        """Sorted zeros of the slope strictly inside ``(lo, hi)``."""

    @abstractmethod
    def critical_bound(self) -> float:
        """No critical point lies beyond this magnitude."""

    @abstractmethod
    def tail_direction(self) -> int:
        """Sign of the slope for large positive ``t``."""

    @abstractmethod
    def reflect(self) -> Phase:
        """The phase ``t -> q(-t)``."""

    @property
    def is_constant(self) -> bool:
        return False

    @property
    def parity(self) -> str | None:
        """``"odd"``, ``"even"`` or ``None``."""
        return None

    def value(self, t: float) -> float:
        return float(self.values(np.array([t]))[0])

    def slope_at_zero(self) -> float:
        return float(self.slope(np.array([0.0]))[0])

    def last_critical_point(self, lo: float = 0.0) -> float:
        """Largest critical point in ``(lo, inf)``, or *lo* if there is none."""
        pts = self.critical_points(lo, max(lo, self.critical_bound()) + 1.0)
        return pts[-1] if pts else lo

    def sin(self, t: Any) -> np.ndarray:
        return np.sin(self.angles(t))

    def expi(self, t: Any) -> np.ndarray:
        return np.exp(1j * self.angles(t))

    def solve_levels(self, levels: Any, lo: float, hi: float) -> np.ndarray:
        """Solve ``q(t) = level`` on ``[lo, hi]`` where ``q`` is monotone.

        Vectorised bisection; every level must lie between ``q(lo)`` and
        ``q(hi)``.
        """
        levels = np.asarray(levels, dtype=float)
        increasing = self.value(hi) >= self.value(lo)
        a = np.full(levels.shape, float(lo))
        b = np.full(levels.shape, float(hi))
        for _ in range(160):
            m = 0.5 * (a + b)
            done = (b - a) <= 2 * _EPS * np.maximum(np.abs(a), np.abs(b)) + 1e-300
            if done.all():
                break
            diff = self._level_residual(m, levels)
            below = diff < 0 if increasing else diff > 0
            a = np.where(below & ~done, m, a)
            b = np.where(~below & ~done, m, b)
        return 0.5 * (a + b)

    def _level_residual(self, t: np.ndarray, levels: np.ndarray) -> np.ndarray:
        return self.values(t) - levels


# ----------------------------------------------------------------------
# Polynomial phase
# ----------------------------------------------------------------------


class PolyPhase(Phase):
    """A polynomial phase evaluated by compensated Horner."""

    def __init__(self, p: Poly) -> None:
        self.poly = p
        self.evaluator = HornerEvaluator(p)
        self.deriv = derivative(p) if p.degree >= 1 else Poly.zero()
        self._deriv_eval = HornerEvaluator(self.deriv)
        self._critical: dict[tuple[float, float], list[float]] = {}

    def __repr__(self) -> str:
        return f"PolyPhase(degree={self.poly.degree})"

    @property
    def is_constant(self) -> bool:
        return self.poly.degree <= 0

    @property
    def parity(self) -> str | None:
        if self.poly.coefficient(0) == 0 and self.poly.is_odd:
            return "odd"
        if self.poly.is_even:
            return "even"
        return None

    def values(self, t: Any) -> np.ndarray:
        return self.evaluator(t)

    def angles(self, t: Any) -> np.ndarray:
        return reduced_phase(self.poly, t, self.evaluator)

    def slope(self, t: Any) -> np.ndarray:
        return self._deriv_eval(t)

    def critical_points(self, lo: float, hi: float) -> list[float]:
        if self.deriv.degree < 1 or not lo < hi:
            return []
        key = (lo, hi)
        if key not in self._critical:
            roots = isolate_roots(self.deriv, lo, hi).values()
            self._critical[key] = [r for r in roots if lo < r < hi]
        return list(self._critical[key])

    @cached_property
    def _critical_bound(self) -> float:
        return root_bound(self.deriv) if self.deriv.degree >= 1 else 0.0

    def critical_bound(self) -> float:
        return self._critical_bound

    def tail_direction(self) -> int:
        if self.deriv.is_zero:
            return 0
        return 1 if float(self.deriv.leading) > 0 else -1

    def reflect(self) -> PolyPhase:
        return PolyPhase(self.poly.reflect())

    def _level_residual(self, t: np.ndarray, levels: np.ndarray) -> np.ndarray:
        s, c = self.evaluator.double(t)
        return (s - levels) + c


# ----------------------------------------------------------------------
# Extremal phase
# ----------------------------------------------------------------------


class ExtremalPhase(Phase):
    """``P_k`` (odd) as a phase.

    Below ``conv_min_k`` this is exactly the coefficient form. From there on,
    ``|t| <= conv_window`` is evaluated through the convolution integral and
    larger ``|t|`` through the exact coefficients in extended precision.
    Critical points come from a slope scan refined with Brent's method; the
    phase is taken to be monotone beyond the window.
    """

    _ANGLE_LIMIT = 1e4

    def __init__(self, n: int, k: int | None = None, tol: float | None = None) -> None:
        settings = get_settings()
        self.n = n
        self.k = n if k is None else k
        self.extremal: ExtremalPoly = construct_extremal(n, self.k)
        self.window = settings.conv_window
        self.uses_convolution = self.k >= settings.conv_min_k
        self._sign = 1.0
        if self.uses_convolution:
            self.conv = ConvolutionEvaluator(n, self.k, tol)
            self._deriv_poly = derivative(self.extremal.coeff_form)
        else:
            self._poly = PolyPhase(self.extremal.coeff_form)

    def __repr__(self) -> str:
        mode = "convolution" if self.uses_convolution else "coefficients"
        return f"ExtremalPhase(n={self.n}, k={self.k}, {mode})"

    def _reflected(self) -> ExtremalPhase:
        other = object.__new__(ExtremalPhase)
        other.__dict__.update(self.__dict__)
        other._sign = -self._sign
        if not self.uses_convolution:
            other._poly = self._poly.reflect()
        return other

    def reflect(self) -> ExtremalPhase:
        return self._reflected()

    @property
    def parity(self) -> str | None:
        return "odd"

    # values are odd in t, slopes even

    def _split(self, t: Any) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        a = np.abs(t)
        return t, a, a <= self.window

    def _extended(self, a: np.ndarray, poly: Poly) -> np.ndarray:
        bits = get_settings().precision
        return np.array([float(evaluate_extended(poly, float(x), bits)) for x in a])

    def values(self, t: Any) -> np.ndarray:
        if not self.uses_convolution:
            return self._poly.values(t)
        t, a, inside = self._split(t)
        out = np.empty_like(a)
        if inside.any():
            out[inside] = self.conv.values(a[inside])[0]
        if (~inside).any():
            out[~inside] = self._extended(a[~inside], self.extremal.coeff_form)
        return self._sign * np.sign(t) * out

    def angles(self, t: Any) -> np.ndarray:
        if not self.uses_convolution:
            return self._poly.angles(t)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = self.values(t)
        big = np.flatnonzero(np.abs(out) > self._ANGLE_LIMIT)
        if big.size:
            bits = get_settings().precision
            for i in big:
                v = evaluate_extended(self.extremal.coeff_form, abs(float(t[i])), bits)
                out[i] = reduce_angle(self._sign * math.copysign(1.0, t[i]) * v, bits)
        return out

    def slope(self, t: Any) -> np.ndarray:
        if not self.uses_convolution:
            return self._poly.slope(t)
        t, a, inside = self._split(t)
        out = np.empty_like(a)
        if inside.any():
            out[inside] = self.conv.slopes(a[inside])[0]
        if (~inside).any():
            out[~inside] = self._extended(a[~inside], self._deriv_poly)
        return self._sign * out

    @cached_property
    def _positive_critical_points(self) -> list[float]:
        step = 0.125 * min(1.0 / self.n, math.sqrt(2.0) / self.k)
        grid = np.linspace(0.0, self.window, int(math.ceil(self.window / step)) + 1)
        s = self.conv.slopes(grid)[0]
        found = []
        for i in np.flatnonzero(np.sign(s[:-1]) * np.sign(s[1:]) < 0):
            root = brentq(
                lambda x: float(self.conv.slopes(np.array([x]))[0][0]),
                grid[i], grid[i + 1], xtol=1e-15, rtol=4 * _EPS,
            )
            found.append(float(root))
        logger.debug("P_%d (n=%d): %d critical points on (0, %g]", self.k, self.n, len(found), self.window)
        return found

    def critical_points(self, lo: float, hi: float) -> list[float]:
        if not self.uses_convolution:
            return self._poly.critical_points(lo, hi)
        pos = self._positive_critical_points
        pts = sorted([-x for x in pos] + pos)
        return [x for x in pts if lo < x < hi]

    def critical_bound(self) -> float:
        if not self.uses_convolution:
            return self._poly.critical_bound()
        return self.window

    def tail_direction(self) -> int:
        base = 1 if self.extremal.a_k > 0 else -1
        return int(self._sign) * base

    def solve_levels(self, levels: Any, lo: float, hi: float) -> np.ndarray:
        if not self.uses_convolution:
            return self._poly.solve_levels(levels, lo, hi)
        levels = np.asarray(levels, dtype=float)
        out = np.empty_like(levels)
        for i, level in enumerate(levels):
            out[i] = brentq(
                lambda x: self.value(x) - level, lo, hi, xtol=1e-15, rtol=4 * _EPS, maxiter=200
            )
        return out


@lru_cache(maxsize=16)
def extremal_phase(n: int, k: int | None = None) -> ExtremalPhase:
    """Shared :class:`ExtremalPhase` per ``(n, k)``; critical points are cached on it."""
    return ExtremalPhase(n, k)
