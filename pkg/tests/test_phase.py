"""Tests for polynomial and extremal phases.

Covers parity detection, critical points, level solving, reflection, and the
convolution-backed extremal phase against its coefficient form.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.extremal import construct_extremal
from src.phase import ExtremalPhase, PolyPhase, extremal_phase
from src.poly import Poly, evaluate_extended


class TestPolyPhase:
    def test_parity(self):
        assert PolyPhase(Poly.exact([0, 1, 0, 1])).parity == "odd"
        assert PolyPhase(Poly.exact([2, 0, 1])).parity == "even"
        assert PolyPhase(Poly.exact([0, 1, 1])).parity is None

    def test_constant(self):
        assert PolyPhase(Poly.exact([5])).is_constant
        assert not PolyPhase(Poly.monomial(1)).is_constant

    def test_critical_points(self):
        ph = PolyPhase(Poly.exact([0, -3, 0, 1]))  # t**3 - 3t
        assert ph.critical_points(-5.0, 5.0) == pytest.approx([-1.0, 1.0], abs=1e-12)
        assert ph.critical_points(0.0, 5.0) == pytest.approx([1.0], abs=1e-12)
        assert ph.critical_points(2.0, 1.0) == []

    def test_last_critical_point(self):
        ph = PolyPhase(Poly.exact([0, -3, 0, 1]))
        assert ph.last_critical_point(0.0) == pytest.approx(1.0, abs=1e-12)
        assert PolyPhase(Poly.monomial(3)).last_critical_point(0.0) == 0.0

    def test_tail_direction(self):
        assert PolyPhase(Poly.monomial(3)).tail_direction() == 1
        assert PolyPhase(Poly.monomial(3, -2)).tail_direction() == -1
        assert PolyPhase(Poly.exact([1])).tail_direction() == 0

    def test_solve_levels(self):
        ph = PolyPhase(Poly.monomial(2))
        levels = np.array([1.0, 4.0, 9.0])
        np.testing.assert_allclose(ph.solve_levels(levels, 0.0, 10.0), [1.0, 2.0, 3.0], rtol=1e-14)

    def test_solve_levels_decreasing(self):
        ph = PolyPhase(Poly.monomial(1, -1))
        np.testing.assert_allclose(ph.solve_levels(np.array([-2.0]), 0.0, 5.0), [2.0], rtol=1e-14)

    def test_reflect(self):
        ph = PolyPhase(Poly.exact([0, 1, 1])).reflect()
        assert ph.value(2.0) == pytest.approx(2.0)

    def test_sin_and_expi(self):
        ph = PolyPhase(Poly.monomial(1))
        t = np.array([0.3, 1.2])
        np.testing.assert_allclose(ph.sin(t), np.sin(t))
        np.testing.assert_allclose(ph.expi(t), np.exp(1j * t))


class TestExtremalPhase:
    def test_small_k_uses_coefficients(self):
        ph = ExtremalPhase(3)
        assert not ph.uses_convolution
        assert ph.parity == "odd"

    def test_cached(self):
        assert extremal_phase(3) is extremal_phase(3)

    def test_tail_direction_follows_leading_sign(self):
        assert ExtremalPhase(3, 2).tail_direction() == -1
        assert ExtremalPhase(3, 3).tail_direction() == 1
        assert ExtremalPhase(3, 3).reflect().tail_direction() == -1

    def test_convolution_mode(self, monkeypatch):
        monkeypatch.setenv("OSCINT_CONV_MIN_K", "3")
        from src.config import get_settings

        get_settings.cache_clear()
        ph = ExtremalPhase(3)
        assert ph.uses_convolution
        coeff_form = construct_extremal(3).coeff_form
        for t in (-2.0, -0.4, 0.7, 1.5, 4.0):
            exact = float(evaluate_extended(coeff_form, t, 200))
            assert ph.value(t) == pytest.approx(exact, abs=1e-9 * max(1.0, abs(exact)))

    def test_convolution_critical_points_match(self, monkeypatch):
        exact_pts = PolyPhase(construct_extremal(3).coeff_form).critical_points(-3.0, 3.0)
        monkeypatch.setenv("OSCINT_CONV_MIN_K", "3")
        from src.config import get_settings

        get_settings.cache_clear()
        conv_pts = ExtremalPhase(3).critical_points(-3.0, 3.0)
        assert conv_pts
        for x in conv_pts:
            assert min(abs(x - e) for e in exact_pts) < 1e-9

    def test_reflected_values(self):
        ph = ExtremalPhase(2)
        assert ph.reflect().value(0.5) == pytest.approx(-ph.value(0.5))
        assert math.isfinite(ph.value(10.0))
