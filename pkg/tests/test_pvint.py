"""Tests for the principal-value lobe engine.

Covers the monomial law, even annihilation, scale and reflection invariance,
truncated and one-sided integrals against sine/cosine integral values, the
series accelerator, and the lobe budget.
"""

from __future__ import annotations

import math
from fractions import Fraction

import pytest

from src.config import get_settings
from src.errors import InvalidRange, NotConverged
from src.extremal import construct_extremal
from src.poly import Poly
from src.pvint import (
    accelerate,
    cutoff_index,
    one_sided_tail,
    oscillatory_integral,
    pv_complex,
    pv_integral,
    pv_integral_extremal,
    pv_integral_truncated,
    segment_integral,
    symmetric_integral,
    tail_part,
    unit_interval_integral,
    unit_interval_part,
)

SI1 = 0.946083070367183  # Si(1)
CI1 = 0.3374039229009681  # Ci(1)


# ──────────────────────────────────────────────
# Full principal value
# ──────────────────────────────────────────────


class TestPVIntegral:
    @pytest.mark.parametrize("d", [1, 3, 5, 7, 25, 49])
    def test_monomial_law(self, d):
        res = pv_integral(Poly.monomial(d), tol=1e-10)
        assert res.converged
        assert res.value == pytest.approx(math.pi / d, abs=1e-8)

    def test_scale_invariance(self):
        res = pv_integral(Poly.monomial(3, 5), tol=1e-10)
        assert res.value == pytest.approx(math.pi / 3, abs=1e-8)

    def test_constant_term_is_dropped(self):
        a = pv_integral(Poly.exact([7, 0, 0, 1]), tol=1e-10).value
        assert a == pytest.approx(math.pi / 3, abs=1e-8)

    def test_even_phase_is_zero(self):
        res = pv_integral(Poly.exact([1, 0, -2, 0, 3]))
        assert res.value == 0.0
        assert res.lobe_count == 0
        assert res.converged

    def test_constant_phase_is_zero(self):
        assert pv_integral(Poly.exact([4])).value == 0.0

    def test_odd_phase_is_purely_imaginary(self):
        value, err, radius, lobes = pv_complex(Poly.monomial(1), tol=1e-10)
        assert value.real == 0.0
        assert value.imag == pytest.approx(math.pi, abs=1e-8)
        assert lobes > 0

    def test_mixed_parity_reflection(self):
        p = Poly.exact([0, 1, 1])
        a = pv_integral(p, tol=1e-9).value
        b = pv_integral(p.reflect(), tol=1e-9).value
        assert a > 0
        assert a == pytest.approx(b, abs=1e-7)

    def test_mixed_parity_scaling(self):
        a = pv_integral(Poly.exact([0, 1, 1]), tol=1e-9).value
        b = pv_integral(Poly.exact([0, 2, 4]), tol=1e-9).value
        assert a == pytest.approx(b, abs=1e-7)

    def test_result_dict(self):
        d = pv_integral(Poly.monomial(3)).to_dict()
        assert set(d) == {"value", "abs_error_est", "truncation_radius", "lobe_count", "converged"}

    def test_extremal_matches_coefficient_form(self):
        a = pv_integral_extremal(2, tol=1e-9)
        b = pv_integral(construct_extremal(2).coeff_form, tol=1e-9)
        assert a.converged
        assert a.value == pytest.approx(b.value, abs=1e-8)


# ──────────────────────────────────────────────
# Truncated, unit-interval and tail pieces
# ──────────────────────────────────────────────


class TestPieces:
    def test_truncated_approaches_full_value(self):
        value = pv_integral_truncated(Poly.monomial(3), 1e-3, 50.0, tol=1e-10)
        assert abs(value.real) < 1e-12
        assert value.imag == pytest.approx(math.pi / 3, abs=1e-5)

    def test_truncated_range(self):
        with pytest.raises(InvalidRange):
            pv_integral_truncated(Poly.monomial(3), 2.0, 1.0)
        with pytest.raises(InvalidRange):
            pv_integral_truncated(Poly.monomial(3), 0.0, 1.0)

    def test_unit_interval_is_sine_integral(self):
        assert unit_interval_integral(Poly.monomial(1), tol=1e-12) == pytest.approx(SI1, abs=1e-11)
        assert unit_interval_part(Poly.monomial(1, -1), tol=1e-12) == pytest.approx(SI1, abs=1e-11)

    def test_unit_interval_signed(self):
        assert unit_interval_integral(Poly.monomial(1, -1), tol=1e-12) == pytest.approx(-SI1, abs=1e-11)

    def test_tail_complements_unit_interval(self):
        tail = tail_part(Poly.monomial(1), 1.0, tol=1e-10)
        assert tail.value == pytest.approx(math.pi / 2 - SI1, abs=1e-9)
        assert tail.remainder_bound > 0
        assert tail.truncation_radius > 1.0

    def test_tail_needs_t0_at_least_one(self):
        with pytest.raises(InvalidRange):
            tail_part(Poly.monomial(1), 0.5)

    def test_tail_of_constant_diverges(self):
        with pytest.raises(NotConverged):
            tail_part(Poly.exact([0]), 1.0)

    def test_one_sided_kind(self):
        with pytest.raises(ValueError):
            one_sided_tail(Poly.monomial(1), 1.0, 1e-9, kind="cos")


class TestSegments:
    def test_segment_to_infinity(self):
        value = segment_integral(Poly.monomial(1), 1.0, tol=1e-10)
        assert value.real == pytest.approx(-CI1, abs=1e-9)
        assert value.imag == pytest.approx(math.pi / 2 - SI1, abs=1e-9)

    def test_finite_segment_matches_difference_of_tails(self):
        p = Poly.monomial(2)
        direct = segment_integral(p, 1.0, 3.0, tol=1e-11)
        tails = segment_integral(p, 1.0, tol=1e-11) - segment_integral(p, 3.0, tol=1e-11)
        assert abs(direct - tails) < 1e-9

    def test_constant_phase_segment(self):
        assert segment_integral(Poly.exact([3]), 1.0, math.e) == pytest.approx(1.0)
        with pytest.raises(NotConverged):
            segment_integral(Poly.exact([3]), 1.0)

    def test_segment_range(self):
        with pytest.raises(InvalidRange):
            segment_integral(Poly.monomial(1), 0.0, 1.0)
        with pytest.raises(InvalidRange):
            segment_integral(Poly.monomial(1), 2.0, 1.0)

    def test_oscillatory_integral_keeps_constant(self):
        value = oscillatory_integral(Poly.exact([1, 1]), 0.0, math.pi, tol=1e-12)
        expected = complex(math.cos(1.0), math.sin(1.0)) * 2j
        assert abs(value - expected) < 1e-10

    def test_oscillatory_integral_range(self):
        with pytest.raises(InvalidRange):
            oscillatory_integral(Poly.monomial(1), 1.0, 1.0)

    def test_symmetric_integral(self):
        value, err = symmetric_integral(Poly.monomial(1), 0.0, 1.0, 1e-12)
        assert abs(value - 2j * SI1) < 1e-10
        assert err >= 0

    def test_lobe_budget(self, monkeypatch):
        monkeypatch.setenv("OSCINT_MAX_LOBES", "10")
        get_settings.cache_clear()
        with pytest.raises(NotConverged):
            oscillatory_integral(Poly.monomial(1, 1000), 0.0, 100.0)


# ──────────────────────────────────────────────
# Series acceleration
# ──────────────────────────────────────────────


class TestAccelerate:
    def test_alternating_harmonic(self):
        lobes = [(-1) ** k / (k + 1) for k in range(20)]
        value, err = accelerate(lobes)
        assert value == pytest.approx(math.log(2.0), abs=1e-6)
        assert err < 1e-5

    def test_needs_ten_lobes(self):
        assert accelerate([1.0, -0.5, 0.25]) is None

    def test_needs_decreasing_magnitudes(self):
        lobes = [(-1) ** k * (1 + (k % 3)) for k in range(12)]
        assert accelerate(lobes) is None

    def test_cutoff_index(self):
        assert cutoff_index([5, 1, 3, 2, 1]) == 2
        assert cutoff_index([3, 2, 1]) == 0

    def test_exact_fraction_phase(self):
        res = pv_integral(Poly.exact([0, Fraction(1, 3)]), tol=1e-10)
        assert res.value == pytest.approx(math.pi, abs=1e-8)
