"""Tests for the polynomial core.

Covers representation handling, exact and compensated evaluation, formal
derivatives, root bounds, Sturm root isolation and the JSON descriptor.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from fractions import Fraction

import numpy as np
import pytest

from src.errors import DescriptorError, InvalidRange, ZeroPolynomial
from src.poly import (
    HornerEvaluator,
    Poly,
    Representation,
    cauchy_bound,
    derivative,
    dump_poly,
    evaluate,
    evaluate_extended,
    from_descriptor,
    isolate_roots,
    load_poly,
    root_bound,
    scale_argument,
    sin_phase,
    to_descriptor,
)


# ──────────────────────────────────────────────
# Structure
# ──────────────────────────────────────────────


class TestPolyStructure:
    def test_trailing_zeros_trimmed(self):
        p = Poly.exact([1, 2, 0, 0])
        assert p.coeffs == (Fraction(1), Fraction(2))
        assert p.degree == 1

    def test_zero_polynomial(self):
        z = Poly.zero()
        assert z.is_zero
        assert z.degree == -1
        with pytest.raises(ZeroPolynomial):
            _ = z.leading

    def test_exact_coefficients_are_fractions(self):
        p = Poly.exact([1, 0.5, "1/3"])
        assert p.coeffs == (Fraction(1), Fraction(1, 2), Fraction(1, 3))
        assert p.is_exact

    def test_float_representation(self):
        p = Poly.from_floats([1, 2])
        assert p.representation is Representation.FLOAT
        assert all(isinstance(c, float) for c in p.coeffs)

    def test_non_finite_coefficient_rejected(self):
        with pytest.raises(ValueError):
            Poly.exact([1.0, math.inf])

    def test_parity(self):
        assert Poly.monomial(3).is_odd
        assert not Poly.monomial(3).is_even
        assert Poly.exact([1, 0, 2]).is_even
        assert not Poly.exact([1, 1]).is_odd

    def test_odd_and_even_parts(self):
        p = Poly.exact([1, 2, 3, 4])
        assert p.odd_part().coeffs == (0, 2, 0, 4)
        assert p.even_part().coeffs == (1, 0, 3)
        assert (p.odd_part() + p.even_part()) == p

    def test_reflect(self):
        assert Poly.exact([1, 2, 3]).reflect() == Poly.exact([1, -2, 3])

    def test_drop_constant(self):
        assert Poly.exact([5, 1]).drop_constant() == Poly.exact([0, 1])

    def test_slice(self):
        p = Poly.exact([1, 1, 1, 1, 1])
        assert p.slice(2, 3) == Poly.exact([0, 0, 1, 1])

    def test_coefficient_out_of_range_is_zero(self):
        assert Poly.exact([1, 2]).coefficient(7) == 0


class TestPolyArithmetic:
    def test_add_and_subtract(self):
        a = Poly.exact([1, 2])
        b = Poly.exact([0, -2, 3])
        assert a + b == Poly.exact([1, 0, 3])
        assert a - a == Poly.zero()

    def test_mixed_representation_is_float(self):
        s = Poly.exact([1]) + Poly.from_floats([0, 1.5])
        assert s.representation is Representation.FLOAT

    def test_scalar_multiplication_stays_exact(self):
        p = Fraction(1, 3) * Poly.exact([3, 6])
        assert p == Poly.exact([1, 2])

    def test_polynomial_product_rejected(self):
        with pytest.raises(TypeError):
            Poly.exact([1, 1]) * Poly.exact([1, 1])

    def test_shift_and_neg(self):
        assert Poly.exact([0, 1]).shift(2) == Poly.exact([2, 1])
        assert -Poly.exact([1, -1]) == Poly.exact([-1, 1])


# ──────────────────────────────────────────────
# Evaluation
# ──────────────────────────────────────────────


class TestEvaluate:
    def test_exact_scalar_gives_fraction(self):
        value = evaluate(Poly.exact([1, 2, 3]), Fraction(1, 2))
        assert value == Fraction(11, 4)

    def test_float_scalar(self):
        assert evaluate(Poly.from_floats([1, 2, 3]), 2.0) == pytest.approx(17.0)

    def test_array_argument(self):
        out = evaluate(Poly.exact([0, 0, 1]), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(out, [1.0, 4.0, 9.0])

    def test_compensated_horner_near_multiple_root(self):
        # (t - 1)**7 expanded; naive Horner loses everything near t = 1
        coeffs = [math.comb(7, j) * (-1) ** (7 - j) for j in range(8)]
        ev = HornerEvaluator(Poly.exact(coeffs))
        t = 1.0 + 2.0**-20
        assert abs(float(ev(t)) - 2.0**-140) < 1e-25

    def test_extended_matches_exact(self):
        p = Poly.exact([Fraction(1, 3), 0, Fraction(2, 7)])
        exact = evaluate(p, Fraction(3, 2))
        ext = evaluate_extended(p, Fraction(3, 2), bits=200)
        assert abs(float(ext) - float(exact)) < 1e-15

    def test_rational_and_float_agree(self):
        rng = np.random.default_rng(8)
        p = Poly.exact([Fraction(int(rng.integers(-50, 51)), int(rng.integers(1, 17))) for _ in range(9)])
        q = p.to_float()
        for t in rng.uniform(-2.0, 2.0, 50):
            exact = evaluate(p, Fraction(float(t)))
            scale = math.fsum(abs(float(c)) * abs(t) ** j for j, c in enumerate(p.coeffs))
            assert evaluate(q, float(t)) == pytest.approx(float(exact), abs=1e-14 * scale)

    def test_sin_phase_reduces_huge_arguments(self):
        p = Poly.exact([0, 10**9])
        assert float(sin_phase(p, np.array([1.0]))[0]) == pytest.approx(math.sin(1e9), abs=1e-12)


class TestDerivativeAndScaling:
    def test_first_and_second_derivative(self):
        p = Poly.exact([1, 2, 3])
        assert derivative(p) == Poly.exact([2, 6])
        assert derivative(p, 2) == Poly.exact([6])
        assert derivative(p, 3).is_zero

    def test_derivative_order_must_be_positive(self):
        with pytest.raises(ValueError):
            derivative(Poly.exact([1, 1]), 0)

    def test_scale_argument(self):
        assert scale_argument(Poly.exact([1, 1, 1]), 2) == Poly.exact([1, 2, 4])

    @pytest.mark.parametrize("lam", [Fraction(3), Fraction(2, 7)])
    def test_derivative_commutes_with_scaling(self, lam):
        rng = np.random.default_rng(3)
        p = Poly.exact([Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 9))) for _ in range(7)])
        assert derivative(scale_argument(p, lam)) == scale_argument(derivative(p), lam) * lam

    def test_scale_argument_rejects_non_positive(self):
        with pytest.raises(ValueError):
            scale_argument(Poly.exact([1, 1]), 0)


# ──────────────────────────────────────────────
# Roots
# ──────────────────────────────────────────────


class TestRoots:
    def test_root_bounds_enclose_roots(self):
        p = Poly.exact([-6, 1, 1])  # (t - 2)(t + 3)
        assert cauchy_bound(p) >= 3.0
        assert root_bound(p) >= 3.0
        assert root_bound(p) <= cauchy_bound(p)

    def test_root_bound_of_constant(self):
        assert root_bound(Poly.exact([4])) == 0.0

    def test_sqrt_two(self):
        roots = isolate_roots(Poly.exact([-2, 0, 1]), 0.0, 2.0)
        assert len(roots) == 1
        assert roots.values()[0] == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_multiple_root_reported_once(self):
        p = Poly.exact([1, -1, -1, 1])  # (t - 1)**2 (t + 1)
        values = isolate_roots(p, -2.0, 2.0).values()
        assert values == pytest.approx([-1.0, 1.0], abs=1e-12)

    def test_root_at_left_endpoint(self):
        assert isolate_roots(Poly.exact([0, 1]), 0.0, 1.0).values() == [0.0]

    def test_roots_ordered(self):
        p = Poly.exact([0, -1, 0, 1])  # t**3 - t
        values = isolate_roots(p, -5.0, 5.0).values()
        assert values == sorted(values)
        assert len(values) == 3

    def test_root_count_matches_grid_sign_changes(self):
        rng = np.random.default_rng(21)
        roots = rng.choice(np.arange(-20, 21), size=8, replace=False)
        coeffs = [Fraction(int(rng.integers(1, 6)))]
        for r in roots:
            # times (t - r/4)
            shifted = [Fraction(0)] + coeffs
            coeffs = [a - Fraction(int(r), 4) * b for a, b in zip(shifted, coeffs + [Fraction(0)])]
        p = Poly.exact(coeffs)
        assert p.degree == 8
        grid = np.linspace(-6.1, 6.1, 100_000)
        flips = np.count_nonzero(np.diff(np.signbit(evaluate(p.to_float(), grid))))
        found = isolate_roots(p, -6.1, 6.1)
        assert len(found) == flips == 8
        assert found.values() == pytest.approx(sorted(int(r) / 4 for r in roots), abs=1e-12)

    def test_no_roots_for_constant(self):
        assert len(isolate_roots(Poly.exact([3]), -1.0, 1.0)) == 0

    def test_errors(self):
        with pytest.raises(ZeroPolynomial):
            isolate_roots(Poly.zero(), 0.0, 1.0)
        with pytest.raises(InvalidRange):
            isolate_roots(Poly.exact([0, 1]), 1.0, 0.0)


# ──────────────────────────────────────────────
# Descriptor
# ──────────────────────────────────────────────


class TestDescriptor:
    def test_to_descriptor_writes_exact_strings(self):
        desc = to_descriptor(Poly.exact([0, Fraction(1, 3), 2]), n=4)
        assert desc == {"degree": 2, "coeffs": ["0", "1/3", "2"], "n": 4}

    def test_from_descriptor_parses_exactly(self):
        p = from_descriptor({"coeffs": ["0", "1/3", 0.5]})
        assert p.coeffs == (0, Fraction(1, 3), Fraction(1, 2))

    def test_degree_mismatch(self):
        with pytest.raises(DescriptorError):
            from_descriptor({"degree": 3, "coeffs": [0, 1]})

    def test_missing_or_bad_coefficients(self):
        with pytest.raises(DescriptorError):
            from_descriptor({"degree": 1})
        with pytest.raises(DescriptorError):
            from_descriptor({"coeffs": ["abc"]})
        with pytest.raises(DescriptorError):
            from_descriptor({"coeffs": "1, 2"})

    def test_file_round_trip(self):
        path = os.path.join(tempfile.mkdtemp(), "p.json")
        p = Poly.exact([0, Fraction(-5, 7), 0, 1])
        dump_poly(p, path)
        assert load_poly(path) == p

    def test_invalid_json_file(self):
        path = os.path.join(tempfile.mkdtemp(), "bad.json")
        with open(path, "w") as fh:
            fh.write("{not json")
        with pytest.raises(DescriptorError):
            load_poly(path)

    def test_descriptor_is_json_serialisable(self):
        desc = to_descriptor(Poly.exact([1, Fraction(2, 3)]))
        assert json.loads(json.dumps(desc)) == desc
