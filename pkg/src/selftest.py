"""Acceptance checks runnable from the command line.

Each check returns ``(passed, detail)``. Quick mode shrinks instance counts
and ``n`` ranges so the whole suite finishes in seconds; the full suite runs
the desk-scale sizes.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from src.config import get_settings
from src.errors import OscIntError
from src.experiments import discrepancy_trend, sweep_row
from src.extremal import (
    construct_extremal,
    eval_extremal_convolution,
    kernel_normalizer,
    leading_coefficient_formula,
)
from src.poly import Poly, evaluate_extended
from src.pvint import pv_integral
from src.sublevel import sublevel_measure
from src.upperbound import kd_trace, small_derivative_log_measure, vdc_check, vdc_suite

logger = logging.getLogger(__name__)

Check = Callable[[bool, np.random.Generator, float], tuple[bool, str]]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    runtime_ms: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def random_poly(rng: np.random.Generator, degree: int, parity: str | None = None, constant: bool = True) -> Poly:
    """Coefficients uniform in ``[-1, 1]``; *parity* zeroes the other powers."""
    coeffs = rng.uniform(-1.0, 1.0, size=degree + 1)
    coeffs[-1] = math.copysign(max(abs(coeffs[-1]), 0.25), coeffs[-1])
    if parity == "even":
        coeffs[1::2] = 0.0
    elif parity == "odd":
        coeffs[0::2] = 0.0
    if not constant:
        coeffs[0] = 0.0
    return Poly.exact(Fraction(float(c)) for c in coeffs)


# ----------------------------------------------------------------------
# Checks
# ----------------------------------------------------------------------


def check_monomial_law(quick: bool, rng: np.random.Generator, tol: float) -> tuple[bool, str]:
    degrees = range(1, 10, 2) if quick else range(1, 50, 2)
    worst = 0.0
    for d in degrees:
        value = pv_integral(Poly.monomial(d), tol).value
        worst = max(worst, abs(value - math.pi / d) / (math.pi / d))
    return worst <= 1e-6, f"max relative error {worst:.3g} over odd d <= {max(degrees)}"


def check_even_annihilation(quick: bool, rng: np.random.Generator, tol: float) -> tuple[bool, str]:
    count = 5 if quick else 20
    worst = 0.0
    for _ in range(count):
        degree = 2 * int(rng.integers(1, 11))
        worst = max(worst, pv_integral(random_poly(rng, degree, "even"), tol).value)
    return worst <= 1e-8, f"max |I| {worst:.3g} over {count} even polynomials"


def check_dual_representation(quick: bool, rng: np.random.Generator, tol: float) -> tuple[bool, str]:
    ns = range(2, 5) if quick else range(2, 7)
    points = np.linspace(-3.0, 3.0, 20 if quick else 100)
    bits = get_settings().precision
    worst = 0.0
    for n in ns:
        coeff_form = construct_extremal(n).coeff_form
        for t in points:
            exact = float(evaluate_extended(coeff_form, float(t), bits))
            conv = eval_extremal_convolution(n, n, float(t), 1e-13)
            # absolute below |v| = 1, relative above
            worst = max(worst, abs(exact - conv) / max(abs(exact), 1.0))
    return worst <= 1e-8, f"max gap {worst:.3g} relative to max(|v|, 1) for n <= {max(ns)}"


def check_leading_coefficient(quick: bool, rng: np.random.Generator, tol: float) -> tuple[bool, str]:
    ns = range(2, 6) if quick else range(2, 9)
    bad = [n for n in ns if construct_extremal(n).a_k != leading_coefficient_formula(n, n)]
    normalizers = kernel_normalizer(1) == Fraction(3, 8) and kernel_normalizer(2) == Fraction(315, 512)
    return not bad and normalizers, f"mismatches at n={bad}; c_1, c_2 exact: {normalizers}"


def check_growth_chain(quick: bool, rng: np.random.Generator, tol: float) -> tuple[bool, str]:
    ns = range(3, 5) if quick else range(3, 11)
    settings = get_settings()
    threshold = settings.growth_threshold
    failures = []
    for n in ns:
        rec = sweep_row(n, tol)
        if not rec.ok or not rec.chain_holds:
            failures.append(f"n={n}: {rec.status}, gap {rec.chain_gap:.3g} vs 2D_n {2 * rec.D_n:.3g}")
        elif n >= 6 and rec.ratio_logd < threshold:
            failures.append(f"n={n}: ratio {rec.ratio_logd:.3f} < {threshold}")
    trend = discrepancy_trend((4, 8) if quick else (4, 8, 16, 32), tol)
    ratios = [r for _, r in trend]
    if not all(a > b for a, b in zip(ratios[:-1], ratios[1:])):
        failures.append(f"D_n/log n not decreasing: {ratios}")
    over_cap = [(n, r) for n, r in trend if n >= 16 and r > settings.discrepancy_cap]
    if over_cap:
        failures.append(f"D_n/log n above {settings.discrepancy_cap} at {over_cap}")
    return not failures, "; ".join(failures) or f"chain holds for n in {list(ns)}"


def _grid_measure(h: Poly, alpha: float, lo: float, hi: float, step: float = 1e-5) -> float:
    m = int(round((hi - lo) / step))
    mids = lo + (np.arange(m) + 0.5) * step
    vals = np.polynomial.polynomial.polyval(mids, [float(c) for c in h.coeffs])
    return float(np.count_nonzero(np.abs(vals) <= alpha)) * step


def check_vinogradov(quick: bool, rng: np.random.Generator, tol: float) -> tuple[bool, str]:
    count = 50 if quick else 1000
    oracle_count = 10 if quick else 100
    alphas = (1e-3, 1e-2, 1e-1, 1.0)
    violations = 0
    worst_gap = 0.0
    for i in range(count):
        h = random_poly(rng, int(rng.integers(1, 9)))
        alpha = alphas[i % len(alphas)]
        res = sublevel_measure(h, alpha, 1.0, 2.0)
        if res.measure > res.bound:
            violations += 1
        if i < oracle_count:
            worst_gap = max(worst_gap, abs(res.measure - _grid_measure(h, alpha, 1.0, 2.0)))
    passed = violations == 0 and worst_gap <= 2e-5
    return passed, f"{violations} bound violations in {count}; max grid gap {worst_gap:.3g}"


def check_dyadic_certificate(quick: bool, rng: np.random.Generator, tol: float) -> tuple[bool, str]:
    count = 20 if quick else 200
    violations = 0
    for _ in range(count):
        p = random_poly(rng, int(rng.integers(2, 9)), constant=False)
        top = max(abs(c) for c in p.coeffs)
        p = p * (1 / top)
        alpha = float(10.0 ** rng.integers(-3, 1))
        m = small_derivative_log_measure(p, alpha)
        if m.log_measure > m.dyadic_certificate + 1e-10:
            violations += 1
    return violations == 0, f"{violations} violations in {count}"


def check_van_der_corput(quick: bool, rng: np.random.Generator, tol: float) -> tuple[bool, str]:
    lam = 1e4
    fresnel = vdc_check(Poly.exact([0, 0, Fraction(1, 2)]), 2, lam, 0.0, 1.0, tol)
    expected = 0.5 * math.sqrt(2.0 * math.pi / lam)
    rel = abs(fresnel.integral_modulus - expected) / expected
    lambdas = (1e2, 1e3, 1e4) if quick else (1e2, 1e4, 1e6)
    suite = vdc_suite(int(rng.integers(0, 2**31)), 3 if quick else 10, lambdas, 6, tol)
    c_emp = suite.max_ratio_over_k
    growth = suite.lambda_growth()
    factor = get_settings().vdc_growth_factor
    # NaN means no k >= 2 phase was drawn
    steady = not growth > factor
    passed = rel <= 0.05 and math.isfinite(c_emp) and c_emp <= 3.0 and steady
    return passed, (
        f"Fresnel rel. error {rel:.3g}; max ratio/k {c_emp:.4f} ({suite.by_lambda()}); "
        f"growth lam={max(lambdas):g} over lam={min(lambdas):g} {growth:.3g} (limit {factor})"
    )


def check_trace(quick: bool, rng: np.random.Generator, tol: float) -> tuple[bool, str]:
    count, max_degree = (5, 8) if quick else (50, 32)
    failures = []
    for _ in range(count):
        p = random_poly(rng, int(rng.integers(1, max_degree + 1)), constant=False)
        trace = kd_trace(p, "auto", tol)
        pv = pv_integral(p, tol).value
        d = p.degree
        if pv > trace.I1 + trace.I2_plus + trace.I2_minus + tol:
            failures.append(f"degree {d}: pieces below |I|")
        if trace.depth != math.ceil(math.log2(d)):
            failures.append(f"degree {d}: depth {trace.depth}")
    return not failures, "; ".join(failures) or f"{count} traces consistent"


CHECKS: list[tuple[str, Check]] = [
    ("monomial law", check_monomial_law),
    ("even annihilation", check_even_annihilation),
    ("dual representation", check_dual_representation),
    ("leading coefficient", check_leading_coefficient),
    ("growth chain", check_growth_chain),
    ("sublevel bound", check_vinogradov),
    ("dyadic certificate", check_dyadic_certificate),
    ("van der Corput", check_van_der_corput),
    ("halving trace", check_trace),
]


def run_selftest(quick: bool = True, only: list[str] | None = None) -> list[CheckResult]:
    """Run the acceptance checks; a raised library error counts as a failure."""
    settings = get_settings()
    rng = np.random.default_rng(settings.seed)
    results = []
    for name, check in CHECKS:
        if only and name not in only:
            continue
        started = time.perf_counter()
        try:
            passed, detail = check(quick, rng, settings.tol)
        except (OscIntError, ArithmeticError) as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        elapsed = (time.perf_counter() - started) * 1000.0
        logger.info("selftest %s: %s (%.0f ms)", name, "pass" if passed else "FAIL", elapsed)
        results.append(CheckResult(name, passed, detail, elapsed))
    return results
