"""Adaptive Gauss–Kronrod quadrature.

A 7-point Gauss rule nested in a 15-point Kronrod rule gives a value and a
local error estimate per panel. Panels are evaluated in batches through numpy,
so an integrand receives a 1-D array of abscissae and must return an array of
the same shape (real or complex).

Error estimates follow the QUADPACK qk15 scaling: ``|K15 - G7|`` is mapped
through ``resasc * min(1, (200 * err / resasc) ** 1.5)`` with a roundoff floor
of ``50 * eps * resabs``.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from src.errors import ToleranceNotMet

logger = logging.getLogger(__name__)

Scalar = Union[float, complex]
Integrand = Callable[[np.ndarray], np.ndarray]

# Kronrod abscissae (positive half, outermost first) and weights
_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
# Gauss weights for the abscissae _XGK[1], _XGK[3], _XGK[5], _XGK[7]
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)

NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
_WK15 = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
_WG_HALF = np.array([_WG[i // 2] if i % 2 == 1 else 0.0 for i in range(7)])
_WG15 = np.concatenate([_WG_HALF, [_WG[3]], _WG_HALF[::-1]])

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny
_CHUNK = 65_536


@dataclass(frozen=True)
class QuadResult:
    """Outcome of an adaptive integration."""

    value: Scalar
    abs_error: float
    n_panels: int
    converged: bool


def fsum(values: Iterable[Scalar]) -> Scalar:
    """Compensated sum of real or complex values."""
    vals = list(values)
    if any(isinstance(v, complex) or np.iscomplexobj(v) for v in vals):
        return complex(
            math.fsum(complex(v).real for v in vals),
            math.fsum(complex(v).imag for v in vals),
        )
    return math.fsum(float(v) for v in vals)


def gauss_kronrod_panels(
    f: Integrand, lefts: Sequence[float] | np.ndarray, rights: Sequence[float] | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Apply G7/K15 to every panel ``[lefts[i], rights[i]]`` in one batch.

    Returns ``(values, errors)`` arrays; values are complex when *f* is.
    """
    lefts = np.asarray(lefts, dtype=float)
    rights = np.asarray(rights, dtype=float)
    if lefts.size == 0:
        return np.zeros(0), np.zeros(0)
    if lefts.size > _CHUNK:
        parts = [
            _gk_block(f, lefts[i : i + _CHUNK], rights[i : i + _CHUNK])
            for i in range(0, lefts.size, _CHUNK)
        ]
        return np.concatenate([v for v, _ in parts]), np.concatenate([e for _, e in parts])
    return _gk_block(f, lefts, rights)


def _gk_block(f: Integrand, lefts: np.ndarray, rights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    centre = 0.5 * (lefts + rights)
    half = 0.5 * (rights - lefts)
    x = centre[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(f(x.ravel())).reshape(x.shape)

    resk = fx @ _WK15
    resg = fx @ _WG15
    reskh = 0.5 * resk
    ahalf = np.abs(half)
    resabs = (np.abs(fx) @ _WK15) * ahalf
    resasc = (np.abs(fx - reskh[:, None]) @ _WK15) * ahalf
    values = resk * half
    err = np.abs((resk - resg) * half)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > _TINY / (50.0 * _EPS), np.maximum(floor, err), err)
    err = np.where(np.isfinite(err), err, np.inf)
    return values, err


def integrate(
    f: Integrand,
    a: float,
    b: float,
    abs_tol: float = 1e-10,
    rel_tol: float = 0.0,
    breakpoints: Iterable[float] = (),
    limit: int = 2000,
    raise_on_failure: bool = True,
) -> QuadResult:
    """Globally adaptive integration of *f* over ``[a, b]``.

    The panel with the largest error estimate is bisected until the summed
    estimate meets ``max(abs_tol, rel_tol * |value|)``. *breakpoints* inside
    the range seed the initial panels (kinks, peaks, sign changes).
    """
    if a == b:
        return QuadResult(0.0, 0.0, 0, True)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    edges = sorted({a, b} | {float(p) for p in breakpoints if a < p < b})
    vals, errs = gauss_kronrod_panels(f, edges[:-1], edges[1:])

    panels: list[tuple[float, float]] = list(zip(edges[:-1], edges[1:]))
    values: list[Scalar] = list(vals)
    errors: list[float] = [float(e) for e in errs]
    heap = [(-e, i) for i, e in enumerate(errors)]
    heapq.heapify(heap)
    total = fsum(values)
    err_total = math.fsum(errors)

    while True:
        target = max(abs_tol, rel_tol * abs(total))
        if err_total <= target:
            converged = True
            break
        if len(panels) >= limit or not heap:
            converged = False
            break
        _, idx = heapq.heappop(heap)
        left, right = panels[idx]
        mid = 0.5 * (left + right)
        if not (left < mid < right) or (right - left) <= 4 * _EPS * max(abs(left), abs(right)):
            # too narrow to split; its error stays in the total
            continue
        (v1, v2), (e1, e2) = gauss_kronrod_panels(f, [left, mid], [mid, right])
        total = total - values[idx] + v1 + v2
        err_total = err_total - errors[idx] + float(e1) + float(e2)
        panels[idx] = (left, mid)
        values[idx] = v1
        errors[idx] = float(e1)
        panels.append((mid, right))
        values.append(v2)
        errors.append(float(e2))
        heapq.heappush(heap, (-float(e1), idx))
        heapq.heappush(heap, (-float(e2), len(panels) - 1))

    total = fsum(values)
    err_total = math.fsum(errors)
    if not converged:
        logger.debug(
            "quadrature on [%g, %g] stalled at error %.3g with %d panels",
            a, b, err_total, len(panels),
        )
        if raise_on_failure:
            raise ToleranceNotMet(
                f"adaptive quadrature on [{a}, {b}] stalled at error {err_total:.3g} "
                f"(target {max(abs_tol, rel_tol * abs(total)):.3g})",
                achieved=err_total,
            )
    return QuadResult(sign * total, err_total, len(panels), converged)


def integrate_panels(
    f: Integrand,
    lefts: Sequence[float] | np.ndarray,
    rights: Sequence[float] | np.ndarray,
    abs_tol: float,
    limit: int = 400,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate many fixed panels, repairing the ones that miss their budget.

    Every panel first gets a single G7/K15 pass. A panel whose estimate exceeds
    both its share ``abs_tol / len(panels)`` and a relative roundoff level is
    re-integrated adaptively. Returns per-panel ``(values, errors)``.
    """
    values, errors = gauss_kronrod_panels(f, lefts, rights)
    if values.size == 0:
        return values, errors
    lefts = np.asarray(lefts, dtype=float)
    rights = np.asarray(rights, dtype=float)
    share = abs_tol / values.size
    bad = np.nonzero((errors > share) & (errors > 1e-13 * np.abs(values)))[0]
    if bad.size:
        logger.debug("repairing %d of %d panels", bad.size, values.size)
    values = values.copy()
    errors = errors.copy()
    for i in bad:
        res = integrate(
            f, float(lefts[i]), float(rights[i]),
            abs_tol=share, rel_tol=1e-13, limit=limit, raise_on_failure=False,
        )
        values[i] = res.value
        errors[i] = res.abs_error
    return values, errors
