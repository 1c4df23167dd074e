"""Dense univariate polynomials for the oscillatory-integral engine.

Coefficients are indexed by power and held either as exact rationals
(:class:`fractions.Fraction`) or as IEEE doubles; the representation flag
travels with the value. Construction-time arithmetic stays exact; numeric
consumers evaluate through :class:`HornerEvaluator`, a vectorised compensated
Horner scheme whose coefficients are double-double splits of the exact values.

Real roots are isolated with a Sturm chain on the squarefree part, computed in
integer arithmetic, then refined by bisection.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence, Union

import mpmath
import numpy as np

from src.config import get_settings
from src.errors import DescriptorError, InvalidRange, ZeroPolynomial

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction]


class Representation(str, Enum):
    """How coefficients are stored."""

    EXACT = "exact"
    FLOAT = "float"


def _to_fraction(c: Any) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (bool, np.bool_)):
        raise TypeError("boolean coefficient")
    if isinstance(c, (int, np.integer)):
        return Fraction(int(c))
    if isinstance(c, (float, np.floating)):
        if not math.isfinite(float(c)):
            raise ValueError(f"non-finite coefficient {c!r}")
        return Fraction(float(c))
    if isinstance(c, str):
        return Fraction(c.strip())
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _trim(coeffs: Sequence[Any]) -> tuple:
    end = len(coeffs)
    while end > 0 and coeffs[end - 1] == 0:
        end -= 1
    return tuple(coeffs[:end])


@dataclass(frozen=True)
class Poly:
    """Dense polynomial ``sum(coeffs[j] * t**j)``; trailing zeros are trimmed."""

    coeffs: tuple = ()
    representation: Representation = Representation.EXACT

    def __post_init__(self) -> None:
        rep = Representation(self.representation)
        conv = _to_fraction if rep is Representation.EXACT else float
        object.__setattr__(self, "representation", rep)
        object.__setattr__(self, "coeffs", _trim([conv(c) for c in self.coeffs]))

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def exact(cls, coeffs: Iterable[Any]) -> Poly:
        return cls(tuple(coeffs), Representation.EXACT)

    @classmethod
    def from_floats(cls, coeffs: Iterable[Any]) -> Poly:
        return cls(tuple(float(c) for c in coeffs), Representation.FLOAT)

    @classmethod
    def monomial(cls, d: int, coeff: Number = 1) -> Poly:
        return cls.exact([0] * d + [coeff])

    @classmethod
    def zero(cls) -> Poly:
        return cls.exact(())

    # ------------------------------------------------------------------
    # Structure
    # ------------------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_exact(self) -> bool:
        return self.representation is Representation.EXACT

    @property
    def leading(self) -> Number:
        if self.is_zero:
            raise ZeroPolynomial("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    @property
    def is_odd(self) -> bool:
        return all(c == 0 for c in self.coeffs[0::2])

    @property
    def is_even(self) -> bool:
        return all(c == 0 for c in self.coeffs[1::2])

    def coefficient(self, j: int) -> Number:
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else self._zero()

    def _zero(self) -> Number:
        return Fraction(0) if self.is_exact else 0.0

    def _like(self, coeffs: Iterable[Any]) -> Poly:
        return Poly(tuple(coeffs), self.representation)

    def to_exact(self) -> Poly:
        return self if self.is_exact else Poly.exact(self.coeffs)

    def to_float(self) -> Poly:
        return Poly.from_floats(self.coeffs) if self.is_exact else self

    def odd_part(self) -> Poly:
        return self._like(c if j % 2 else 0 for j, c in enumerate(self.coeffs))

    def even_part(self) -> Poly:
        return self._like(0 if j % 2 else c for j, c in enumerate(self.coeffs))

    def drop_constant(self) -> Poly:
        return self._like((0,) + self.coeffs[1:]) if self.coeffs else self

    def reflect(self) -> Poly:
        """``t -> -t``."""
        return self._like(-c if j % 2 else c for j, c in enumerate(self.coeffs))

    def slice(self, lo: int, hi: int) -> Poly:
        """Keep only the powers ``lo..hi`` inclusive."""
        return self._like(c if lo <= j <= hi else 0 for j, c in enumerate(self.coeffs))

    # ------------------------------------------------------------------
    # Arithmetic
    # ------------------------------------------------------------------

    def _combine(self, other: Poly, sign: int) -> Poly:
        rep = (
            Representation.EXACT
            if self.is_exact and other.is_exact
            else Representation.FLOAT
        )
        n = max(len(self.coeffs), len(other.coeffs))
        out = [self.coefficient(j) + sign * other.coefficient(j) for j in range(n)]
        return Poly(tuple(out), rep)

    def __add__(self, other: Poly) -> Poly:
        return self._combine(other, 1)

    def __sub__(self, other: Poly) -> Poly:
        return self._combine(other, -1)

    def __neg__(self) -> Poly:
        return self._like(-c for c in self.coeffs)

    def __mul__(self, scalar: Number) -> Poly:
        if isinstance(scalar, Poly):
            raise TypeError("polynomial products are not supported")
        s = _to_fraction(scalar) if self.is_exact else float(scalar)
        return self._like(c * s for c in self.coeffs)

    __rmul__ = __mul__

    def shift(self, c: Number) -> Poly:
        """Add a constant."""
        return self + Poly((c,), self.representation)


# ----------------------------------------------------------------------
# Root list
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class IsolatedRoot:
    """A real root bracketed by ``[lo, hi]`` with a refined value inside."""

    lo: float
    hi: float
    value: float


@dataclass(frozen=True)
class RootList:
    """Ordered real roots found in a query interval."""

    roots: tuple[IsolatedRoot, ...] = ()

    def __len__(self) -> int:
        return len(self.roots)

    def __iter__(self) -> Iterator[IsolatedRoot]:
        return iter(self.roots)

    def values(self) -> list[float]:
        return [r.value for r in self.roots]


# ----------------------------------------------------------------------
# Evaluation
# ----------------------------------------------------------------------

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = a + b
    z = s - a
    return s, (a - (s - z)) + (b - z)


def _split(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, al * bl - (((p - ah * bh) - al * bh) - ah * bl)


class HornerEvaluator:
    """Vectorised compensated Horner evaluation.

    Each coefficient is held as ``hi + lo`` with ``hi = float(c)`` and ``lo``
    the rounding residue, so exact coefficients keep double-double accuracy.
    The result behaves as if computed in twice the working precision.
    """

    def __init__(self, p: Poly) -> None:
        self.degree = p.degree
        if p.is_exact:
            hi = [float(c) for c in p.coeffs]
            lo = [float(c - Fraction(h)) for c, h in zip(p.coeffs, hi)]
        else:
            hi = list(p.coeffs)
            lo = [0.0] * len(hi)
        self._hi = np.array(hi or [0.0])
        self._lo = np.array(lo or [0.0])

    def double(self, t: Any) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(s, c)`` with ``p(t) ~ s + c``."""
        t = np.asarray(t, dtype=float)
        s = np.full(t.shape, self._hi[-1])
        c = np.full(t.shape, self._lo[-1])
        for i in range(len(self._hi) - 2, -1, -1):
            prod, pe = _two_prod(s, t)
            s, se = _two_sum(prod, self._hi[i])
            c = c * t + (pe + se + self._lo[i])
        return s, c

    def __call__(self, t: Any) -> np.ndarray:
        s, c = self.double(t)
        return s + c


def evaluate(p: Poly, t: Any) -> Any:
    """Evaluate *p* at *t*.

    Exact polynomials at a scalar give an exact :class:`Fraction`; float
    polynomials (or array arguments) go through compensated Horner.
    """
    if p.is_exact and np.ndim(t) == 0 and not isinstance(t, np.ndarray):
        x = _to_fraction(t)
        acc = Fraction(0)
        for c in reversed(p.coeffs):
            acc = acc * x + c
        return acc
    out = HornerEvaluator(p)(t)
    return float(out) if np.ndim(t) == 0 else out


def evaluate_extended(p: Poly, t: Any, bits: int | None = None) -> mpmath.mpf:
    """Evaluate in mpmath at *bits* of precision (settings default)."""
    bits = bits or get_settings().precision
    with mpmath.workprec(bits):
        x = mpmath.mpf(t) if not isinstance(t, Fraction) else mpmath.mpf(t.numerator) / t.denominator
        acc = mpmath.mpf(0)
        for c in reversed(p.to_exact().coeffs):
            acc = acc * x + mpmath.mpf(c.numerator) / c.denominator
        return +acc


_REDUCE_ABOVE = 1e8


def reduce_angle(value: Any, bits: int | None = None) -> float:
    """``value mod 2*pi`` computed in mpmath at *bits* of precision."""
    bits = bits or get_settings().precision
    with mpmath.workprec(bits):
        return float(mpmath.fmod(mpmath.mpf(value), 2 * mpmath.pi))


def reduced_phase(p: Poly, t: Any, evaluator: HornerEvaluator | None = None) -> np.ndarray:
    """``p(t)`` suitable as a trigonometric argument.

    Where ``|p(t)| > 1e8`` the double-precision value carries no phase
    information, so those entries are recomputed in extended precision and
    reduced modulo ``2*pi``.
    """
    ev = evaluator or HornerEvaluator(p)
    t = np.asarray(t, dtype=float)
    s, c = ev.double(t)
    out = s + c
    big = np.flatnonzero(np.abs(s) > _REDUCE_ABOVE)
    if big.size:
        bits = get_settings().precision
        flat_t = t.reshape(-1)
        flat_out = out.reshape(-1)
        for i in big:
            flat_out[i] = reduce_angle(evaluate_extended(p, float(flat_t[i]), bits), bits)
        out = flat_out.reshape(t.shape)
    return out


def sin_phase(p: Poly, t: Any, evaluator: HornerEvaluator | None = None) -> np.ndarray:
    """``sin(p(t))`` with argument reduction for huge phases."""
    return np.sin(reduced_phase(p, t, evaluator))


def derivative(p: Poly, order: int = 1) -> Poly:
    """Formal derivative of the given order."""
    if order < 1:
        raise ValueError(f"derivative order must be >= 1, got {order}")
    coeffs = list(p.coeffs)
    for _ in range(order):
        coeffs = [j * c for j, c in enumerate(coeffs)][1:]
    return p._like(coeffs)


def scale_argument(p: Poly, lam: Number) -> Poly:
    """Return ``q`` with ``q(t) = p(lam * t)``."""
    if not lam > 0:
        raise ValueError(f"scale factor must be positive, got {lam!r}")
    s = _to_fraction(lam) if p.is_exact else float(lam)
    return p._like(c * s**j for j, c in enumerate(p.coeffs))


def cauchy_bound(p: Poly) -> float:
    """Every real root of *p* lies in ``[-B, B]``."""
    if p.is_zero:
        raise ZeroPolynomial("zero polynomial has no root bound")
    lead = abs(float(p.leading))
    if p.degree == 0:
        return 0.0
    return 1.0 + max(abs(float(c)) / lead for c in p.coeffs[:-1])


def root_bound(p: Poly) -> float:
    """The smaller of the Cauchy and Fujiwara root bounds."""
    if p.is_zero:
        raise ZeroPolynomial("zero polynomial has no root bound")
    d = p.degree
    if d == 0:
        return 0.0
    lead = abs(float(p.leading))
    terms = [(abs(float(p.coeffs[d - i])) / lead) ** (1.0 / i) for i in range(1, d)]
    terms.append((abs(float(p.coeffs[0])) / (2 * lead)) ** (1.0 / d))
    return min(cauchy_bound(p), 2.0 * max(terms))


# ----------------------------------------------------------------------
# Integer polynomial helpers (Sturm chains)
# ----------------------------------------------------------------------


def _int_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _primitive(a: list[int]) -> list[int]:
    g = 0
    for c in a:
        g = math.gcd(g, c)
    return [c // g for c in a] if g > 1 else list(a)


def _int_coeffs(coeffs: Sequence[Fraction]) -> list[int]:
    lcm = 1
    for c in coeffs:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    return _primitive([int(c * lcm) for c in coeffs])


def _int_derivative(a: list[int]) -> list[int]:
    return _primitive([j * c for j, c in enumerate(a)][1:])


def _prem(a: list[int], b: list[int]) -> tuple[list[int], int]:
    """Pseudo-remainder of *a* by *b* and the number of ``lc(b)`` factors used."""
    r = list(a)
    db = len(b) - 1
    lc = b[-1]
    steps = 0
    while r and len(r) - 1 >= db:
        shift = len(r) - 1 - db
        coef = r[-1]
        r = [x * lc for x in r]
        for i in range(db + 1):
            r[shift + i] -= coef * b[i]
        steps += 1
        _int_trim(r)
    return r, steps


def _int_gcd(a: list[int], b: list[int]) -> list[int]:
    while b:
        r, _ = _prem(a, b)
        a, b = b, _primitive(_int_trim(r))
    return _primitive(a)


def _divide_exact(a: list[int], b: list[int]) -> list[int]:
    r = [Fraction(x) for x in a]
    q = [Fraction(0)] * (len(a) - len(b) + 1)
    for i in range(len(q) - 1, -1, -1):
        q[i] = r[i + len(b) - 1] / b[-1]
        for j, bj in enumerate(b):
            r[i + j] -= q[i] * bj
    return _int_coeffs(q)


def _sturm_chain(p: list[int]) -> list[list[int]]:
    chain = [p, _int_derivative(p)]
    while len(chain[-1]) > 1:
        r, steps = _prem(chain[-2], chain[-1])
        if not r:
            break
        flip = -1 if (chain[-1][-1] < 0 and steps % 2 == 1) else 1
        chain.append(_primitive([-flip * x for x in r]))
    return chain


def _sign_at(a: list[int], x: Fraction) -> int:
    u, v = x.numerator, x.denominator
    d = len(a) - 1
    acc = 0
    upow = 1
    vpow = v**d
    for c in a:
        acc += c * upow * vpow
        upow *= u
        vpow //= v
    return (acc > 0) - (acc < 0)


def _variations(chain: list[list[int]], x: Fraction) -> int:
    count = 0
    last = 0
    for poly in chain:
        s = _sign_at(poly, x)
        if s == 0:
            continue
        if last and s != last:
            count += 1
        last = s
    return count


def _squarefree_int(p: Poly) -> list[int]:
    ints = _int_coeffs(p.to_exact().coeffs)
    g = _int_gcd(ints, _int_derivative(ints))
    return ints if len(g) == 1 else _divide_exact(ints, g)


def isolate_roots(
    p: Poly, lo: float, hi: float, width: float | None = None
) -> RootList:
    """All distinct real roots of *p* in ``[lo, hi]``, isolated and refined.

    Multiple roots are reported once. Each root is bracketed to
    ``width`` (default ``root_width * max(1, |hi|)`` from settings).
    """
    if p.is_zero:
        raise ZeroPolynomial("cannot isolate roots of the zero polynomial")
    if lo > hi:
        raise InvalidRange(f"empty root interval [{lo}, {hi}]")
    if p.degree == 0:
        return RootList()
    if width is None:
        width = get_settings().root_width * max(1.0, abs(hi))
    sqf = _squarefree_int(p)
    if len(sqf) == 1:
        return RootList()
    chain = _sturm_chain(sqf)
    a, b = _to_fraction(lo), _to_fraction(hi)
    w = _to_fraction(width)

    found: list[tuple[Fraction, Fraction]] = []
    if _sign_at(sqf, a) == 0:
        found.append((a, a))
    if a == b:
        return _root_list(found)

    # roots in (a, b] = V(a) - V(b), zeros dropped
    stack = [(a, b, _variations(chain, a), _variations(chain, b))]
    isolating: list[tuple[Fraction, Fraction]] = []
    while stack:
        left, right, vl, vr = stack.pop()
        count = vl - vr
        if count <= 0:
            continue
        if count == 1:
            isolating.append((left, right))
            continue
        mid = (left + right) / 2
        vm = _variations(chain, mid)
        stack.append((mid, right, vm, vr))
        stack.append((left, mid, vl, vm))

    for left, right in isolating:
        found.append(_refine(sqf, chain, left, right, w))
    found.sort()
    logger.debug("isolated %d roots of degree-%d polynomial in [%g, %g]", len(found), p.degree, lo, hi)
    return _root_list(found)


def _refine(
    sqf: list[int], chain: list[list[int]], a: Fraction, b: Fraction, width: Fraction
) -> tuple[Fraction, Fraction]:
    """Shrink ``(a, b]`` holding one simple root down to *width*."""
    sb = _sign_at(sqf, b)
    if sb == 0:
        return b, b
    sa = _sign_at(sqf, a)
    while b - a > width:
        m = (a + b) / 2
        sm = _sign_at(sqf, m)
        if sm == 0:
            return m, m
        if sa == 0:
            # a is a neighbouring root; fall back to counting
            if _variations(chain, a) - _variations(chain, m) == 1:
                b, sb = m, sm
            else:
                a, sa = m, sm
        elif sm == sb:
            b, sb = m, sm
        else:
            a, sa = m, sm
    return a, b


def _root_list(found: list[tuple[Fraction, Fraction]]) -> RootList:
    roots = []
    for a, b in found:
        value = float((a + b) / 2)
        roots.append(IsolatedRoot(float(a), float(b), value))
    return RootList(tuple(roots))


# ----------------------------------------------------------------------
# JSON descriptor
# ----------------------------------------------------------------------


def _coeff_str(c: Number) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    return repr(float(c))


def to_descriptor(p: Poly, **metadata: Any) -> dict[str, Any]:
    """``{"degree": d, "coeffs": [...]}`` plus any extra metadata keys."""
    desc: dict[str, Any] = {"degree": p.degree, "coeffs": [_coeff_str(c) for c in p.coeffs]}
    desc.update(metadata)
    return desc


def from_descriptor(desc: dict[str, Any]) -> Poly:
    """Parse a descriptor; coefficients are read exactly."""
    if not isinstance(desc, dict) or "coeffs" not in desc:
        raise DescriptorError("descriptor must be an object with a 'coeffs' list")
    raw = desc["coeffs"]
    if not isinstance(raw, list):
        raise DescriptorError("'coeffs' must be a list")
    try:
        coeffs = [_to_fraction(c) for c in raw]
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise DescriptorError(f"bad coefficient: {exc}") from exc
    p = Poly.exact(coeffs)
    if "degree" in desc and desc["degree"] != p.degree:
        raise DescriptorError(
            f"declared degree {desc['degree']} does not match coefficients (degree {p.degree})"
        )
    return p


def load_poly(path: str | Path) -> Poly:
    """Read a polynomial descriptor from a JSON file."""
    path = Path(path)
    try:
        desc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DescriptorError(f"{path}: invalid JSON ({exc})") from exc
    return from_descriptor(desc)


def dump_poly(p: Poly, path: str | Path, **metadata: Any) -> None:
    """Write a polynomial descriptor to a JSON file."""
    Path(path).write_text(json.dumps(to_descriptor(p, **metadata), indent=2), encoding="utf-8")
