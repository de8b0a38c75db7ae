"""Sparse multivariate polynomials over exact rationals or binary64 floats.

A polynomial carries a *field tag*: ``"exact"`` polynomials hold
:class:`fractions.Fraction` coefficients and ``"float"`` polynomials hold
Python floats.  Mixing the two in arithmetic raises :class:`DomainError`;
use :meth:`Polynomial.astype` to convert explicitly.

Terms are stored as a mapping from exponent tuples to coefficients and are
always iterated in graded lexicographic order (highest degree first, ties
broken lexicographically with ``x1 > x2 > ...``).
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations
from numbers import Integral, Rational, Real
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import DomainError

EXACT = "exact"
FLOAT = "float"
FIELDS = (EXACT, FLOAT)

#: coefficient tolerance for float-tagged comparisons
EPS_POLY = 1e-9


def field_of(value) -> str:
    """Return the field tag a scalar literal belongs to."""
    if isinstance(value, (bool, np.bool_)):
        raise DomainError("booleans are not scalars")
    if isinstance(value, (Integral, Rational)):
        return EXACT
    if isinstance(value, Real):
        return FLOAT
    raise DomainError(f"not a real scalar: {value!r}")


def as_scalar(value, field: str):
    """Coerce a literal into the representation used by ``field``.

    Integers are neutral and are accepted by both fields.  Strings such as
    ``"-3/4"`` are parsed as exact rationals.  A float offered to the exact
    field (or a Fraction offered to the float field) is rejected.
    """
    if isinstance(value, str):
        value = Fraction(value)
    if field == EXACT:
        if isinstance(value, Integral) and not isinstance(value, (bool, np.bool_)):
            return Fraction(int(value))
        if isinstance(value, Fraction):
            return value
        if isinstance(value, Rational):
            return Fraction(value.numerator, value.denominator)
        raise DomainError(f"exact field rejects {type(value).__name__} value {value!r}")
    if field == FLOAT:
        if isinstance(value, Integral) and not isinstance(value, (bool, np.bool_)):
            return float(value)
        if isinstance(value, (float, np.floating)):
            return float(value)
        raise DomainError(f"float field rejects {type(value).__name__} value {value!r}")
    raise DomainError(f"unknown field {field!r}")


def infer_field(values: Iterable) -> str:
    """Float if any entry is a float, exact otherwise."""
    tags = {field_of(Fraction(v) if isinstance(v, str) else v) for v in values}
    return FLOAT if FLOAT in tags else EXACT


def _zero(field):
    return Fraction(0) if field == EXACT else 0.0


def _grlex_key(exp):
    return (sum(exp), exp)


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` variables."""

    __slots__ = ("_nvars", "_field", "_terms")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], object] | None = None,
                 field: str = EXACT):
        if not isinstance(nvars, Integral) or nvars < 0:
            raise DomainError(f"variable count must be a non-negative integer, got {nvars!r}")
        if field not in FIELDS:
            raise DomainError(f"unknown field {field!r}")
        clean = {}
        for exp, coef in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars:
                raise DomainError(f"exponent {exp} does not have length {nvars}")
            if any(e < 0 for e in exp):
                raise DomainError(f"negative exponent in {exp}")
            c = as_scalar(coef, field)
            if c != 0:
                clean[exp] = clean.get(exp, _zero(field)) + c
                if clean[exp] == 0:
                    del clean[exp]
        object.__setattr__(self, "_nvars", int(nvars))
        object.__setattr__(self, "_field", field)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @classmethod
    def _raw(cls, nvars, terms, field):
        # trusted constructor: terms already validated and non-zero
        obj = cls.__new__(cls)
        object.__setattr__(obj, "_nvars", nvars)
        object.__setattr__(obj, "_field", field)
        object.__setattr__(obj, "_terms", terms)
        return obj

    # -- basic accessors -------------------------------------------------
    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def field(self) -> str:
        return self._field

    @property
    def terms(self) -> dict:
        """Copy of the term map, in graded lexicographic order."""
        return {e: self._terms[e] for e in self.monomials()}

    def monomials(self) -> list:
        return sorted(self._terms, key=_grlex_key, reverse=True)

    def items(self):
        for e in self.monomials():
            yield e, self._terms[e]

    def coefficient(self, exp: Sequence[int]):
        return self._terms.get(tuple(exp), _zero(self._field))

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self.monomials())

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def degrees(self) -> tuple:
        """Per-variable degrees ``deg_j(p)``."""
        if not self._terms:
            return (0,) * self._nvars
        return tuple(max(e[j] for e in self._terms) for j in range(self._nvars))

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self._terms}) <= 1

    def max_abs_coefficient(self) -> float:
        return float(max((abs(c) for c in self._terms.values()), default=0))

    def is_zero(self, tol: float | None = None) -> bool:
        """Exact: no terms.  Float: every ``|coef| <= tol`` (default EPS_POLY)."""
        if self._field == EXACT:
            return not self._terms
        tol = EPS_POLY if tol is None else tol
        return all(abs(c) <= tol for c in self._terms.values())

    # -- conversion ------------------------------------------------------
    def astype(self, field: str) -> "Polynomial":
        if field == self._field:
            return self
        if field == FLOAT:
            return Polynomial._raw(self._nvars, {e: float(c) for e, c in self._terms.items()}, FLOAT)
        if field == EXACT:
            return Polynomial._raw(self._nvars, {e: Fraction(c) for e, c in self._terms.items()}, EXACT)
        raise DomainError(f"unknown field {field!r}")

    def chop(self, tol: float = EPS_POLY) -> "Polynomial":
        """Drop float coefficients with magnitude at most ``tol``."""
        if self._field == EXACT:
            return self
        return Polynomial._raw(self._nvars,
                               {e: c for e, c in self._terms.items() if abs(c) > tol}, FLOAT)

    # -- arithmetic ------------------------------------------------------
    def _check(self, other: "Polynomial"):
        if other._nvars != self._nvars:
            raise DomainError(f"variable count mismatch: {self._nvars} vs {other._nvars}")
        if other._field != self._field:
            raise DomainError(f"field mismatch: {self._field} vs {other._field}")

    def _lift(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        c = as_scalar(other, self._field)
        return constant(c, self._nvars, self._field)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            v = out.get(e, 0) + c
            if v == 0:
                out.pop(e, None)
            else:
                out[e] = v
        return Polynomial._raw(self._nvars, out, self._field)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self._nvars, {e: -c for e, c in self._terms.items()}, self._field)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = as_scalar(other, self._field)
            if c == 0:
                return Polynomial._raw(self._nvars, {}, self._field)
            return Polynomial._raw(self._nvars, {e: v * c for e, v in self._terms.items()},
                                   self._field)
        self._check(other)
        out: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial._raw(self._nvars, {e: c for e, c in out.items() if c != 0}, self._field)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, Integral) or k < 0:
            raise DomainError("exponent must be a non-negative integer")
        result = constant(1, self._nvars, self._field)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            if not isinstance(other, (Real, str)):
                return NotImplemented
            try:
                other = self._lift(other)
            except DomainError:
                return False
        if other._nvars != self._nvars or other._field != self._field:
            return False
        if self._field == EXACT:
            return self._terms == other._terms
        return self.close_to(other)

    __hash__ = None

    def close_to(self, other: "Polynomial", eps: float = EPS_POLY) -> bool:
        """Max coefficient deviation within ``eps`` relative to the larger scale.

        The scale is ``max(1, max |coef|)`` across both operands, so large
        symbols compare on normalized coefficients while tiny ones compare
        absolutely.
        """
        self._check(other)
        scale = max(1.0, self.max_abs_coefficient(), other.max_abs_coefficient())
        return max_coefficient_deviation(self, other) <= eps * scale

    def derivative(self, var: int) -> "Polynomial":
        out = {}
        for e, c in self._terms.items():
            if e[var]:
                ne = list(e)
                ne[var] -= 1
                out[tuple(ne)] = c * e[var]
        return Polynomial._raw(self._nvars, out, self._field)

    # -- display -----------------------------------------------------------
    def format(self, prefix: str = "x", names=None) -> str:
        """Human-readable form; ``names`` overrides the ``prefix``-numbered variables."""
        if names is not None and len(names) != self._nvars:
            raise DomainError(f"{len(names)} names for {self._nvars} variables")
        if not self._terms:
            return "0"
        parts = []
        for exp, coef in self.items():
            mono = "*".join(
                (names[i] if names is not None else f"{prefix}{i + 1}") + (f"^{k}" if k > 1 else "")
                for i, k in enumerate(exp) if k
            )
            neg = coef < 0
            mag = -coef if neg else coef
            if self._field == FLOAT:
                cstr = format(mag, ".12g")
            else:
                cstr = str(mag)
            if mono:
                body = mono if mag == 1 else f"{cstr}*{mono}"
            else:
                body = cstr
            if not parts:
                parts.append(("-" if neg else "") + body)
            else:
                parts.append(("- " if neg else "+ ") + body)
        return " ".join(parts)

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"Polynomial({self._nvars}, {self.format()!r}, field={self._field!r})"

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        terms = []
        for exp, coef in self.items():
            if self._field == EXACT:
                terms.append({"exp": list(exp), "num": coef.numerator, "den": coef.denominator})
            else:
                terms.append({"exp": list(exp), "coef": coef})
        return {"vars": self._nvars, "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping) -> "Polynomial":
        try:
            nvars = data["vars"]
            raw = data["terms"]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed polynomial JSON: {exc}") from None
        if not raw:
            return cls(nvars, {}, data.get("field", EXACT))
        is_float = ["coef" in t for t in raw]
        if any(is_float) and not all(is_float):
            raise DomainError("polynomial JSON mixes exact and float terms")
        field = FLOAT if all(is_float) else EXACT
        terms = {}
        for t in raw:
            exp = tuple(t["exp"])
            if field == FLOAT:
                c = float(t["coef"])
            else:
                if not isinstance(t["num"], int) or not isinstance(t["den"], int):
                    raise DomainError("exact JSON terms need integer num/den")
                c = Fraction(t["num"], t["den"])
            if exp in terms:
                raise DomainError(f"duplicate exponent {exp} in polynomial JSON")
            terms[exp] = c
        return cls(nvars, terms, field)


def to_arrays(p: Polynomial) -> tuple:
    """Exponent matrix ``(T, nvars)`` and float coefficient vector ``(T,)``."""
    mons = p.monomials()
    exps = np.array(mons, dtype=np.int64).reshape(len(mons), p.nvars)
    coefs = np.array([float(p._terms[e]) for e in mons], dtype=float)
    return exps, coefs


def evaluate_many(p: Polynomial, points) -> np.ndarray:
    """Float evaluation of ``p`` at each row of ``points`` (shape ``(N, nvars)``)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != p.nvars:
        raise DomainError(f"points must have shape (N, {p.nvars})")
    exps, coefs = to_arrays(p)
    if not len(coefs):
        return np.zeros(len(pts))
    mon = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
    return mon @ coefs


def max_coefficient_deviation(p: Polynomial, q: Polynomial) -> float:
    keys = set(p._terms) | set(q._terms)
    return float(max((abs(p.coefficient(e) - q.coefficient(e)) for e in keys), default=0))


def constant(value, nvars: int, field: str = EXACT) -> Polynomial:
    c = as_scalar(value, field)
    return Polynomial._raw(nvars, {(0,) * nvars: c} if c != 0 else {}, field)


def variable(index: int, nvars: int, field: str = EXACT) -> Polynomial:
    """The polynomial ``x_{index+1}`` (0-based ``index``)."""
    if not 0 <= index < nvars:
        raise DomainError(f"variable index {index} out of range for {nvars} variables")
    exp = [0] * nvars
    exp[index] = 1
    return Polynomial._raw(nvars, {tuple(exp): as_scalar(1, field)}, field)


def elementary_symmetric(degree: int, nvars: int, field: str = EXACT) -> Polynomial:
    """``e_r(x_1..x_m)``: sum of all square-free degree-``r`` monomials."""
    if nvars < 1:
        raise DomainError("elementary symmetric polynomial needs at least one variable")
    if not 0 <= degree <= nvars:
        raise DomainError(f"degree {degree} outside 0..{nvars}")
    one = as_scalar(1, field)
    terms = {}
    for idx in combinations(range(nvars), degree):
        exp = [0] * nvars
        for i in idx:
            exp[i] = 1
        terms[tuple(exp)] = one
    return Polynomial._raw(nvars, terms, field)


def reciprocal(p: Polynomial) -> Polynomial:
    """``x1^d1 ... xm^dm p(1/x1, ..., 1/xm)`` with ``d_j = deg_j(p)``."""
    if not len(p):
        raise DomainError("reciprocal of the zero polynomial is undefined")
    d = p.degrees()
    return Polynomial._raw(
        p.nvars,
        {tuple(dj - ej for dj, ej in zip(d, e)): c for e, c in p._terms.items()},
        p.field,
    )


def compose(p: Polynomial, images: Sequence[Polynomial]) -> Polynomial:
    """Substitute ``images[i]`` for variable ``x_{i+1}`` of ``p``."""
    if len(images) != p.nvars:
        raise DomainError(f"need {p.nvars} images, got {len(images)}")
    if not images:
        raise DomainError("cannot compose a polynomial in zero variables")
    nv = images[0].nvars
    for q in images:
        if q.nvars != nv:
            raise DomainError("images must share a variable count")
        if q.field != p.field:
            raise DomainError(f"field mismatch: {p.field} vs {q.field}")
    powers: list[dict] = [{0: constant(1, nv, p.field)} for _ in images]

    def power(i, k):
        cache = powers[i]
        if k not in cache:
            cache[k] = power(i, k - 1) * images[i]
        return cache[k]

    acc: dict = {}
    for exp, coef in p._terms.items():
        term = None
        for i, k in enumerate(exp):
            if k:
                term = power(i, k) if term is None else term * power(i, k)
        if term is None:
            term = powers[0][0]
        for e, c in term._terms.items():
            acc[e] = acc.get(e, 0) + coef * c
    return Polynomial._raw(nv, {e: c for e, c in acc.items() if c != 0}, p.field)


def _rows_of(U) -> list:
    rows = getattr(U, "rows", U)
    return [list(r) for r in rows]


def linear_forms(U, field: str) -> list:
    """Row ``i`` of ``U`` as the linear polynomial ``sum_j U[i][j] * xi_j``."""
    rows = _rows_of(U)
    if not rows:
        raise DomainError("matrix has no rows")
    n = len(rows[0])
    if n < 1 or any(len(r) != n for r in rows):
        raise DomainError("matrix rows must be non-empty and of equal length")
    forms = []
    for r in rows:
        terms = {}
        for j, v in enumerate(r):
            c = as_scalar(v, field)
            if c != 0:
                exp = [0] * n
                exp[j] = 1
                terms[tuple(exp)] = c
        forms.append(Polynomial._raw(n, terms, field))
    return forms


def substitute_linear_forms(p: Polynomial, U) -> Polynomial:
    """Expand ``p(U xi)``: replace ``x_i`` by ``sum_j U[i][j] xi_j``."""
    rows = _rows_of(U)
    if len(rows) != p.nvars:
        raise DomainError(f"matrix has {len(rows)} rows, polynomial has {p.nvars} variables")
    return compose(p, linear_forms(rows, p.field))


def evaluate(p: Polynomial, point: Sequence):
    if len(point) != p.nvars:
        raise DomainError(f"point has length {len(point)}, expected {p.nvars}")
    vals = [as_scalar(v, p.field) for v in point]
    contributions = []
    for exp, coef in p.items():
        t = coef
        for v, k in zip(vals, exp):
            if k:
                t = t * v ** k
        contributions.append(t)
    if p.field == FLOAT:
        return math.fsum(contributions)
    return sum(contributions, Fraction(0))


# -- permanents ------------------------------------------------------------

def _ryser_square(rows: Sequence[Sequence]):
    n = len(rows)
    total = 0
    for size in range(1, n + 1):
        sign = (-1) ** size
        for cols in combinations(range(n), size):
            prod = 1
            for r in rows:
                s = 0
                for c in cols:
                    s += r[c]
                prod *= s
                if not prod:
                    break
            total += sign * prod
    return (-1) ** n * total


def rectangular_permanent(A):
    """Permanent of an ``r_m x r_n`` matrix with ``r_m >= r_n``.

    Sums, over every injective assignment of columns to rows, the product of
    the selected entries.  Entries are used as given (Fractions stay exact).
    """
    rows = [list(r) for r in (A.tolist() if isinstance(A, np.ndarray) else A)]
    rm = len(rows)
    rn = len(rows[0]) if rows else 0
    if any(len(r) != rn for r in rows):
        raise DomainError("ragged matrix")
    if rm < rn:
        raise DomainError(f"permanent needs rows >= cols, got {rm}x{rn}")
    if rn == 0:
        return 1
    if rn == 1:
        return sum(r[0] for r in rows)
    if rn == 2:
        s0 = sum(r[0] for r in rows)
        s1 = sum(r[1] for r in rows)
        return s0 * s1 - sum(r[0] * r[1] for r in rows)
    total = 0
    for subset in combinations(range(rm), rn):
        total += _ryser_square([rows[i] for i in subset])
    return total
