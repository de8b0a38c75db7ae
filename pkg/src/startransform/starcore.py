"""Star symbols, their dual differential-operator symbols, and injectivity.

A star transform ``S = p(X_{u_1}, ..., X_{u_m})`` is described by its total
symbol ``(p, U)``.  The dual operator ``L`` has total symbol
``sigma(xi) = p*(U xi)`` where ``p*`` is the reciprocal polynomial, and
``S`` is injective exactly when ``sigma`` is not identically zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import polyring as pr
from .exceptions import DomainError
from .polyring import EPS_POLY, EXACT, FLOAT, Polynomial


class BranchMatrix:
    """``m x n`` matrix whose rows are the branch vectors ``u_1..u_m``.

    Entries are Fractions (exact) or floats.  Zero rows are allowed here
    because degenerate configurations are studied as subspaces; operations
    that need realizable branches call :meth:`require_nonzero_rows`.
    """

    __slots__ = ("rows", "field")

    def __init__(self, rows, field: str | None = None):
        if isinstance(rows, BranchMatrix):
            rows = rows.rows
        if isinstance(rows, np.ndarray):
            rows = rows.tolist()
        rows = [list(r) for r in rows]
        if not rows or not rows[0]:
            raise DomainError("branch matrix needs at least one row and one column")
        n = len(rows[0])
        if any(len(r) != n for r in rows):
            raise DomainError("branch matrix rows must have equal length")
        if field is None:
            field = pr.infer_field(v for r in rows for v in r)
        self.rows = tuple(tuple(pr.as_scalar(v, field) for v in r) for r in rows)
        self.field = field

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.rows[0])

    @property
    def shape(self) -> tuple:
        return (self.m, self.n)

    def astype(self, field: str) -> "BranchMatrix":
        if field == self.field:
            return self
        conv = float if field == FLOAT else Fraction
        return BranchMatrix([[conv(v) for v in r] for r in self.rows], field)

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.rows], dtype=float)

    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.to_numpy(), axis=1)

    def rank(self) -> int:
        if self.field == EXACT:
            return _exact_rank(self.rows)
        return int(np.linalg.matrix_rank(self.to_numpy(), tol=1e-10))

    def require_nonzero_rows(self):
        for i, r in enumerate(self.rows):
            if all(v == 0 for v in r):
                raise DomainError(f"branch vector u_{i + 1} is zero")

    def scaled(self, factor) -> "BranchMatrix":
        c = pr.as_scalar(factor, self.field)
        return BranchMatrix([[c * v for v in r] for r in self.rows], self.field)

    def __matmul__(self, other) -> "BranchMatrix":
        other = BranchMatrix(other, self.field) if not isinstance(other, BranchMatrix) else other
        if other.field != self.field:
            raise DomainError("field mismatch in matrix product")
        if other.m != self.n:
            raise DomainError("inner dimensions differ")
        cols = list(zip(*other.rows))
        return BranchMatrix(
            [[sum((a * b for a, b in zip(r, c)), pr.as_scalar(0, self.field)) for c in cols]
             for r in self.rows], self.field)

    def __eq__(self, other):
        if not isinstance(other, BranchMatrix):
            return NotImplemented
        return self.field == other.field and self.rows == other.rows

    def __hash__(self):
        return hash((self.field, self.rows))

    def __repr__(self):
        body = ", ".join("(" + ", ".join(str(v) for v in r) + ")" for r in self.rows)
        return f"BranchMatrix([{body}], field={self.field!r})"

    def to_json(self) -> dict:
        if self.field == EXACT:
            rows = [[v.numerator if v.denominator == 1 else str(v) for v in r]
                    for r in self.rows]
        else:
            rows = [list(r) for r in self.rows]
        return {"m": self.m, "n": self.n, "rows": rows}

    @classmethod
    def from_json(cls, data) -> "BranchMatrix":
        """Parse ``{"rows": [...]}`` (optionally with ``m``/``n``) or a bare list of rows."""
        if isinstance(data, list):
            return cls(data)
        try:
            rows = data["rows"]
        except (KeyError, TypeError):
            raise DomainError("branch matrix JSON needs a 'rows' entry") from None
        U = cls(rows)
        if "m" in data and data["m"] != U.m or "n" in data and data["n"] != U.n:
            raise DomainError("declared m/n do not match the rows")
        return U


def _exact_rank(rows) -> int:
    mat = [list(r) for r in rows]
    rank = 0
    ncols = len(mat[0])
    for c in range(ncols):
        pivot = next((i for i in range(rank, len(mat)) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        for i in range(rank + 1, len(mat)):
            f = mat[i][c] / mat[rank][c]
            if f:
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[rank])]
        rank += 1
    return rank


@dataclass(frozen=True, eq=False)
class StarSymbol:
    """Total symbol ``(p, U)`` of a star transform."""

    p: Polynomial
    U: BranchMatrix

    def __post_init__(self):
        U = self.U if isinstance(self.U, BranchMatrix) else BranchMatrix(self.U)
        p = self.p
        if p.nvars != U.m:
            raise DomainError(f"p has {p.nvars} variables but U has {U.m} rows")
        # one coefficient field for the pair: float wins, by explicit conversion
        if FLOAT in (p.field, U.field):
            p, U = p.astype(FLOAT), U.astype(FLOAT)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "U", U)

    @classmethod
    def elementary(cls, k: int, U) -> "StarSymbol":
        U = U if isinstance(U, BranchMatrix) else BranchMatrix(U)
        return cls(pr.elementary_symmetric(k, U.m, U.field), U)

    @property
    def field(self) -> str:
        return self.p.field

    @property
    def order(self) -> Optional[int]:
        """Total degree when ``p`` is homogeneous, else ``None``."""
        if len(self.p) and self.p.is_homogeneous():
            return self.p.degree
        return None

    def elementary_degree(self) -> Optional[int]:
        """``k`` if ``p`` is exactly ``e_k``, else ``None``."""
        k = self.p.degree
        if k < 0:
            return None
        if self.p == pr.elementary_symmetric(k, self.p.nvars, self.field):
            return k
        return None

    def to_json(self) -> dict:
        k = self.elementary_degree()
        p = {"elementary": k} if k is not None else self.p.to_json()
        return {"p": p, "U": self.U.to_json()}

    @classmethod
    def from_json(cls, data: Mapping) -> "StarSymbol":
        try:
            pdata, udata = data["p"], data["U"]
        except (KeyError, TypeError):
            raise DomainError("star JSON needs 'p' and 'U' entries") from None
        U = BranchMatrix.from_json(udata)
        if isinstance(pdata, Mapping) and "elementary" in pdata:
            k = pdata["elementary"]
            if not isinstance(k, int) or isinstance(k, bool):
                raise DomainError("'elementary' must be an integer")
            return cls.elementary(k, U)
        return cls(Polynomial.from_json(pdata), U)


class Path(str, enum.Enum):
    SUBSTITUTION = "substitution"
    PERMANENT = "permanent"


@dataclass(frozen=True, eq=False)
class DualSymbol:
    """Total symbol ``sigma(xi)`` of the dual operator, with provenance."""

    sigma: Polynomial
    source: StarSymbol
    path: Path = Path.SUBSTITUTION

    def format(self) -> str:
        return self.sigma.format("xi")


class SymbolClass(str, enum.Enum):
    IDENTICALLY_ZERO = "identically_zero"
    ELLIPTIC = "elliptic"
    NON_ELLIPTIC_NONZERO = "non_elliptic_nonzero"
    UNDETERMINED = "undetermined"


def dual_symbol(s: StarSymbol) -> DualSymbol:
    """``sigma = p*(U xi)`` by reciprocal then linear substitution."""
    sigma = pr.substitute_linear_forms(pr.reciprocal(s.p), s.U)
    return DualSymbol(sigma, s, Path.SUBSTITUTION)


def _multi_indices(total: int, n: int):
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _multi_indices(total - first, n - 1):
            yield (first,) + rest


def elementary_of_forms_via_permanent(r: int, U: BranchMatrix) -> Polynomial:
    """``e_r(U xi)`` assembled coefficient-by-coefficient from permanents.

    The coefficient of ``xi^k`` is ``perm(U(k)) / (k_1! ... k_n!)`` where
    ``U(k)`` repeats column ``j`` of ``U`` exactly ``k_j`` times.  The
    factorial divisor removes the reorderings of repeated columns that the
    permanent counts separately.
    """
    m, n = U.shape
    if not 0 <= r <= m:
        raise DomainError(f"degree {r} outside 0..{m}")
    cols = list(zip(*U.rows))
    terms = {}
    for k in _multi_indices(r, n):
        chosen = [j for j, kj in enumerate(k) for _ in range(kj)]
        sub = [[cols[j][i] for j in chosen] for i in range(m)]
        perm = pr.rectangular_permanent(sub) if chosen else 1
        norm = math.prod(math.factorial(kj) for kj in k)
        if U.field == EXACT:
            coef = Fraction(perm) / norm
        else:
            coef = float(perm) / norm
        terms[k] = coef
    return Polynomial(n, terms, U.field)


def dual_symbol_permanent_path(s: StarSymbol) -> DualSymbol:
    """Dual symbol of ``(e_{m-r}, U)`` computed as ``e_r(U xi)`` via permanents."""
    k = s.elementary_degree()
    if k is None:
        raise DomainError("permanent path requires an elementary symmetric polynomial symbol")
    sigma = elementary_of_forms_via_permanent(s.U.m - k, s.U)
    return DualSymbol(sigma, s, Path.PERMANENT)


def is_injective(s: StarSymbol) -> bool:
    """Symbolic injectivity test: the dual symbol is not identically zero.

    The test presumes ``S`` is non-zero and realizable; neither is checked.
    """
    return not dual_symbol(s).sigma.is_zero()


def _sigma_of(d) -> Polynomial:
    return d.sigma if isinstance(d, DualSymbol) else d


def laplacian_power_form(d) -> Optional[tuple]:
    """Return ``(C, j)`` when ``sigma == C * (xi_1^2 + ... + xi_n^2)^j``."""
    sigma = _sigma_of(d)
    if sigma.is_zero() or not sigma.is_homogeneous():
        return None
    deg = sigma.degree
    if deg < 2 or deg % 2:
        return None
    j = deg // 2
    n = sigma.nvars
    lead = [0] * n
    lead[0] = deg
    C = sigma.coefficient(lead)
    if sigma.field == FLOAT:
        if abs(C) <= EPS_POLY * max(1.0, sigma.max_abs_coefficient()):
            return None
    elif C == 0:
        return None
    radial = sum((pr.variable(i, n, sigma.field) ** 2 for i in range(1, n)),
                 pr.variable(0, n, sigma.field) ** 2)
    target = (radial ** j) * C
    if sigma.field == FLOAT:
        ok = sigma.close_to(target)
    else:
        ok = sigma == target
    return (C, j) if ok else None


def unit_directions(n: int, count: int = 10_000) -> np.ndarray:
    """Deterministic quasi-uniform points on ``S^{n-1}``."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        t = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        phi = np.pi * (3 - math.sqrt(5)) * i
        rho = np.sqrt(1 - z * z)
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    from scipy.special import ndtri
    pts = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    g = ndtri(np.clip(pts, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _exact_minors_sign(Q) -> Optional[int]:
    """+1 positive definite, -1 negative definite, None otherwise."""
    n = len(Q)
    minors = []
    for k in range(1, n + 1):
        minors.append(_exact_det([row[:k] for row in Q[:k]]))
    if all(mk > 0 for mk in minors):
        return 1
    if all((mk > 0) if k % 2 == 0 else (mk < 0) for k, mk in enumerate(minors, start=1)):
        return -1
    return None


def _exact_det(M) -> Fraction:
    M = [list(r) for r in M]
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for i in range(c + 1, n):
            f = M[i][c] / M[c][c]
            if f:
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return det


def classify_symbol(d, samples: int = 10_000) -> SymbolClass:
    """Elliptic / non-elliptic / zero classification of a homogeneous symbol.

    Quadratic symbols are decided from the coefficient matrix.  Higher
    degrees are sampled on ``samples`` quasi-uniform unit directions: a sign
    change or a value within ``EPS_POLY`` of zero (relative to the sampled
    maximum) means non-elliptic, a minimum above ``sqrt(EPS_POLY)`` means
    elliptic, and the band in between is reported as undetermined.
    """
    sigma = _sigma_of(d)
    if not sigma.is_homogeneous():
        raise DomainError("classification needs a homogeneous symbol")
    if sigma.field == EXACT and not len(sigma):
        return SymbolClass.IDENTICALLY_ZERO
    if sigma.field == FLOAT and sigma.is_zero():
        return SymbolClass.IDENTICALLY_ZERO
    deg = sigma.degree
    n = sigma.nvars
    if deg == 0:
        return SymbolClass.ELLIPTIC
    if deg % 2:
        return SymbolClass.NON_ELLIPTIC_NONZERO
    if deg == 2:
        Q = [[sigma.coefficient(_pair_exp(i, j, n)) / (1 if i == j else 2) for j in range(n)]
             for i in range(n)]
        if sigma.field == EXACT:
            return (SymbolClass.ELLIPTIC if _exact_minors_sign(Q) is not None
                    else SymbolClass.NON_ELLIPTIC_NONZERO)
        eig = np.linalg.eigvalsh(np.array(Q, dtype=float))
        tol = EPS_POLY * max(1.0, float(np.max(np.abs(eig))))
        if eig.min() > tol or eig.max() < -tol:
            return SymbolClass.ELLIPTIC
        return SymbolClass.NON_ELLIPTIC_NONZERO
    vals = pr.evaluate_many(sigma, unit_directions(n, samples))
    if not np.all(np.isfinite(vals)):
        return SymbolClass.UNDETERMINED
    scale = float(np.max(np.abs(vals)))
    if scale == 0 or (vals.min() < 0 < vals.max()):
        return SymbolClass.NON_ELLIPTIC_NONZERO
    low = _refined_min_abs(sigma, unit_directions(n, samples), vals) / scale
    if low <= EPS_POLY:
        return SymbolClass.NON_ELLIPTIC_NONZERO
    if low > math.sqrt(EPS_POLY):
        return SymbolClass.ELLIPTIC
    return SymbolClass.UNDETERMINED


def _refined_min_abs(sigma: Polynomial, dirs: np.ndarray, vals: np.ndarray, starts: int = 8) -> float:
    """Smallest ``|sigma|`` on the sphere, polished from the lowest samples.

    A zero that falls between sample points shows up only as a small
    positive minimum; a local search from the best samples drives it to
    roundoff so it cannot masquerade as ellipticity.
    """
    def obj(x):
        r = np.linalg.norm(x)
        return abs(float(pr.evaluate_many(sigma, (x / r)[None, :])[0])) if r else np.inf

    best = float(np.min(np.abs(vals)))
    for i in np.argsort(np.abs(vals))[:starts]:
        res = minimize(obj, dirs[i], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 2000})
        best = min(best, float(res.fun))
    return best


def _pair_exp(i, j, n):
    e = [0] * n
    e[i] += 1
    e[j] += 1
    return tuple(e)
