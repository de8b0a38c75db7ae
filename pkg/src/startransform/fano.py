"""Non-invertible stars as linear subspaces of ``{e_{m-1} = 0}``.

Perfect matchings give the isolated subspaces, reduced column-echelon form
decides when two branch matrices span the same subspace, the Cayley nodal
cubic supplies the ``m = 4`` line catalog, and a multi-start Newton solver
explores the identity-block Grassmannian chart numerically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations, product

import numpy as np
from scipy.stats import qmc

from . import polyring as pr
from .exceptions import CapacityError, DomainError
from .polyring import EXACT, FLOAT, Polynomial
from .starcore import BranchMatrix

MAX_MATCHING_M = 16
MAX_CHART_UNKNOWNS = 12
PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class Matching:
    """Perfect matching of ``{1..2n}`` as sorted 1-based pairs."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple(sorted(tuple(sorted((int(a), int(b)))) for a, b in self.pairs))
        flat = [x for pr_ in pairs for x in pr_]
        if sorted(flat) != list(range(1, 2 * len(pairs) + 1)):
            raise DomainError(f"pairs {pairs} do not partition 1..{2 * len(pairs)}")
        object.__setattr__(self, "pairs", pairs)

    @property
    def m(self) -> int:
        return 2 * len(self.pairs)


def double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def perfect_matchings(m: int) -> list:
    """All perfect matchings of ``{1..m}``; the smallest free element is paired first."""
    if m < 2 or m % 2:
        raise DomainError("perfect matchings need an even m >= 2")
    if m > MAX_MATCHING_M:
        raise CapacityError(f"matching enumeration bounded to m <= {MAX_MATCHING_M}")

    def rec(free):
        if not free:
            yield ()
            return
        a = free[0]
        for i in range(1, len(free)):
            rest = free[1:i] + free[i + 1:]
            for tail in rec(rest):
                yield ((a, free[i]),) + tail

    return [Matching(p) for p in rec(tuple(range(1, m + 1)))]


def matching_to_branch_matrix(mt: Matching) -> BranchMatrix:
    """Pair ``t`` = ``(a, b)`` puts ``e_t`` in row ``a`` and ``-e_t`` in row ``b``."""
    n = len(mt.pairs)
    rows = [[0] * n for _ in range(mt.m)]
    for t, (a, b) in enumerate(mt.pairs):
        rows[a - 1][t] = 1
        rows[b - 1][t] = -1
    return BranchMatrix(rows)


def subspace_in_hypersurface(U, p: Polynomial) -> bool:
    """Whether the column space of ``U`` lies in ``V(p)``, i.e. ``p(U xi) == 0``."""
    U = U if isinstance(U, BranchMatrix) else BranchMatrix(U)
    if p.nvars != U.m:
        raise DomainError(f"p has {p.nvars} variables, U has {U.m} rows")
    if FLOAT in (p.field, U.field):
        p, U = p.astype(FLOAT), U.astype(FLOAT)
    return pr.substitute_linear_forms(p, U).is_zero()


def canonical_subspace(U) -> BranchMatrix:
    """Reduced column-echelon form: the unique representative of ``U GL_n``."""
    U = U if isinstance(U, BranchMatrix) else BranchMatrix(U)
    m, n = U.shape
    if U.field == EXACT:
        T = [list(col) for col in zip(*U.rows)]  # n x m, row-reduce
        zero = Fraction(0)
        pivot_row = 0
        for c in range(m):
            piv = next((i for i in range(pivot_row, n) if T[i][c] != 0), None)
            if piv is None:
                continue
            T[pivot_row], T[piv] = T[piv], T[pivot_row]
            lead = T[pivot_row][c]
            T[pivot_row] = [v / lead for v in T[pivot_row]]
            for i in range(n):
                if i != pivot_row and T[i][c] != zero:
                    f = T[i][c]
                    T[i] = [a - f * b for a, b in zip(T[i], T[pivot_row])]
            pivot_row += 1
            if pivot_row == n:
                break
        if pivot_row < n:
            raise DomainError("branch matrix is rank deficient")
        return BranchMatrix([list(r) for r in zip(*T)], EXACT)
    T = U.to_numpy().T.copy()
    pivot_row = 0
    for c in range(m):
        col = np.abs(T[pivot_row:, c])
        if col.size == 0 or col.max() <= PIVOT_TOL:
            continue
        piv = pivot_row + int(np.argmax(col))
        T[[pivot_row, piv]] = T[[piv, pivot_row]]
        T[pivot_row] /= T[pivot_row, c]
        for i in range(n):
            if i != pivot_row:
                T[i] -= T[i, c] * T[pivot_row]
        T[np.abs(T) <= PIVOT_TOL] = 0.0
        pivot_row += 1
        if pivot_row == n:
            break
    if pivot_row < n:
        raise DomainError("branch matrix is rank deficient")
    return BranchMatrix(T.T + 0.0, FLOAT)


def _canon_key(C: BranchMatrix):
    if C.field == EXACT:
        return C.rows
    return tuple(tuple(round(v, 9) + 0.0 for v in r) for r in C.rows)


def enumerate_isolated_subspaces(n: int) -> list:
    """Canonical subspaces of every perfect matching of ``{1..2n}``.

    Verifies that the ``(2n-1)!!`` forms are pairwise distinct and each lies
    in ``V(e_{2n-1})``; raises ``AssertionError`` otherwise.
    """
    if n < 1:
        raise DomainError("n must be positive")
    if 2 * n > MAX_MATCHING_M:
        raise CapacityError(f"isolated-subspace enumeration bounded to n <= {MAX_MATCHING_M // 2}")
    m = 2 * n
    target = pr.elementary_symmetric(m - 1, m)
    out = []
    for mt in perfect_matchings(m):
        U = matching_to_branch_matrix(mt)
        if not subspace_in_hypersurface(U, target):
            raise AssertionError(f"matching {mt.pairs} gives a subspace outside V(e_{m - 1})")
        out.append(canonical_subspace(U))
    keys = {_canon_key(c) for c in out}
    if len(keys) != len(out) or len(out) != double_factorial(m - 1):
        raise AssertionError("matching subspaces are not pairwise distinct")
    return out


def signed_permutation_matrices(n: int):
    for perm in permutations(range(n)):
        for signs in product((1, -1), repeat=n):
            g = [[0] * n for _ in range(n)]
            for i, (j, s) in enumerate(zip(perm, signs)):
                g[i][j] = s
            yield g


def paired_branch_matrix(n: int) -> BranchMatrix:
    """Rows ``e_1, -e_1, ..., e_n, -e_n``."""
    return matching_to_branch_matrix(Matching([(2 * t + 1, 2 * t + 2) for t in range(n)]))


def signed_permutation_stabilizer(n: int) -> int:
    """Count sign-permutation ``g`` that fix the row set and the subspace of ``U_0``."""
    U0 = paired_branch_matrix(n)
    base = _canon_key(canonical_subspace(U0))
    rowset = sorted(U0.rows)
    count = 0
    for g in signed_permutation_matrices(n):
        Ug = U0 @ g
        if sorted(Ug.rows) == rowset and _canon_key(canonical_subspace(Ug)) == base:
            count += 1
    return count


def row_permutation_stabilizer(n: int) -> int:
    """Count row orderings of ``U_0`` whose column space equals that of ``U_0``.

    This is the orbit-stabilizer count behind ``(2n)! / (2^n n!)`` distinct
    subspaces.
    """
    if n > 4:
        raise CapacityError("row permutation sweep bounded to n <= 4")
    U0 = paired_branch_matrix(n)
    base = _canon_key(canonical_subspace(U0))
    count = 0
    for perm in permutations(range(2 * n)):
        P = BranchMatrix([U0.rows[i] for i in perm])
        if _canon_key(canonical_subspace(P)) == base:
            count += 1
    return count


# -- Cayley nodal cubic ----------------------------------------------------

class LineKind(str, enum.Enum):
    SINGULAR = "singular"
    SMOOTH = "smooth"


@dataclass(frozen=True, eq=False)
class CayleyLine:
    kind: LineKind
    label: tuple
    basis: BranchMatrix


def cayley_lines() -> list:
    """The six singular lines ``L_ij`` and three smooth lines ``M_kl`` of ``e_3 = 0``."""
    e3 = pr.elementary_symmetric(3, 4)
    lines = []
    for i, j in combinations(range(1, 5), 2):
        others = [k for k in range(1, 5) if k not in (i, j)]
        rows = [[0, 0] for _ in range(4)]
        for t, k in enumerate(others):
            rows[k - 1][t] = 1
        lines.append(CayleyLine(LineKind.SINGULAR, (i, j), BranchMatrix(rows)))
    for mt in perfect_matchings(4):
        lines.append(CayleyLine(LineKind.SMOOTH, mt.pairs, matching_to_branch_matrix(mt)))
    for line in lines:
        if not subspace_in_hypersurface(line.basis, e3):
            raise AssertionError(f"line {line.label} is not on the Cayley cubic")
    return lines


# -- Grassmannian chart -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChartSystem:
    """Coefficient equations of ``e_{m-1}([I_n; W] xi)`` in the entries of ``W``.

    Unknowns are the entries of the ``(m-n) x n`` block ``W`` in row-major
    order.  ``monomials[i]`` is the ``xi`` exponent whose coefficient gives
    ``equations[i]``.
    """

    m: int
    n: int
    monomials: tuple
    equations: tuple
    row_order: tuple = None

    @property
    def unknown_count(self) -> int:
        return (self.m - self.n) * self.n

    def unknown_names(self) -> list:
        return [f"w{i + 1}{j + 1}" for i in range(self.m - self.n) for j in range(self.n)]

    def branch_matrix(self, w) -> np.ndarray:
        """Assemble ``[I_n; W]`` (rows permuted back by ``row_order``)."""
        W = np.asarray(w, dtype=float).reshape(self.m - self.n, self.n)
        U = np.vstack([np.eye(self.n), W])
        if self.row_order is not None:
            out = np.empty_like(U)
            out[list(self.row_order)] = U
            U = out
        return U

    def to_json(self) -> dict:
        return {
            "m": self.m, "n": self.n, "unknowns": self.unknown_names(),
            "equations": [{"monomial": list(mon), "poly": eq.to_json(),
                           "text": eq.format(names=self.unknown_names())} for mon, eq in zip(self.monomials, self.equations)],
        }


def chart_equations(m: int, n: int, row_order=None) -> ChartSystem:
    """Polynomial system for ``n``-planes in ``{e_{m-1} = 0}`` in the identity chart.

    ``row_order`` optionally places the chart rows: row ``i`` of ``[I_n; W]``
    becomes row ``row_order[i]`` of the branch matrix, reaching the other
    charts of the Grassmannian.
    """
    if not m > n >= 1:
        raise DomainError("chart needs m > n >= 1")
    k = (m - n) * n
    if row_order is not None:
        row_order = tuple(int(i) for i in row_order)
        if sorted(row_order) != list(range(m)):
            raise DomainError("row_order must be a permutation of 0..m-1")
    nv = n + k  # xi_1..xi_n then the entries of W
    xi = [pr.variable(j, nv) for j in range(n)]
    forms = list(xi)
    for i in range(m - n):
        forms.append(sum((pr.variable(n + i * n + j, nv) * xi[j] for j in range(1, n)),
                         pr.variable(n + i * n, nv) * xi[0]))
    if row_order is not None:
        placed = [None] * m
        for i, r in enumerate(row_order):
            placed[r] = forms[i]
        forms = placed
    full = pr.compose(pr.elementary_symmetric(m - 1, m), forms)
    grouped: dict = {}
    for exp, coef in full.items():
        grouped.setdefault(exp[:n], {})[exp[n:]] = coef
    # every degree m-1 monomial gets an equation, identically zero ones included
    mons = sorted(_degree_exponents(m - 1, n), key=lambda e: (sum(e), e), reverse=True)
    eqs = tuple(Polynomial(k, grouped.get(mon, {})) for mon in mons)
    return ChartSystem(m, n, tuple(mons), eqs, row_order)


def _degree_exponents(d: int, n: int):
    if n == 1:
        return [(d,)]
    return [(a,) + rest for a in range(d, -1, -1) for rest in _degree_exponents(d - a, n - 1)]


@dataclass(frozen=True)
class SolutionCluster:
    center: tuple
    multiplicity: int
    residual: float


def _compile(polys, k):
    compiled = []
    for p in polys:
        exps, coefs = pr.to_arrays(p)
        compiled.append((exps, coefs))
    jac = [[pr.to_arrays(p.derivative(v)) for v in range(k)] for p in polys]
    return compiled, jac


def _eval_batch(compiled, X):
    out = np.zeros((X.shape[0], len(compiled)))
    for i, (exps, coefs) in enumerate(compiled):
        if len(coefs):
            out[:, i] = np.prod(X[:, None, :] ** exps[None], axis=2) @ coefs
    return out


def _jac_batch(jac, X):
    S, k = X.shape
    J = np.zeros((S, len(jac), k))
    for i, row in enumerate(jac):
        for v, (exps, coefs) in enumerate(row):
            if len(coefs):
                J[:, i, v] = np.prod(X[:, None, :] ** exps[None], axis=2) @ coefs
    return J


def solve_chart_newton(cs: ChartSystem, starts: int = 500, seed: int = 0,
                       max_iter: int = 200, tol: float = 1e-12,
                       cluster_radius: float = 1e-6) -> list:
    """Multi-start damped Gauss-Newton on the chart equations.

    Starting points come from a scrambled Halton sequence in ``[-2, 2]^k``.
    Each iteration takes the minimum-norm least-squares Newton step and halves
    it until the residual norm decreases.  Points with final residual below
    ``tol`` are clustered greedily with ``cluster_radius``; clusters come back
    sorted by center.
    """
    k = cs.unknown_count
    if k > MAX_CHART_UNKNOWNS:
        raise CapacityError(f"chart solver bounded to {MAX_CHART_UNKNOWNS} unknowns")
    compiled, jac = _compile(cs.equations, k)
    X = qmc.Halton(d=k, scramble=True, seed=seed).random(starts) * 4.0 - 2.0
    F = _eval_batch(compiled, X)
    res = np.linalg.norm(F, axis=1)
    active = np.ones(len(X), dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if not len(idx):
            break
        J = _jac_batch(jac, X[idx])
        step = -np.einsum("sij,sj->si", np.linalg.pinv(J, rcond=1e-13), F[idx])
        alpha = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        newX = X[idx].copy()
        newF = F[idx].copy()
        newres = res[idx].copy()
        for _ls in range(30):
            todo = ~accepted
            if not todo.any():
                break
            trial = X[idx][todo] + alpha[todo, None] * step[todo]
            Ft = _eval_batch(compiled, trial)
            rt = np.linalg.norm(Ft, axis=1)
            ok = np.isfinite(rt) & (rt < res[idx][todo])
            sel = np.flatnonzero(todo)[ok]
            newX[sel], newF[sel], newres[sel] = trial[ok], Ft[ok], rt[ok]
            accepted[sel] = True
            alpha[todo] *= 0.5
        moved = np.linalg.norm(newX - X[idx], axis=1)
        X[idx], F[idx], res[idx] = newX, newF, newres
        # stop a start once it cannot improve or has settled to machine precision
        done = ~accepted | (moved <= 1e-15 * (1 + np.linalg.norm(newX, axis=1)))
        done |= np.abs(X[idx]).max(axis=1) > 1e8
        active[idx[done]] = False
    good = np.flatnonzero(np.isfinite(res) & (res < tol))
    clusters: list = []
    for i in good:
        x = X[i]
        for c in clusters:
            if np.linalg.norm(x - c["pts"][0]) <= cluster_radius:
                c["pts"].append(x)
                c["res"] = max(c["res"], res[i])
                break
        else:
            clusters.append({"pts": [x], "res": res[i]})
    out = []
    for c in clusters:
        center = np.mean(c["pts"], axis=0)
        center = tuple(float(v) + 0.0 for v in np.round(center, 12))
        out.append(SolutionCluster(center, len(c["pts"]), float(c["res"])))
    return sorted(out, key=lambda c: c.center)
