"""Symmetric branch configurations and invariance of dual symbols.

Catalog shapes (regular polygons, Platonic solids), the dihedral group, a
search for every orthogonal map permuting the rows of a branch matrix, and a
check that a polynomial is fixed by such a map.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import permutations, product

import numpy as np

from . import polyring as pr
from .exceptions import CapacityError, DomainError
from .polyring import EPS_POLY, FLOAT, Polynomial
from .starcore import BranchMatrix

EPS_ORTH = 1e-10
EPS_ROW = 1e-8
MAX_SEARCH_ROWS = 24
MAX_SEARCH_DIM = 3

PHI = (1 + math.sqrt(5)) / 2


class SolidKind(str, enum.Enum):
    TETRAHEDRON = "tetrahedron"
    CUBE = "cube"
    OCTAHEDRON = "octahedron"
    ICOSAHEDRON = "icosahedron"
    DODECAHEDRON = "dodecahedron"


@dataclass(frozen=True, eq=False)
class OrthogonalMap:
    g: np.ndarray

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DomainError("orthogonal map must be square")
        if np.max(np.abs(g.T @ g - np.eye(len(g)))) > EPS_ORTH:
            raise DomainError("matrix is not orthogonal")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return len(self.g)

    def compose(self, other: "OrthogonalMap") -> "OrthogonalMap":
        return OrthogonalMap(self.g @ other.g)

    def inverse(self) -> "OrthogonalMap":
        return OrthogonalMap(self.g.T)

    def close_to(self, other: "OrthogonalMap", tol: float = EPS_ORTH) -> bool:
        return bool(np.max(np.abs(self.g - other.g)) <= tol)


@dataclass(frozen=True)
class BranchPermutation:
    """Permutation ``perm`` of row indices: row ``i`` maps to row ``perm[i]``."""

    perm: tuple

    def __post_init__(self):
        perm = tuple(int(i) for i in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise DomainError(f"not a permutation: {perm}")
        object.__setattr__(self, "perm", perm)

    def matrix(self) -> np.ndarray:
        m = len(self.perm)
        P = np.zeros((m, m))
        P[np.arange(m), self.perm] = 1
        return P


def regular_polygon_branches(m: int) -> BranchMatrix:
    if m < 3:
        raise DomainError("a regular polygon needs at least 3 vertices")
    t = 2 * np.pi * np.arange(m) / m
    return BranchMatrix(np.column_stack([np.cos(t), np.sin(t)]), FLOAT)


def _cyclic(v):
    a, b, c = v
    return [(a, b, c), (c, a, b), (b, c, a)]


def platonic_branches(kind) -> BranchMatrix:
    """Vertex coordinates of a Platonic solid centered at the origin."""
    kind = SolidKind(kind)
    if kind is SolidKind.TETRAHEDRON:
        return BranchMatrix([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)])
    if kind is SolidKind.CUBE:
        return BranchMatrix([list(s) for s in product((1, -1), repeat=3)])
    if kind is SolidKind.OCTAHEDRON:
        rows = []
        for i in range(3):
            for s in (1, -1):
                r = [0, 0, 0]
                r[i] = s
                rows.append(r)
        return BranchMatrix(rows)
    if kind is SolidKind.ICOSAHEDRON:
        rows = []
        for s1, s2 in product((1, -1), repeat=2):
            rows += _cyclic((0.0, float(s1), s2 * PHI))
        return BranchMatrix(rows, FLOAT)
    rows = [tuple(float(c) for c in s) for s in product((1, -1), repeat=3)]
    for s1, s2 in product((1, -1), repeat=2):
        rows += _cyclic((0.0, s1 / PHI, s2 * PHI))
    return BranchMatrix(rows, FLOAT)


def dihedral_group_elements(m: int) -> list:
    """The ``2m`` rotations and reflections of the regular ``m``-gon."""
    if m < 3:
        raise DomainError("dihedral group needs m >= 3")
    out = []
    for j in range(m):
        a = 2 * np.pi * j / m
        c, s = np.cos(a), np.sin(a)
        out.append(OrthogonalMap(np.array([[c, -s], [s, c]])))
    for j in range(m):
        a = 2 * np.pi * j / m  # reflection across the line at angle pi*j/m
        c, s = np.cos(a), np.sin(a)
        out.append(OrthogonalMap(np.array([[c, s], [s, -c]])))
    return out


def _independent_rows(A: np.ndarray) -> list:
    chosen = []
    for i in range(len(A)):
        trial = chosen + [i]
        if np.linalg.matrix_rank(A[trial], tol=1e-10) == len(trial):
            chosen = trial
        if len(chosen) == A.shape[1]:
            break
    return chosen


def _match_rows(A: np.ndarray, B: np.ndarray, tol: float):
    """Permutation ``perm`` with ``B[i] == A[perm[i]]``, or ``None``."""
    d = np.max(np.abs(B[:, None, :] - A[None, :, :]), axis=2)
    perm = []
    for i in range(len(B)):
        hits = np.flatnonzero(d[i] <= tol)
        if len(hits) != 1:
            return None
        perm.append(int(hits[0]))
    if len(set(perm)) != len(perm):
        return None
    return tuple(perm)


def _canonical_key(g: np.ndarray):
    return tuple(np.round(g, 12).ravel().tolist())


def branch_symmetries(U) -> list:
    """All orthogonal ``g`` with ``U g = P U`` for a permutation matrix ``P``.

    Returns ``(OrthogonalMap, BranchPermutation)`` pairs sorted by the
    entries of ``g`` rounded to 12 digits.  Row ``i`` of ``U g`` equals row
    ``perm[i]`` of ``U``.
    """
    U = U if isinstance(U, BranchMatrix) else BranchMatrix(U)
    A = U.to_numpy()
    m, n = A.shape
    if m > MAX_SEARCH_ROWS or n > MAX_SEARCH_DIM:
        raise CapacityError(f"symmetry search bounded to m <= {MAX_SEARCH_ROWS}, n <= {MAX_SEARCH_DIM}")
    seed = _independent_rows(A)
    if len(seed) < n:
        raise DomainError("branch matrix must have full column rank")
    S_inv = np.linalg.inv(A[seed])
    found = {}
    for images in permutations(range(m), n):
        g = S_inv @ A[list(images)]
        if np.max(np.abs(g.T @ g - np.eye(n))) > EPS_ORTH:
            continue
        perm = _match_rows(A, A @ g, EPS_ROW)
        if perm is None:
            continue
        key = _canonical_key(g)
        found.setdefault(key, (OrthogonalMap(g), BranchPermutation(perm)))
    return [found[k] for k in sorted(found)]


def is_group(maps, tol: float = 1e-8) -> bool:
    """Closure under composition and inverses, up to ``tol``."""
    mats = [m.g if isinstance(m, OrthogonalMap) else np.asarray(m) for m in maps]

    def member(x):
        return any(np.max(np.abs(x - y)) <= tol for y in mats)

    if not mats or not member(np.eye(len(mats[0]))):
        return False
    return all(member(a @ b) for a in mats for b in mats) and all(member(a.T) for a in mats)


def is_invariant_polynomial(sigma: Polynomial, g, eps: float = EPS_POLY) -> bool:
    """Whether ``sigma(g xi) == sigma(xi)`` coefficient-wise within ``eps``."""
    gm = g.g if isinstance(g, OrthogonalMap) else np.asarray(g, dtype=float)
    if gm.shape != (sigma.nvars, sigma.nvars):
        raise DomainError(f"map of shape {gm.shape} does not act on {sigma.nvars} variables")
    s = sigma.astype(FLOAT)
    moved = pr.substitute_linear_forms(s, gm.tolist())
    return moved.close_to(s, eps)
