"""Discretized star transforms on the square ``(-1, 1)^2``.

Fields live on a cell-centered ``N x N`` grid; ``samples[i, j]`` is the value
at ``(x1, x2) = (lo + (i + 1/2) h, lo + (j + 1/2) h)``.  The beam transform
integrates backwards along each ray until it leaves the domain, so every
star transform is well defined regardless of its order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import fft as sfft

from . import polyring as pr
from .exceptions import DomainError
from .starcore import StarSymbol, dual_symbol, is_injective, laplacian_power_form

UNIT_TOL = 1e-12
MIN_N = 16
PHANTOM_CUTOFF = 1e-14
BOUNDARY_TRACE = 1e-12


@dataclass(frozen=True)
class Domain2D:
    n: int
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < MIN_N:
            raise DomainError(f"grid resolution must be an integer >= {MIN_N}")
        if not self.hi > self.lo:
            raise DomainError("empty domain")

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / self.n

    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.n) + 0.5) * self.h

    def mesh(self):
        c = self.centers()
        return np.meshgrid(c, c, indexing="ij")


@dataclass(frozen=True, eq=False)
class Field2D:
    domain: Domain2D
    samples: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=float)
        if a.shape != (self.domain.n, self.domain.n):
            raise DomainError(f"samples must have shape {(self.domain.n,) * 2}, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("field has non-finite samples")
        object.__setattr__(self, "samples", a)

    def _like(self, samples) -> "Field2D":
        return Field2D(self.domain, samples)

    def __add__(self, other):
        if isinstance(other, Field2D):
            return self._like(self.samples + other.samples)
        return self._like(self.samples + other)

    def __sub__(self, other):
        if isinstance(other, Field2D):
            return self._like(self.samples - other.samples)
        return self._like(self.samples - other)

    def __mul__(self, c):
        return self._like(self.samples * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.samples)

    def norm(self) -> float:
        """Discrete L2 norm with compensated summation."""
        return math.sqrt(math.fsum((self.samples ** 2).ravel())) * self.domain.h


def rel_l2(a: Field2D, b: Field2D) -> float:
    """``||a - b|| / ||b||``."""
    return (a - b).norm() / b.norm()


class PhantomKind(str, enum.Enum):
    GAUSSIAN_BUMP = "gaussian_bump"
    TWO_BUMPS = "two_bumps"


@dataclass(frozen=True)
class Phantom:
    """Gaussian test function(s) effectively supported inside the domain.

    ``two_bumps`` with a single center ``c`` places bumps at ``c`` and ``-c``.
    """

    kind: PhantomKind = PhantomKind.GAUSSIAN_BUMP
    centers: tuple = ((0.0, 0.0),)
    width: float = 0.15
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PhantomKind(self.kind))
        cs = tuple(tuple(float(v) for v in c) for c in self.centers)
        if self.kind is PhantomKind.TWO_BUMPS and len(cs) == 1:
            cs = (cs[0], (-cs[0][0], -cs[0][1]))
        expected = 1 if self.kind is PhantomKind.GAUSSIAN_BUMP else 2
        if len(cs) != expected or any(len(c) != 2 for c in cs):
            raise DomainError(f"{self.kind.value} needs {expected} two-dimensional center(s)")
        if self.width <= 0:
            raise DomainError("phantom width must be positive")
        object.__setattr__(self, "centers", cs)

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "centers": [list(c) for c in self.centers],
                "width": self.width, "amplitude": self.amplitude}

    @classmethod
    def from_json(cls, data) -> "Phantom":
        try:
            return cls(kind=data.get("kind", "gaussian_bump"),
                       centers=tuple(data.get("centers", [[0.0, 0.0]])),
                       width=float(data.get("width", 0.15)),
                       amplitude=float(data.get("amplitude", 1.0)))
        except (AttributeError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed phantom spec: {exc}") from None


def make_phantom(spec: Phantom, dom: Domain2D) -> Field2D:
    """Sample the phantom; each bump is set to exactly zero below ``1e-14``."""
    s = spec.width
    trace = 0.0
    for c in spec.centers:
        gap = min(c[0] - dom.lo, dom.hi - c[0], c[1] - dom.lo, dom.hi - c[1])
        if gap <= 0:
            raise DomainError("phantom center must lie inside the domain")
        trace += math.exp(-gap * gap / (s * s))
    if trace >= BOUNDARY_TRACE:
        raise DomainError(f"phantom boundary trace {trace:.3g} exceeds {BOUNDARY_TRACE:g}; "
                          "reduce the width or move the center inward")
    X1, X2 = dom.mesh()
    out = np.zeros_like(X1)
    for c in spec.centers:
        bump = np.exp(-((X1 - c[0]) ** 2 + (X2 - c[1]) ** 2) / (s * s))
        bump[bump < PHANTOM_CUTOFF] = 0.0
        out += bump
    return Field2D(dom, spec.amplitude * out)


def _unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (2,):
        raise DomainError("direction must be a 2-vector")
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise DomainError(f"direction {u.tolist()} is not a unit vector")
    return u


@numba.njit(cache=True, parallel=True)
def _beam_kernel(f, lo, hi, h, u0, u1):
    n = f.shape[0]
    out = np.zeros_like(f)
    step = 0.5 * h
    for i in numba.prange(n):
        x0 = lo + (i + 0.5) * h
        for j in range(n):
            x1 = lo + (j + 0.5) * h
            T = np.inf
            if u0 > 0:
                T = min(T, (x0 - lo) / u0)
            elif u0 < 0:
                T = min(T, (hi - x0) / -u0)
            if u1 > 0:
                T = min(T, (x1 - lo) / u1)
            elif u1 < 0:
                T = min(T, (hi - x1) / -u1)
            K = int(T / step)
            acc = 0.0
            prev = 0.0
            for k in range(K + 1):
                s = k * step
                v = _bilinear(f, (x0 - s * u0 - lo) / h - 0.5, (x1 - s * u1 - lo) / h - 0.5)
                w = 0.5 if (k == 0 or k == K) else 1.0
                acc += w * v
                prev = v
            total = acc * step if K > 0 else 0.0
            rem = T - K * step
            if rem > 0:
                vt = _bilinear(f, (x0 - T * u0 - lo) / h - 0.5, (x1 - T * u1 - lo) / h - 0.5)
                total += 0.5 * rem * (prev + vt)
            out[i, j] = total
    return out


@numba.njit(cache=True, inline="always")
def _bilinear(f, q0, q1):
    n = f.shape[0]
    q0 = min(max(q0, 0.0), n - 1.0)
    q1 = min(max(q1, 0.0), n - 1.0)
    i0 = min(int(q0), n - 2)
    j0 = min(int(q1), n - 2)
    a = q0 - i0
    b = q1 - j0
    return ((1 - a) * (1 - b) * f[i0, j0] + a * (1 - b) * f[i0 + 1, j0]
            + (1 - a) * b * f[i0, j0 + 1] + a * b * f[i0 + 1, j0 + 1])


def beam_transform(f: Field2D, u) -> Field2D:
    """Truncated divergent beam transform along unit direction ``u``.

    ``(X_u f)(x) = integral_{-T}^{0} f(x + t u) dt`` where ``T`` is where the
    ray ``x - s u`` exits the domain.  Composite trapezoid at step ``h/2``
    with bilinear interpolation; the band between the outermost cell centers
    and the boundary uses the nearest edge value.
    """
    u = _unit(u)
    d = f.domain
    return Field2D(d, _beam_kernel(f.samples, d.lo, d.hi, d.h, float(u[0]), float(u[1])))


def directional_derivative(f: Field2D, u) -> Field2D:
    """``u . grad f``: central differences inside, second-order one-sided at the edges."""
    u = _unit(u)
    g0, g1 = np.gradient(f.samples, f.domain.h, edge_order=2)
    return Field2D(f.domain, u[0] * g0 + u[1] * g1)


def laplacian_5pt(f: Field2D) -> Field2D:
    """Five-point Laplacian with zero Dirichlet data on the boundary faces."""
    a = f.samples
    p = np.pad(a, 1, mode="constant")
    # ghost cells mirror with sign flip so the boundary face value is zero
    p[0, 1:-1], p[-1, 1:-1] = -a[0], -a[-1]
    p[1:-1, 0], p[1:-1, -1] = -a[:, 0], -a[:, -1]
    lap = (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4 * a) / f.domain.h ** 2
    return Field2D(f.domain, lap)


def _branches(s: StarSymbol):
    U = s.U.to_numpy()
    if U.shape[1] != 2:
        raise DomainError("numerical star transforms are two-dimensional")
    s.U.require_nonzero_rows()
    norms = np.linalg.norm(U, axis=1)
    return U / norms[:, None], norms


def apply_star(f: Field2D, s: StarSymbol) -> Field2D:
    """``p(X_{u_1}, ..., X_{u_m}) f`` with nested beam transforms per monomial.

    Non-unit branches are normalized and rescaled via ``X_{a u} = X_u / a``.
    Shared composition prefixes are computed once.
    """
    dirs, norms = _branches(s)
    cache: dict = {(): f.samples}

    def composed(key):
        if key not in cache:
            cache[key] = beam_transform(Field2D(f.domain, composed(key[:-1])), dirs[key[-1]]).samples
        return cache[key]

    out = np.zeros_like(f.samples)
    for exp, coef in s.p.items():
        key = tuple(i for i, k in enumerate(exp) for _ in range(k))
        scale = float(coef) / math.prod(norms[i] ** k for i, k in enumerate(exp))
        out += scale * composed(key)
    return Field2D(f.domain, out)


def dual_derivative_cascade(g: Field2D, s: StarSymbol) -> Field2D:
    """Apply ``D_{u_j}`` exactly ``deg_j(p)`` times for each branch, in row order."""
    dirs, norms = _branches(s)
    out = g
    for j, dj in enumerate(s.p.degrees()):
        for _ in range(dj):
            out = directional_derivative(out, dirs[j]) * norms[j]
    return out


def solve_laplacian_power(h: Field2D, C: float, j: int) -> Field2D:
    """Solve ``C * Delta^j f = h`` with homogeneous Dirichlet data, by DST-II."""
    C = float(C)
    if C == 0:
        raise DomainError("C = 0: the star transform is not invertible")
    if j < 1:
        raise DomainError("Laplacian power must be at least 1")
    n = h.domain.n
    k = np.arange(1, n + 1)
    lam1 = -4.0 / h.domain.h ** 2 * np.sin(np.pi * k / (2 * n)) ** 2
    lam = lam1[:, None] + lam1[None, :]
    coef = sfft.dstn(h.samples / C, type=2)
    coef /= lam ** j
    return Field2D(h.domain, sfft.idstn(coef, type=2))


def _fourier_divide(h: Field2D, sigma: pr.Polynomial, reg: float, pad: int = 2) -> Field2D:
    n = h.domain.n
    big = pad * n
    H = np.fft.fft2(h.samples, s=(big, big))
    w = 2 * np.pi * np.fft.fftfreq(big, d=h.domain.h)
    W0, W1 = np.meshgrid(w, w, indexing="ij")
    sym = np.zeros_like(H)
    for exp, coef in sigma.items():
        sym += float(coef) * (1j * W0) ** exp[0] * (1j * W1) ** exp[1]
    Fh = H * np.conj(sym) / (np.abs(sym) ** 2 + reg ** 2)
    return Field2D(h.domain, np.real(np.fft.ifft2(Fh))[:n, :n])


def invert_star(g: Field2D, s: StarSymbol, reg: float = 1e-3, method: str = "auto") -> Field2D:
    """Recover ``f`` from ``g = S f`` through the dual operator.

    ``h = L f`` is obtained from the derivative cascade.  When the dual symbol
    is ``C |xi|^{2j}`` the Dirichlet problem ``C Delta^j f = h`` is solved
    exactly; a constant symbol divides directly; anything else (or
    ``method="fourier"``) uses a Tikhonov-regularized Fourier division on a
    zero-padded periodic extension, which is approximate.
    """
    if not is_injective(s):
        raise DomainError("star transform is not injective: its dual differential operator "
                          "vanishes identically, so no inversion exists")
    h = dual_derivative_cascade(g, s)
    sigma = dual_symbol(s).sigma
    if method not in ("auto", "fourier"):
        raise DomainError(f"unknown inversion method {method!r}")
    if method == "auto":
        form = laplacian_power_form(sigma)
        if form is not None:
            return solve_laplacian_power(h, float(form[0]), form[1])
        if sigma.degree == 0:
            return h * (1.0 / float(sigma.coefficient((0,) * sigma.nvars)))
    return _fourier_divide(h, sigma.chop(), reg)


def null_residual(s: StarSymbol, f: Field2D, margin: int = 0) -> float:
    """``||L_h S f|| / ||f||``: near zero exactly when ``L`` vanishes.

    ``margin`` > 0 drops that many boundary cells from the numerator, where
    repeated one-sided differences dominate the error for oblique branches.
    """
    r = dual_derivative_cascade(apply_star(f, s), s)
    if margin:
        if 2 * margin >= f.domain.n:
            raise DomainError("margin removes the whole grid")
        inner = r.samples[margin:-margin, margin:-margin]
        return math.sqrt(math.fsum((inner ** 2).ravel())) * f.domain.h / f.norm()
    return r.norm() / f.norm()


# -- field I/O ---------------------------------------------------------------

SFLD_MAGIC = b"SFLD"


def write_field(path, f: Field2D):
    """Raw little-endian float64, row-major, behind a 16-byte header."""
    header = SFLD_MAGIC + np.array([f.domain.n, 0], dtype="<u4").tobytes() + bytes(4)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.samples, dtype="<f8").tobytes())


def read_field(path, lo: float = -1.0, hi: float = 1.0) -> Field2D:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16 or raw[:4] != SFLD_MAGIC:
        raise DomainError(f"{path}: not an SFLD field file")
    n = int(np.frombuffer(raw[4:8], dtype="<u4")[0])
    body = np.frombuffer(raw[16:], dtype="<f8")
    if body.size != n * n:
        raise DomainError(f"{path}: expected {n * n} samples, found {body.size}")
    return Field2D(Domain2D(n, lo, hi), body.reshape(n, n).copy())


def write_csv(path, f: Field2D):
    np.savetxt(path, f.samples, delimiter=",", fmt="%.17g")


def read_csv(path, lo: float = -1.0, hi: float = 1.0) -> Field2D:
    a = np.loadtxt(path, delimiter=",", ndmin=2)
    return Field2D(Domain2D(a.shape[0], lo, hi), a)


def write_pgm(path, f: Field2D):
    """8-bit binary PGM, min-max scaled."""
    a = f.samples
    span = a.max() - a.min()
    img = np.zeros_like(a) if span == 0 else (a - a.min()) / span
    data = np.round(img * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{a.shape[1]} {a.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
