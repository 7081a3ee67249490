"""Periodized orthonormal wavelets on [0, 1).

Coefficient vectors are laid out coarse to fine::

    (c_{J0,0..2^J0-1}, d_{J0,0..2^J0-1}, d_{J0+1,...}, ..., d_{J-1,...})

which is the column order of the design matrix and the row order of the
DWT operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np


def daubechies_filter(moments: int) -> np.ndarray:
    """Low-pass Daubechies filter with ``moments`` vanishing moments.

    Minimum-phase spectral factorization of the Daubechies polynomial.
    Returns ``2 * moments`` taps summing to sqrt(2).
    """
    if moments < 1:
        raise ValueError("need at least one vanishing moment")
    K = moments
    # P(y) = sum_i C(K-1+i, i) y^i with y = sin^2(w/2)
    p = [comb(K - 1 + i, i) for i in range(K)]
    y_roots = np.roots(p[::-1]) if K > 1 else np.array([])
    z_roots = []
    for y in y_roots:
        # y = (2 - z - 1/z) / 4  ->  z^2 - (2 - 4y) z + 1 = 0
        zs = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        z_roots.append(zs[np.argmin(np.abs(zs))])
    poly = np.array([1.0 + 0j])
    for _ in range(K):
        poly = np.convolve(poly, [1.0, 1.0])
    for z in z_roots:
        poly = np.convolve(poly, [1.0, -z])
    h = np.real(poly)
    return h * (np.sqrt(2.0) / h.sum())


def highpass(h: np.ndarray) -> np.ndarray:
    L = len(h)
    return np.array([(-1) ** m * h[L - 1 - m] for m in range(L)])


def _cascade(h: np.ndarray, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """phi and psi sampled at k / 2**depth on their support [0, L-1]."""
    L = len(h)
    s2 = np.sqrt(2.0)
    # integer samples: eigenvector of M[m, j] = sqrt2 h[2m - j] for eigenvalue 1
    M = np.zeros((L, L))
    for m in range(L):
        for j in range(L):
            t = 2 * m - j
            if 0 <= t < L:
                M[m, j] = s2 * h[t]
    w, vecs = np.linalg.eig(M)
    phi = np.real(vecs[:, np.argmin(np.abs(w - 1.0))])
    phi = phi / phi.sum()
    for r in range(depth):
        step = 2**r
        new = np.zeros((L - 1) * 2 * step + 1)
        k = np.arange(new.size)
        for m in range(L):
            idx = k - m * step
            ok = (idx >= 0) & (idx < phi.size)
            new[ok] += s2 * h[m] * phi[idx[ok]]
        phi = new
    g = highpass(h)
    step = 2**depth
    k = np.arange(phi.size)
    psi = np.zeros_like(phi)
    for m in range(L):
        idx = 2 * k - m * step
        ok = (idx >= 0) & (idx < phi.size)
        psi[ok] += s2 * g[m] * phi[idx[ok]]
    return phi, psi


@dataclass(frozen=True)
class WaveletFamily:
    """Haar or Daubechies-K family evaluated by the cascade algorithm.

    Haar is evaluated exactly. Daubechies values come from a dyadic table at
    ``refinement_depth`` with linear interpolation in between.
    """

    name: str = "daubechies"
    moments: int = 4
    refinement_depth: int = 12
    filter: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.name not in ("haar", "daubechies"):
            raise ValueError(f"unknown wavelet family {self.name!r}")
        if self.name == "haar":
            object.__setattr__(self, "moments", 1)
        elif not 2 <= self.moments <= 10:
            raise ValueError("Daubechies family supports 2..10 vanishing moments")
        object.__setattr__(self, "filter", daubechies_filter(self.moments))

    @classmethod
    def from_name(cls, spec: str, refinement_depth: int = 12) -> "WaveletFamily":
        """Parse ``haar``, ``db4``, ``daubechies4`` and similar."""
        s = spec.strip().lower()
        if s == "haar":
            return cls("haar", refinement_depth=refinement_depth)
        for prefix in ("daubechies", "db"):
            if s.startswith(prefix) and s[len(prefix):].isdigit():
                return cls("daubechies", int(s[len(prefix):]), refinement_depth)
        raise ValueError(f"unknown wavelet family {spec!r}")

    @property
    def label(self) -> str:
        return "haar" if self.name == "haar" else f"db{self.moments}"

    @property
    def support(self) -> int:
        return len(self.filter) - 1

    @cached_property
    def _tables(self) -> tuple[np.ndarray, np.ndarray]:
        return _cascade(self.filter, self.refinement_depth)

    def phi(self, t):
        """Mother scaling function on the real line (not periodized)."""
        t = np.asarray(t, dtype=float)
        if self.name == "haar":
            return ((t >= 0) & (t < 1)).astype(float)
        return self._lookup(self._tables[0], t)

    def psi(self, t):
        """Mother wavelet on the real line (not periodized)."""
        t = np.asarray(t, dtype=float)
        if self.name == "haar":
            return np.where((t >= 0) & (t < 0.5), 1.0, 0.0) - np.where((t >= 0.5) & (t < 1), 1.0, 0.0)
        return self._lookup(self._tables[1], t)

    def _lookup(self, table, t):
        scale = 2.0**self.refinement_depth
        grid = np.arange(table.size)
        return np.interp(t * scale, grid, table, left=0.0, right=0.0)

    def periodized(self, kind: str, j: int, k: int, x):
        """sum_m 2^{j/2} f(2^j (x + m) - k) with f = phi or psi."""
        f = self.phi if kind == "scaling" else self.psi
        x = np.asarray(x, dtype=float)
        m = 2**j
        u = np.mod(m * x - k, m)
        out = np.zeros_like(u)
        p = 0
        while p * m < self.support or p == 0:
            out = out + f(u + p * m)
            p += 1
        return 2.0 ** (j / 2) * out


def _check_points(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x >= 1.0):
        raise ValueError("evaluation points must lie in [0, 1)")
    return x


def eval_scaling(fam: WaveletFamily, J0: int, k: int, x):
    if not 0 <= k < 2**J0:
        raise ValueError(f"shift {k} out of range for level {J0}")
    return fam.periodized("scaling", J0, k, _check_points(x))


def eval_wavelet(fam: WaveletFamily, j: int, k: int, x):
    if not 0 <= k < 2**j:
        raise ValueError(f"shift {k} out of range for level {j}")
    return fam.periodized("wavelet", j, k, _check_points(x))


@dataclass(frozen=True)
class CoefficientLayout:
    """Index bookkeeping for the coefficient vector at levels J0..J-1."""

    J0: int
    J: int

    @cached_property
    def kinds(self) -> np.ndarray:
        return np.array(["scaling"] * 2**self.J0 + ["detail"] * (2**self.J - 2**self.J0))

    @cached_property
    def levels(self) -> np.ndarray:
        lev = [self.J0] * 2**self.J0
        for j in range(self.J0, self.J):
            lev += [j] * 2**j
        return np.array(lev, dtype=np.int64)

    @cached_property
    def shifts(self) -> np.ndarray:
        sh = list(range(2**self.J0))
        for j in range(self.J0, self.J):
            sh += list(range(2**j))
        return np.array(sh, dtype=np.int64)

    @property
    def n(self) -> int:
        return 2**self.J

    @property
    def n_scaling(self) -> int:
        return 2**self.J0

    @cached_property
    def is_detail(self) -> np.ndarray:
        return np.arange(self.n) >= self.n_scaling

    @cached_property
    def detail_indices(self) -> np.ndarray:
        return np.arange(self.n_scaling, self.n)

    @cached_property
    def scaling_indices(self) -> np.ndarray:
        return np.arange(self.n_scaling)

    def column(self, h: int) -> tuple[str, int, int]:
        return (str(self.kinds[h]), int(self.levels[h]), int(self.shifts[h]))

    def index_of(self, j: int, k: int) -> int:
        """Column of detail coefficient d_jk."""
        if not (self.J0 <= j < self.J and 0 <= k < 2**j):
            raise ValueError(f"no detail coefficient ({j}, {k})")
        return 2**j + k


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    layout: CoefficientLayout

    @property
    def column_index(self) -> list[tuple[str, int, int]]:
        return [self.layout.column(h) for h in range(self.layout.n)]


def basis_matrix(fam: WaveletFamily, J0: int, J: int, xs) -> np.ndarray:
    """Unscaled basis values B[i, h] = phi_{J0k}(x_i) or psi_jk(x_i)."""
    xs = _check_points(np.atleast_1d(xs))
    lay = CoefficientLayout(J0, J)
    B = np.empty((xs.size, lay.n))
    for h in range(lay.n):
        kind, j, k = lay.column(h)
        B[:, h] = fam.periodized("scaling" if kind == "scaling" else "wavelet", j, k, xs)
    return B


def build_design(fam: WaveletFamily, h, xs) -> DesignMatrix:
    """Design matrix at the observed phases.

    Columns carry the factor 2^{-J/2} so that coefficients are measured in
    the units of grid values (the finest scaling coefficients are identified
    with f(i/n)). On the dyadic grid with Haar, X = W'.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.size == 0:
        raise ValueError("design needs at least one point")
    X = basis_matrix(fam, h.J0, h.J, xs) * 2.0 ** (-h.J / 2)
    return DesignMatrix(X, CoefficientLayout(h.J0, h.J))


def _analysis_step(c: np.ndarray, h: np.ndarray, g: np.ndarray):
    m = c.shape[0]
    L = len(h)
    idx = (2 * np.arange(m // 2)[:, None] + np.arange(L)[None, :]) % m
    blk = c[idx]  # (m/2, L, ...)
    low = np.tensordot(h, np.moveaxis(blk, 1, 0), axes=1)
    high = np.tensordot(g, np.moveaxis(blk, 1, 0), axes=1)
    return low, high


def _synthesis_step(low: np.ndarray, high: np.ndarray, h: np.ndarray, g: np.ndarray):
    half = low.shape[0]
    m = 2 * half
    L = len(h)
    out = np.zeros((m,) + low.shape[1:])
    ks = np.arange(half)
    for t in range(L):
        np.add.at(out, (2 * ks + t) % m, h[t] * low + g[t] * high)
    return out


def dwt(f, fam: WaveletFamily, J0: int) -> np.ndarray:
    """Periodized orthogonal DWT along axis 0 from level log2(len) down to J0."""
    c = np.asarray(f, dtype=float)
    n = c.shape[0]
    J = int(round(np.log2(n)))
    if 2**J != n or not 0 <= J0 <= J:
        raise ValueError("length must be 2^J with J >= J0")
    h = fam.filter
    g = highpass(h)
    details = []
    for _ in range(J, J0, -1):
        c, d = _analysis_step(c, h, g)
        details.append(d)
    return np.concatenate([c] + details[::-1], axis=0)


def idwt(theta, fam: WaveletFamily, J0: int) -> np.ndarray:
    """Inverse of :func:`dwt`."""
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[0]
    J = int(round(np.log2(n)))
    h = fam.filter
    g = highpass(h)
    c = theta[: 2**J0]
    for j in range(J0, J):
        c = _synthesis_step(c, theta[2**j: 2 ** (j + 1)], h, g)
    return c


def dwt_matrix(fam: WaveletFamily, h) -> np.ndarray:
    """Orthogonal analysis operator W with theta = W @ f_grid."""
    return dwt(np.eye(2**h.J), fam, h.J0)


def integer_samples(fam: WaveletFamily, n: int) -> np.ndarray:
    """phi(m) for m = 0..n-1 wrapped mod n, the filter linking c_J to f(i/n)."""
    out = np.zeros(n)
    for m in range(fam.support + 1):
        out[m % n] += float(fam.phi(m))
    return out
