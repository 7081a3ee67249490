"""Smoothness prior on the dyadic grid and the sparsity prior on model indicators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .wavelets import CoefficientLayout, WaveletFamily, dwt_matrix


class NumericalDegeneracy(ArithmeticError):
    """Raised when a covariance or precision matrix is not usable."""


@dataclass(frozen=True)
class Hyperparams:
    """Fixed prior constants.

    ``sigma0sq`` defaults to ``lam``. ``lam`` stands in for the prior scale
    lambda (a reserved word in Python).
    """

    lam: float = 0.5
    beta: float = 0.1
    alpha: float = 0.5
    sigma0sq: float | None = None
    J0: int = 4
    J: int = 6

    def __post_init__(self):
        if self.sigma0sq is None:
            object.__setattr__(self, "sigma0sq", self.lam)
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.sigma0sq >= 0:
            raise ValueError("sigma0sq must be nonnegative")
        if not (0 <= self.J0 < self.J <= 14):
            raise ValueError("need 0 <= J0 < J <= 14")

    @property
    def n(self) -> int:
        return 2**self.J

    @property
    def layout(self) -> CoefficientLayout:
        return CoefficientLayout(self.J0, self.J)


@dataclass(frozen=True)
class SmoothPrior:
    """Grid covariance V and its wavelet-space transport.

    ``Lambda_full = W V W'`` and ``Omega`` is its inverse. ``lam`` is kept so
    conditioned covariances can be returned on the lambda scale.
    """

    n: int
    V: np.ndarray
    Omega: np.ndarray
    Lambda_full: np.ndarray
    W: np.ndarray
    lam: float


def build_delta(h: Hyperparams, n: int) -> np.ndarray:
    """lam * exp(-beta |i - j|) on an n x n grid."""
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(n)
    return h.lam * np.exp(-h.beta * np.abs(i[:, None] - i[None, :]))


def _psd_tol(M: np.ndarray) -> float:
    return 1e-10 * abs(np.trace(M)) / M.shape[0]


def _check_pd(M: np.ndarray, what: str) -> None:
    w = linalg.eigvalsh(M)
    if w[0] <= -_psd_tol(M):
        raise NumericalDegeneracy(f"{what} is not positive definite (min eigenvalue {w[0]:.3g})")


def cholesky_jitter(M: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, retrying once with diagonal jitter."""
    try:
        return linalg.cholesky(M, lower=True)
    except linalg.LinAlgError:
        jitter = _psd_tol(M) or 1e-300
        try:
            return linalg.cholesky(M + jitter * np.eye(M.shape[0]), lower=True)
        except linalg.LinAlgError as exc:
            raise NumericalDegeneracy(str(exc)) from exc


def build_V(h: Hyperparams, n: int, bridge: str = "exact") -> tuple[np.ndarray, float]:
    """Grid covariance of (f_0, ..., f_{n-1}) under the closed difference process.

    f_0 has variance sigma0sq and increments d_1..d_n have covariance
    ``build_delta``; the increments are then constrained to sum to zero so
    that f_n = f_0. ``bridge`` selects how the covariance H of d_1..d_{n-1}
    is formed:

    ``"exact"``
        H = Delta_11 - c c' / v with c = Cov(d_{1:n-1}, sum d), the Gaussian
        conditional covariance.
    ``"endpoint"``
        H = Delta_11 - Delta_12 Delta_12' / v, using only the covariance with
        the last increment. It does not enforce periodicity.

    Returns ``(V, v)`` with v = Var(sum d).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    D = build_delta(h, n)
    v = float(D.sum())
    if bridge == "exact":
        c = D[:-1, :].sum(axis=1)
    elif bridge == "endpoint":
        c = D[:-1, -1]
    else:
        raise ValueError(f"unknown bridge rule {bridge!r}")
    H = D[:-1, :-1] - np.outer(c, c) / v
    H0 = np.zeros((n, n))
    H0[0, 0] = h.sigma0sq
    H0[1:, 1:] = H
    # V = A H0 A' with A lower-triangular ones, i.e. double cumulative sum
    V = np.cumsum(np.cumsum(H0, axis=0), axis=1)
    V = 0.5 * (V + V.T)
    _check_pd(V, "grid covariance V")
    return V, v


def build_wavelet_prior(V: np.ndarray, W: np.ndarray, lam: float = 1.0) -> SmoothPrior:
    _check_pd(V, "grid covariance V")
    Lam = W @ V @ W.T
    Lam = 0.5 * (Lam + Lam.T)
    L = cholesky_jitter(V)
    Vinv = linalg.cho_solve((L, True), np.eye(V.shape[0]))
    Omega = W @ Vinv @ W.T
    Omega = 0.5 * (Omega + Omega.T)
    return SmoothPrior(V.shape[0], V, Omega, Lam, W, float(lam))


def smooth_prior(h: Hyperparams, fam: WaveletFamily, bridge: str = "exact") -> SmoothPrior:
    """Convenience: grid covariance plus DWT in one call."""
    V, _ = build_V(h, h.n, bridge)
    return build_wavelet_prior(V, dwt_matrix(fam, h), h.lam)


def _as_index(gamma, n: int) -> np.ndarray:
    g = np.asarray(gamma, dtype=np.int64).ravel()
    if g.size == 0:
        raise ValueError("gamma must be nonempty")
    if np.unique(g).size != g.size:
        raise ValueError("gamma has repeated indices")
    if g.min() < 0 or g.max() >= n:
        raise ValueError("gamma index out of range")
    return g


def conditioned_prior(sp: SmoothPrior, gamma) -> np.ndarray:
    """Prior covariance lam * inv(Omega[gamma, gamma]) of the included block."""
    g = _as_index(gamma, sp.n)
    sub = sp.Omega[np.ix_(g, g)]
    try:
        c = linalg.cho_factor(sub, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalDegeneracy("precision block is singular") from exc
    out = sp.lam * linalg.cho_solve(c, np.eye(g.size))
    return 0.5 * (out + out.T)


def inclusion_log_odds(h: Hyperparams) -> np.ndarray:
    """log(p_in / p_out) per column; zero for scaling columns."""
    lay = h.layout
    out = np.zeros(lay.n)
    lev = lay.levels[lay.is_detail]
    p = h.alpha ** (lev + 1.0)
    out[lay.is_detail] = np.log(p) - np.log1p(-p)
    return out


def log_prior_gamma(h: Hyperparams, gamma) -> float:
    """log Pr(gamma) with Pr(d_jk != 0) = alpha^(j+1), scaling columns free."""
    lay = h.layout
    inc = np.zeros(lay.n, dtype=bool)
    inc[np.asarray(gamma, dtype=np.int64)] = True
    if not inc[lay.scaling_indices].all():
        raise ValueError("gamma must contain every scaling index")
    det = lay.is_detail
    p = h.alpha ** (lay.levels[det] + 1.0)
    on = inc[det]
    return float(np.sum(np.where(on, np.log(p), np.log1p(-p))))


def simulate_prior(sp: SmoothPrior, h: Hyperparams, gamma, count: int, seed) -> np.ndarray:
    """Draw ``count`` grid functions under model ``gamma``; shape (count, n)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    g = _as_index(gamma, sp.n)
    rng = np.random.default_rng(seed)
    L = cholesky_jitter(conditioned_prior(sp, g))
    theta = np.zeros((count, sp.n))
    theta[:, g] = rng.standard_normal((count, g.size)) @ L.T
    return theta @ sp.W


def universal_threshold(coefficients, sigma_hat: float, n: int, J0: int = 0, rule: str = "universal") -> np.ndarray:
    """Detail columns whose magnitude exceeds the universal threshold.

    ``rule="universal"`` uses sigma_hat * sqrt(2 log n); ``rule="sqrt2n"``
    uses sigma_hat * sqrt(2 n).
    """
    if not sigma_hat > 0:
        raise ValueError("sigma_hat must be positive")
    if rule == "universal":
        thr = sigma_hat * math.sqrt(2.0 * math.log(n))
    elif rule == "sqrt2n":
        thr = sigma_hat * math.sqrt(2.0 * n)
    else:
        raise ValueError(f"unknown threshold rule {rule!r}")
    c = np.asarray(coefficients, dtype=float)
    idx = np.flatnonzero(np.abs(c) > thr)
    return idx[idx >= 2**J0]


def mad_sigma(theta, J: int) -> float:
    """Noise scale from the finest detail level (median absolute deviation / 0.6745)."""
    fine = np.asarray(theta)[2 ** (J - 1):]
    return float(np.median(np.abs(fine)) / 0.6745)


def simulate_thresholded(sp: SmoothPrior, h: Hyperparams, count: int, seed, rule: str = "universal") -> np.ndarray:
    """Prior draws conditional on zeroing what the threshold rule removes.

    Each full-model draw picks its own kept set; a fresh draw is then made
    from the prior conditioned on the removed coefficients being zero.
    """
    rng = np.random.default_rng(seed)
    lay = h.layout
    full = simulate_prior(sp, h, np.arange(sp.n), count, rng)
    out = np.empty_like(full)
    for i, f in enumerate(full):
        theta = sp.W @ f
        sig = mad_sigma(theta, h.J)
        keep = lay.scaling_indices
        if sig > 0:
            keep = np.concatenate([keep, universal_threshold(theta, sig, sp.n, h.J0, rule)])
        out[i] = simulate_prior(sp, h, keep, 1, rng)[0]
    return out


def total_variation(curves) -> np.ndarray:
    """sum_i |f_i - f_{i-1}| per row (open path, no wrap-around term)."""
    return np.abs(np.diff(np.atleast_2d(curves), axis=1)).sum(axis=1)
