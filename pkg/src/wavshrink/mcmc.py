"""Metropolis-Hastings over wavelet models with O(q^2) add/delete moves.

The coefficients are integrated out. A state caches the posterior moments,
the prior covariance of the included block, a lower Cholesky factor of the
posterior covariance, and the log marginal likelihood. Added columns are
prepended, so position 0 is always the most recently added coefficient.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import kernels
from .data import Dataset
from .prior import Hyperparams, NumericalDegeneracy, SmoothPrior, inclusion_log_odds, log_prior_gamma
from .wavelets import DesignMatrix

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


class Problem:
    """Read-only quantities shared by every state of one chain."""

    def __init__(self, ds: Dataset, X: DesignMatrix, sp: SmoothPrior, h: Hyperparams):
        if X.X.shape != (len(ds), sp.n):
            raise ValueError("design matrix does not match data and prior sizes")
        self.ds, self.design, self.sp, self.h = ds, X, sp, h
        self.layout = X.layout
        self.lam = float(sp.lam)
        w = 1.0 / ds.sigma**2
        Xm = X.X
        self.Q = (Xm * w[:, None]).T @ Xm
        self.v = Xm.T @ (w * ds.value)
        self.Omega = sp.Omega
        self.P = self.Q + self.Omega / self.lam
        self.log_odds = inclusion_log_odds(h)
        self.const = -0.5 * float(np.sum(LOG_2PI + np.log(ds.sigma**2))) - 0.5 * float(np.sum(w * ds.value**2))


@dataclass(frozen=True)
class ModelState:
    problem: Problem = field(repr=False)
    gamma: np.ndarray
    mu: np.ndarray
    Sigma: np.ndarray = field(repr=False)
    T: np.ndarray = field(repr=False)
    LambdaG: np.ndarray = field(repr=False)
    vG: np.ndarray = field(repr=False)
    logml: float
    logprior: float
    included: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.gamma.size)

    def position(self, index: int) -> int:
        pos = np.flatnonzero(self.gamma == index)
        if pos.size == 0:
            raise KeyError(f"column {index} is not in the model")
        return int(pos[0])


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 20000
    burn_in: int = 5000
    thin: int = 10
    seed: int = 0
    store_theta: bool = True
    reanchor_every: int = 10000

    def __post_init__(self):
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")


@dataclass
class ChainOutput:
    iters: np.ndarray
    inclusion: np.ndarray
    model_size: np.ndarray
    log_post: np.ndarray
    theta: np.ndarray | None
    acceptance_rate: float
    n_degenerate: int
    reanchor_max_drift: float
    backend: str = kernels.BACKEND


def init_state(problem: Problem, gamma0=None) -> ModelState:
    """Dense construction of a state; also the refactorization reference."""
    lay = problem.layout
    if gamma0 is None:
        gamma0 = lay.scaling_indices
    g = np.asarray(gamma0, dtype=np.int64).ravel().copy()
    inc = np.zeros(lay.n, dtype=bool)
    inc[g] = True
    if inc.sum() != g.size:
        raise ValueError("gamma0 has repeated indices")
    if not inc[lay.scaling_indices].all():
        raise ValueError("gamma0 must contain every scaling index")
    lam = problem.lam
    ix = np.ix_(g, g)
    Om = problem.Omega[ix]
    try:
        cP = linalg.cho_factor(problem.P[ix], lower=True)
        cO = linalg.cho_factor(Om, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalDegeneracy("posterior precision is singular") from exc
    eye = np.eye(g.size)
    Sigma = linalg.cho_solve(cP, eye)
    Sigma = 0.5 * (Sigma + Sigma.T)
    Lam = linalg.cho_solve(cO, eye)
    Lam = 0.5 * (Lam + Lam.T)
    vG = problem.v[g].copy()
    mu = Sigma @ vG
    T = linalg.cholesky(Sigma, lower=True)
    logdet_P = 2.0 * np.sum(np.log(np.diag(cP[0])))
    logdet_O = 2.0 * np.sum(np.log(np.diag(cO[0])))
    # candidate formula at theta = 0:
    # log p(0|g) + log p(y|0,g) - log p(0|y,g)
    logml = (
        -0.5 * (g.size * math.log(lam) - logdet_O)
        - 0.5 * logdet_P
        + 0.5 * float(mu @ vG)
        + problem.const
    )
    logprior = log_prior_gamma(problem.h, g)
    return ModelState(problem, g, mu, Sigma, T, Lam, vG, float(logml), logprior, inc)


def down_log_ratio(st: ModelState, l: int) -> float:
    """log p(y | gamma minus position l) - log p(y | gamma)."""
    lam = st.problem.lam
    s = st.Sigma[l, l]
    return 0.5 * math.log(lam * st.LambdaG[l, l] / s) - 0.5 * st.mu[l] ** 2 / s


_PROBE_CACHE: dict[int, np.ndarray] = {}


def _probe(q: int) -> np.ndarray:
    z = _PROBE_CACHE.get(q)
    if z is None:
        z = np.cos(np.arange(q) * 0.7853981633974483 + 0.3)
        _PROBE_CACHE[q] = z
    return z


def _apply_down(st: ModelState, l: int, log_ratio: float, dlogprior: float) -> ModelState:
    piv = st.Sigma[l, l]
    col = np.delete(st.Sigma[:, l], l)
    mu = np.delete(st.mu, l) - col * (st.mu[l] / piv)
    Sigma = kernels.shrink_cov(st.Sigma, l)
    Lam = kernels.shrink_cov(st.LambdaG, l)
    T = kernels.drop_factor(st.T, l)
    scale = max(1.0, float(np.max(np.abs(np.diag(Sigma)))))
    if kernels.factor_residual(T, Sigma, _probe(Sigma.shape[0])) > 1e-8 * scale * Sigma.shape[0]:
        logger.debug("rotated factor failed the probe check; refactorizing")
        T = linalg.cholesky(Sigma, lower=True)
    idx = int(st.gamma[l])
    inc = st.included.copy()
    inc[idx] = False
    return ModelState(
        st.problem, np.delete(st.gamma, l), mu, Sigma, T, Lam, np.delete(st.vG, l),
        st.logml + log_ratio, st.logprior + dlogprior, inc,
    )


def down_move(st: ModelState, l: int) -> tuple[ModelState, float]:
    """Remove the coefficient at position ``l``; returns (new state, log ratio)."""
    if not 0 <= l < st.size:
        raise IndexError(f"position {l} out of range")
    idx = int(st.gamma[l])
    if not st.problem.layout.is_detail[idx]:
        raise ValueError("scaling coefficients cannot be removed")
    if st.size < 2:
        raise ValueError("cannot remove the last coefficient")
    lr = down_log_ratio(st, l)
    return _apply_down(st, l, lr, -_toggle_logprior(st.problem, idx)), lr


@dataclass(frozen=True)
class UpProposal:
    index: int
    hv: np.ndarray
    s: float
    h0: np.ndarray
    s0: float
    log_ratio: float


def propose_up(st: ModelState, index: int) -> UpProposal | None:
    """Log ratio for adding ``index``; None when the Schur complements degenerate."""
    pb = st.problem
    g = st.gamma
    lam = pb.lam
    b0 = pb.Omega[g, index]
    b = pb.Q[g, index] + b0 / lam
    hv = st.Sigma @ b
    s = pb.P[index, index] - float(b @ hv)
    h0 = st.LambdaG @ b0
    s0 = pb.Omega[index, index] - float(b0 @ h0)
    if not (s > 0.0 and s0 > 0.0 and math.isfinite(s) and math.isfinite(s0)):
        return None
    mu1 = (pb.v[index] - float(hv @ st.vG)) / s
    # Sigma*_11 = 1/s, Lambda*_11 = 1/s0
    lr = -(0.5 * math.log(lam * s / s0) - 0.5 * mu1 * mu1 * s)
    return UpProposal(int(index), hv, float(s), h0, float(s0), lr)


def _apply_up(st: ModelState, prop: UpProposal, dlogprior: float) -> ModelState:
    pb = st.problem
    Sigma = kernels.grow_cov(st.Sigma, prop.hv, prop.s)
    Lam = kernels.grow_cov(st.LambdaG, prop.h0, prop.s0)
    vG = np.concatenate(([pb.v[prop.index]], st.vG))
    col = Sigma[:, 0]
    mu = np.concatenate(([0.0], st.mu)) + prop.s * col * float(col @ vG)
    T = kernels.grow_factor(st.T, col / math.sqrt(col[0]))
    inc = st.included.copy()
    inc[prop.index] = True
    return ModelState(
        pb, np.concatenate(([prop.index], st.gamma)), mu, Sigma, T, Lam, vG,
        st.logml + prop.log_ratio, st.logprior + dlogprior, inc,
    )


def up_move(st: ModelState, index: int) -> tuple[ModelState, float]:
    """Add column ``index`` at position 0; returns (new state, log ratio)."""
    if st.included[index]:
        raise ValueError(f"column {index} is already in the model")
    prop = propose_up(st, index)
    if prop is None:
        raise NumericalDegeneracy(f"adding column {index} gives a non-positive Schur complement")
    return _apply_up(st, prop, _toggle_logprior(st.problem, index)), prop.log_ratio


def _toggle_logprior(pb: Problem, index: int) -> float:
    """log prior change for switching ``index`` from out to in."""
    return float(pb.log_odds[index])


def _accept(u: float, log_alpha: float) -> bool:
    if log_alpha >= 0.0:
        return True
    return u < math.exp(log_alpha)


def mh_step(st: ModelState, rng: np.random.Generator) -> tuple[ModelState, str]:
    """One uniform toggle proposal; returns (state, "accept" | "reject" | "degenerate")."""
    pb = st.problem
    det = pb.layout.detail_indices
    index = int(det[rng.integers(det.size)])
    u = rng.random()
    if st.included[index]:
        l = st.position(index)
        lr = down_log_ratio(st, l)
        dlp = -_toggle_logprior(pb, index)
        if _accept(u, lr + dlp):
            return _apply_down(st, l, lr, dlp), "accept"
        return st, "reject"
    prop = propose_up(st, index)
    if prop is None:
        return st, "degenerate"
    dlp = _toggle_logprior(pb, index)
    if _accept(u, prop.log_ratio + dlp):
        return _apply_up(st, prop, dlp), "accept"
    return st, "reject"


def sample_theta(st: ModelState, rng: np.random.Generator) -> np.ndarray:
    """theta_gamma = mu + T z embedded in a full-length coefficient vector."""
    z = rng.standard_normal(st.size)
    out = np.zeros(st.problem.layout.n)
    out[st.gamma] = st.mu + st.T @ z
    return out


def run_chain(problem: Problem, cfg: ChainConfig, gamma0=None) -> ChainOutput:
    rng = np.random.default_rng(cfg.seed)
    st = init_state(problem, gamma0)
    n_rec = len(range(cfg.burn_in, cfg.iterations, cfg.thin))
    n = problem.layout.n
    iters = np.empty(n_rec, dtype=np.int64)
    inclusion = np.zeros((n_rec, n), dtype=bool)
    log_post = np.empty(n_rec)
    theta = np.empty((n_rec, n)) if cfg.store_theta else None
    accepted = degenerate = 0
    max_drift = 0.0
    r = 0
    for it in range(cfg.iterations):
        st, event = mh_step(st, rng)
        if event == "accept":
            accepted += 1
        elif event == "degenerate":
            degenerate += 1
        if cfg.reanchor_every and (it + 1) % cfg.reanchor_every == 0:
            fresh = init_state(problem, st.gamma)
            drift = abs(fresh.logml - st.logml)
            max_drift = max(max_drift, drift)
            if drift > 1e-5:
                logger.warning("log marginal drifted by %.3g before re-anchoring at iteration %d", drift, it + 1)
            st = fresh
        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            iters[r] = it
            inclusion[r] = st.included
            log_post[r] = st.logml + st.logprior
            if theta is not None:
                theta[r] = sample_theta(st, rng)
            r += 1
    return ChainOutput(
        iters=iters,
        inclusion=inclusion,
        model_size=inclusion.sum(axis=1),
        log_post=log_post,
        theta=theta,
        acceptance_rate=accepted / cfg.iterations,
        n_degenerate=degenerate,
        reanchor_max_drift=max_drift,
    )
