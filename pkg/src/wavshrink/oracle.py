"""Dense reference computations for validating the incremental sampler.

Nothing here calls into :mod:`wavshrink.mcmc`; agreement between the two is
evidence rather than tautology.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import logsumexp


def log_marginal_dense(ds, X, sp, h, gamma) -> float:
    """log N(y; 0, X_g (lam Omega_g^-1) X_g' + S) by direct evaluation."""
    g = np.asarray(gamma, dtype=np.int64)
    if g.size == 0:
        raise ValueError("gamma must be nonempty")
    Xg = X.X[:, g]
    prior_cov = sp.lam * np.linalg.inv(sp.Omega[np.ix_(g, g)])
    cov = Xg @ prior_cov @ Xg.T + np.diag(ds.sigma**2)
    cov = 0.5 * (cov + cov.T)
    # allow_singular=False makes a non-PD covariance raise
    return float(stats.multivariate_normal(mean=np.zeros(len(ds)), cov=cov, allow_singular=False).logpdf(ds.value))


def condition_gaussian(mean, cov, constrained, values):
    """Conditional law of the free block given x[constrained] = values.

    Returns (mean, cov) of the remaining coordinates in their original order.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    c = np.asarray(constrained, dtype=np.int64).ravel()
    if np.unique(c).size != c.size:
        raise ValueError("constrained indices must be distinct")
    if c.size == 0:
        return mean.copy(), cov.copy()
    free = np.setdiff1d(np.arange(mean.size), c)
    Scc = cov[np.ix_(c, c)]
    if np.linalg.matrix_rank(Scc) < c.size:
        raise np.linalg.LinAlgError("conditioning block is singular")
    Sfc = cov[np.ix_(free, c)]
    K = np.linalg.solve(Scc, Sfc.T).T
    m = mean[free] + K @ (np.asarray(values, dtype=float) - mean[c])
    S = cov[np.ix_(free, free)] - K @ Sfc.T
    return m, 0.5 * (S + S.T)


@dataclass(frozen=True)
class EnumeratedPosterior:
    models: list  # (gamma tuple, log posterior probability)
    n_detail: int

    @property
    def probs(self) -> np.ndarray:
        return np.exp([lp for _, lp in self.models])

    def as_dict(self) -> dict:
        """Posterior probability keyed by the tuple of included detail flags."""
        return {mask: float(np.exp(lp)) for mask, lp in self.models}


def _log_prior_gamma_dense(alpha, J0, J, mask):
    out = 0.0
    pos = 0
    for j in range(J0, J):
        p = alpha ** (j + 1)
        for _ in range(2**j):
            out += np.log(p) if mask[pos] else np.log(1.0 - p)
            pos += 1
    return out


def enumerate_posterior(ds, X, sp, h, max_detail: int = 12) -> EnumeratedPosterior:
    """Exact p(gamma | y) over every subset of detail coefficients.

    Models are keyed by the tuple of detail inclusion flags, in column order.
    """
    n_scal = 2**h.J0
    n_det = 2**h.J - n_scal
    if n_det > max_detail:
        raise ValueError(f"{n_det} detail coefficients is too many to enumerate")
    keys, logs = [], []
    for mask in itertools.product((False, True), repeat=n_det):
        g = list(range(n_scal)) + [n_scal + i for i, m in enumerate(mask) if m]
        logs.append(log_marginal_dense(ds, X, sp, h, g) + _log_prior_gamma_dense(h.alpha, h.J0, h.J, mask))
        keys.append(mask)
    logs = np.array(logs)
    logs -= logsumexp(logs)
    return EnumeratedPosterior(list(zip(keys, logs.tolist())), n_det)


def total_variation_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
