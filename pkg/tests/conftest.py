import sys

import numpy as np
import pytest

from wavshrink.data import Dataset, trig_polynomial
from wavshrink.mcmc import Problem
from wavshrink.prior import Hyperparams, smooth_prior
from wavshrink.wavelets import WaveletFamily, build_design

FAMILIES = ("haar", "db2", "db4")


def random_problem(seed, J=4, N=30, J0=None, family=None, **hyper):
    """A randomized but well-posed regression instance."""
    rng = np.random.default_rng(seed)
    if J0 is None:
        J0 = int(rng.integers(1, J - 1)) if J > 2 else 0
    kw = dict(
        lam=float(rng.uniform(0.2, 2.0)),
        beta=float(rng.uniform(0.05, 1.0)),
        alpha=float(rng.uniform(0.3, 0.8)),
        J0=J0,
        J=J,
    )
    kw.update(hyper)
    h = Hyperparams(**kw)
    fam = WaveletFamily.from_name(family or FAMILIES[int(rng.integers(len(FAMILIES)))])
    x = rng.random(N)
    sigma = rng.uniform(0.3, 1.0, N)
    y = trig_polynomial(x) + sigma * rng.standard_normal(N)
    ds = Dataset(x, y, sigma)
    sp = smooth_prior(h, fam)
    return Problem(ds, build_design(fam, h, x), sp, h)


def random_gamma(problem, rng, frac=0.5):
    lay = problem.layout
    det = lay.detail_indices
    pick = det[rng.random(det.size) < frac]
    return np.concatenate([lay.scaling_indices, rng.permutation(pick)])


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
