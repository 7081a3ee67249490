"""Posterior curve summaries from stored coefficient draws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .wavelets import build_design

DEFAULT_GRID_SIZE = 256
PERCENTILES = (5.0, 25.0, 75.0, 95.0)


def default_grid(size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    return np.arange(size) / size


@dataclass(frozen=True)
class PosteriorCurveSummary:
    grid: np.ndarray
    mean: np.ndarray
    band50_lo: np.ndarray
    band50_hi: np.ndarray
    band90_lo: np.ndarray
    band90_hi: np.ndarray
    n_samples: int

    def coverage(self, truth, level: int = 90) -> float:
        lo, hi = (self.band90_lo, self.band90_hi) if level == 90 else (self.band50_lo, self.band50_hi)
        t = np.asarray(truth)
        return float(np.mean((t >= lo) & (t <= hi)))

    def mean_width(self, level: int = 90) -> float:
        if level == 90:
            return float(np.mean(self.band90_hi - self.band90_lo))
        return float(np.mean(self.band50_hi - self.band50_lo))


def reconstruct(theta_full, fam, h, grid) -> np.ndarray:
    """f(x) from coefficient vector(s); rows of a 2-D input are separate draws."""
    B = build_design(fam, h, grid).X
    return np.asarray(theta_full, dtype=float) @ B.T


def summarize(chain, fam, h, grid=None, min_samples: int = 100) -> PosteriorCurveSummary:
    """Pointwise mean and 5/25/75/95 percentiles (linear interpolation)."""
    theta = chain.theta if hasattr(chain, "theta") else chain
    if theta is None or len(theta) < min_samples:
        got = 0 if theta is None else len(theta)
        raise ValueError(f"need at least {min_samples} stored draws, got {got}")
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    curves = reconstruct(theta, fam, h, grid)
    p05, p25, p75, p95 = np.percentile(curves, PERCENTILES, axis=0, method="linear")
    return PosteriorCurveSummary(grid, curves.mean(axis=0), p25, p75, p05, p95, len(theta))
