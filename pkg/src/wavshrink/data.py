"""Phase-folded observations: CSV ingestion and synthetic truth."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class Dataset:
    phase: np.ndarray
    value: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        p, v, s = (np.asarray(a, dtype=float).ravel() for a in (self.phase, self.value, self.sigma))
        if not (p.size == v.size == s.size):
            raise DataError("phase, value and sigma must have equal length")
        if np.any((p < 0) | (p >= 1)) or not np.all(np.isfinite(p)):
            raise DataError("phases must lie in [0, 1)")
        if np.any(~(s > 0)):
            raise DataError("sigmas must be positive")
        if not np.all(np.isfinite(v)):
            raise DataError("values must be finite")
        object.__setattr__(self, "phase", p)
        object.__setattr__(self, "value", v)
        object.__setattr__(self, "sigma", s)

    def __len__(self):
        return self.phase.size

    @classmethod
    def empty(cls) -> "Dataset":
        return cls(np.empty(0), np.empty(0), np.empty(0))


def fold_phase(x):
    """Map to [0, 1) by subtracting the floor."""
    x = np.asarray(x, dtype=float)
    out = x - np.floor(x)
    # x slightly below an integer can round up to exactly 1.0
    return np.where(out >= 1.0, 0.0, out)


def parse_dataset(path) -> Dataset:
    """Read ``phase,value,sigma`` rows; a non-numeric first row is a header."""
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if rec[0].lstrip().startswith("#"):
                continue
            if len(rec) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 columns, got {len(rec)}")
            try:
                vals = [float(c) for c in rec]
            except ValueError:
                if lineno == 1 and not rows:
                    continue
                raise DataError(f"{path}:{lineno}: non-numeric field in {rec!r}") from None
            if not vals[2] > 0:
                raise DataError(f"{path}:{lineno}: sigma must be positive")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    a = np.array(rows)
    return Dataset(fold_phase(a[:, 0]), a[:, 1], a[:, 2])


def emit_dataset(ds: Dataset, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["phase", "value", "sigma"])
        for row in zip(ds.phase, ds.value, ds.sigma):
            w.writerow([repr(float(c)) for c in row])


# Fourier coefficients (cos_k, sin_k) for k = 1..5 of the default truth: a
# radial-velocity-like curve with one sharp dip per period.
DEFAULT_TRIG_COEFS = (
    (0.0, 0.0),
    (-1.40, 2.60),
    (0.95, 0.85),
    (0.45, -0.40),
    (-0.05, -0.30),
    (-0.12, -0.04),
)


def trig_polynomial(x, coefs=DEFAULT_TRIG_COEFS):
    """sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x); coefs[0][0] is the constant."""
    x = np.asarray(x, dtype=float)
    out = np.full_like(x, coefs[0][0])
    for k, (a, b) in enumerate(coefs[1:], start=1):
        out = out + a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
    return out


def generate_synthetic(order: int = 5, coefs=None, N: int = 100, sigma: float = 0.5, seed=0) -> Dataset:
    """Uniform phases, trig-polynomial truth of the given order, Gaussian noise."""
    if order < 1 or N < 1 or not sigma > 0:
        raise ValueError("need order >= 1, N >= 1 and sigma > 0")
    if coefs is None:
        coefs = DEFAULT_TRIG_COEFS
    coefs = tuple(coefs)[: order + 1]
    if len(coefs) < order + 1:
        coefs = coefs + ((0.0, 0.0),) * (order + 1 - len(coefs))
    rng = np.random.default_rng(seed)
    x = rng.random(N)
    y = trig_polynomial(x, coefs) + sigma * rng.standard_normal(N)
    return Dataset(x, y, np.full(N, float(sigma)))
