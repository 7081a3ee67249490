"""Bayesian wavelet regression for smooth periodic curves on unequally spaced phases."""

from .data import Dataset, DataError, generate_synthetic, parse_dataset, emit_dataset
from .inference import PosteriorCurveSummary, reconstruct, summarize
from .kernels import BACKEND
from .mcmc import ChainConfig, ChainOutput, ModelState, Problem, init_state, run_chain
from .prior import Hyperparams, NumericalDegeneracy, SmoothPrior, smooth_prior
from .wavelets import WaveletFamily, build_design, dwt_matrix

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChainConfig",
    "ChainOutput",
    "DataError",
    "Dataset",
    "Hyperparams",
    "ModelState",
    "NumericalDegeneracy",
    "PosteriorCurveSummary",
    "Problem",
    "SmoothPrior",
    "WaveletFamily",
    "build_design",
    "dwt_matrix",
    "emit_dataset",
    "generate_synthetic",
    "init_state",
    "parse_dataset",
    "reconstruct",
    "run_chain",
    "smooth_prior",
    "summarize",
]
