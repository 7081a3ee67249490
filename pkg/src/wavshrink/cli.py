"""Command-line driver: fit, prior simulation, and the enumeration check.

Configuration comes from an optional flat ``key = value`` file; command-line
flags override it. Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy import linalg, stats

from . import kernels
from .data import DataError, Dataset, emit_dataset, generate_synthetic, parse_dataset
from .inference import default_grid, summarize
from .mcmc import ChainConfig, Problem, run_chain
from .oracle import enumerate_posterior, total_variation_distance
from .prior import (
    Hyperparams,
    NumericalDegeneracy,
    simulate_prior,
    simulate_thresholded,
    smooth_prior,
    total_variation,
)
from .wavelets import WaveletFamily, build_design

logger = logging.getLogger("wavshrink")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

MODES = ("fit", "prior-sim", "enumerate-check")

# (alpha, beta) panels of the four-way sensitivity comparison
SENSITIVITY_PRESET = ((0.5, 0.1), (0.5, 0.9), (0.7, 0.1), (0.7, 0.9))

DEFAULTS = {
    "alpha": 0.5,
    "beta": 0.1,
    "lambda": 0.5,
    "sigma0sq": None,
    "J0": 4,
    "J": 6,
    "family": "db4",
    "refinement_depth": 12,
    "bridge": "exact",
    "iterations": 20000,
    "burn_in": 5000,
    "thin": 10,
    "seed": 0,
    "store_theta": True,
    "reanchor_every": 10000,
    "mode": "fit",
    "input": None,
    "out": "out",
    "grid_size": 256,
    "synthetic_N": 100,
    "synthetic_sigma": 0.5,
    "synthetic_order": 5,
    "prior_betas": "0.1,0.9",
    "prior_draws": 500,
    "threshold_rule": "universal",
    "preset": None,
}

_INT_KEYS = {"J0", "J", "refinement_depth", "iterations", "burn_in", "thin", "seed", "reanchor_every",
             "grid_size", "synthetic_N", "synthetic_order", "prior_draws"}
_FLOAT_KEYS = {"alpha", "beta", "lambda", "sigma0sq", "synthetic_sigma"}
_BOOL_KEYS = {"store_theta"}


class UsageError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class RunConfig:
    hyperparams: Hyperparams
    family: WaveletFamily
    chain: ChainConfig
    input_path: Path | None
    output_dir: Path
    mode: str
    bridge: str = "exact"
    grid_size: int = 256
    synthetic_N: int = 100
    synthetic_sigma: float = 0.5
    synthetic_order: int = 5
    prior_betas: tuple = (0.1, 0.9)
    prior_draws: int = 500
    threshold_rule: str = "universal"
    raw: dict = dataclasses.field(default_factory=dict, compare=False)

    def echo(self) -> dict:
        """Fully resolved configuration, JSON-ready."""
        h = self.hyperparams
        return {
            "mode": self.mode,
            "alpha": h.alpha,
            "beta": h.beta,
            "lambda": h.lam,
            "sigma0sq": h.sigma0sq,
            "J0": h.J0,
            "J": h.J,
            "family": self.family.label,
            "refinement_depth": self.family.refinement_depth,
            "bridge": self.bridge,
            "iterations": self.chain.iterations,
            "burn_in": self.chain.burn_in,
            "thin": self.chain.thin,
            "seed": self.chain.seed,
            "store_theta": self.chain.store_theta,
            "reanchor_every": self.chain.reanchor_every,
            "input": None if self.input_path is None else str(self.input_path),
            "out": str(self.output_dir),
            "grid_size": self.grid_size,
            "synthetic_N": self.synthetic_N,
            "synthetic_sigma": self.synthetic_sigma,
            "synthetic_order": self.synthetic_order,
            "prior_betas": list(self.prior_betas),
            "prior_draws": self.prior_draws,
            "threshold_rule": self.threshold_rule,
        }


def _coerce(key: str, value):
    if value is None or value == "":
        return None
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _BOOL_KEYS:
        if isinstance(value, bool):
            return value
        return str(value).strip().lower() in ("1", "true", "yes", "on")
    return value


def read_config_file(path) -> dict:
    """Flat ``key = value`` (or ``key: value``) lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split(sep, 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve_config(file_values: dict, overrides: dict) -> RunConfig:
    merged = dict(DEFAULTS)
    merged.update({k: v for k, v in file_values.items()})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        vals = {k: _coerce(k, v) for k, v in merged.items()}
        if vals["mode"] not in MODES:
            raise UsageError(f"mode must be one of {', '.join(MODES)}")
        h = Hyperparams(lam=vals["lambda"], beta=vals["beta"], alpha=vals["alpha"],
                        sigma0sq=vals["sigma0sq"], J0=vals["J0"], J=vals["J"])
        fam = WaveletFamily.from_name(vals["family"], vals["refinement_depth"])
        chain = ChainConfig(iterations=vals["iterations"], burn_in=vals["burn_in"], thin=vals["thin"],
                            seed=vals["seed"], store_theta=vals["store_theta"],
                            reanchor_every=vals["reanchor_every"])
        betas = tuple(float(b) for b in str(vals["prior_betas"]).split(",") if b.strip())
        if vals["bridge"] not in ("exact", "endpoint"):
            raise UsageError("bridge must be 'exact' or 'endpoint'")
        if vals["threshold_rule"] not in ("universal", "sqrt2n"):
            raise UsageError("threshold_rule must be 'universal' or 'sqrt2n'")
    except UsageError:
        raise
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    return RunConfig(
        hyperparams=h,
        family=fam,
        chain=chain,
        input_path=None if vals["input"] is None else Path(vals["input"]),
        output_dir=Path(vals["out"]),
        mode=vals["mode"],
        bridge=vals["bridge"],
        grid_size=vals["grid_size"],
        synthetic_N=vals["synthetic_N"],
        synthetic_sigma=vals["synthetic_sigma"],
        synthetic_order=vals["synthetic_order"],
        prior_betas=betas,
        prior_draws=vals["prior_draws"],
        threshold_rule=vals["threshold_rule"],
        raw=vals,
    )


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _load_data(cfg: RunConfig, **synthetic_overrides) -> Dataset:
    if cfg.input_path is not None:
        if not cfg.input_path.exists():
            raise DataError(f"input file {cfg.input_path} does not exist")
        return parse_dataset(cfg.input_path)
    kw = dict(order=cfg.synthetic_order, N=cfg.synthetic_N, sigma=cfg.synthetic_sigma, seed=cfg.chain.seed)
    kw.update(synthetic_overrides)
    return generate_synthetic(**kw)


def run_fit(cfg: RunConfig) -> dict:
    h, fam = cfg.hyperparams, cfg.family
    out = cfg.output_dir
    ds = _load_data(cfg)
    if cfg.input_path is None:
        emit_dataset(ds, out / "data.csv")
    sp = smooth_prior(h, fam, cfg.bridge)
    problem = Problem(ds, build_design(fam, h, ds.phase), sp, h)
    chain = run_chain(problem, cfg.chain)
    summary = summarize(chain, fam, h, default_grid(cfg.grid_size))
    _write_csv(
        out / "summary.csv",
        ["grid", "mean", "p05", "p25", "p75", "p95"],
        (
            [_fmt(c) for c in row]
            for row in zip(summary.grid, summary.mean, summary.band90_lo, summary.band50_lo,
                           summary.band50_hi, summary.band90_hi)
        ),
    )
    _write_csv(
        out / "trace.csv",
        ["iter", "model_size", "log_post"],
        ([int(i), int(m), _fmt(lp)] for i, m, lp in zip(chain.iters, chain.model_size, chain.log_post)),
    )
    return {
        "acceptance_rate": chain.acceptance_rate,
        "reanchor_max_drift": chain.reanchor_max_drift,
        "n_degenerate": chain.n_degenerate,
        "n_samples": summary.n_samples,
        "mean_model_size": float(np.mean(chain.model_size)),
    }


def run_prior_sim(cfg: RunConfig) -> dict:
    h, fam = cfg.hyperparams, cfg.family
    out = cfg.output_dir
    tv = {}
    for i, beta in enumerate(cfg.prior_betas):
        hb = dataclasses.replace(h, beta=beta)
        sp = smooth_prior(hb, fam, cfg.bridge)
        seed = (cfg.chain.seed, i)
        draws = {
            "full": simulate_prior(sp, hb, np.arange(sp.n), cfg.prior_draws, seed),
            "thresholded": simulate_thresholded(sp, hb, cfg.prior_draws, (cfg.chain.seed, i, 1), cfg.threshold_rule),
        }
        for kind, curves in draws.items():
            _write_csv(
                out / f"prior_beta{beta:g}_{kind}.csv",
                [f"f{j}" for j in range(sp.n)],
                ([_fmt(v) for v in row] for row in curves),
            )
            tv[(beta, kind)] = total_variation(curves)
    report = {"mean_total_variation": {f"beta={b:g},{k}": float(v.mean()) for (b, k), v in tv.items()}}
    betas = sorted(cfg.prior_betas)
    if len(betas) >= 2:
        lo, hi = betas[0], betas[-1]
        report["ordering_pvalues"] = {
            kind: float(stats.ttest_ind(tv[(lo, kind)], tv[(hi, kind)], alternative="less").pvalue)
            for kind in ("full", "thresholded")
        }
    return report


def run_enumerate_check(cfg: RunConfig) -> dict:
    h, fam = cfg.hyperparams, cfg.family
    ds = _load_data(cfg, N=20, sigma=1.0)
    sp = smooth_prior(h, fam, cfg.bridge)
    X = build_design(fam, h, ds.phase)
    exact = enumerate_posterior(ds, X, sp, h)
    chain_cfg = dataclasses.replace(cfg.chain, thin=1, store_theta=False)
    chain = run_chain(Problem(ds, X, sp, h), chain_cfg)
    nd = h.layout.n_scaling
    counts = Counter(map(tuple, chain.inclusion[:, nd:].tolist()))
    total = sum(counts.values())
    empirical = {k: c / total for k, c in counts.items()}
    tvd = total_variation_distance(empirical, exact.as_dict())
    report = {
        "tv_distance": tvd,
        "n_models": len(exact.models),
        "n_recorded": total,
        "acceptance_rate": chain.acceptance_rate,
        "reanchor_max_drift": chain.reanchor_max_drift,
    }
    (cfg.output_dir / "enumerate_check.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def run(config: RunConfig) -> int:
    """Execute one configuration; returns the process exit code."""
    t0 = time.perf_counter()
    config.output_dir.mkdir(parents=True, exist_ok=True)
    try:
        if config.mode == "fit":
            diag = run_fit(config)
        elif config.mode == "prior-sim":
            diag = run_prior_sim(config)
            (config.output_dir / "prior_sim.json").write_text(json.dumps(diag, indent=2) + "\n")
        else:
            diag = run_enumerate_check(config)
    except DataError as exc:
        logger.error("data error: %s", exc)
        return EXIT_DATA
    except (NumericalDegeneracy, linalg.LinAlgError, FloatingPointError) as exc:
        logger.error("numerical error: %s", exc)
        return EXIT_NUMERICAL
    diagnostics = {
        "acceptance_rate": diag.get("acceptance_rate"),
        "reanchor_max_drift": diag.get("reanchor_max_drift"),
        "seed": config.chain.seed,
        "config": config.echo(),
        "runtime_seconds": time.perf_counter() - t0,
        "backend": kernels.BACKEND,
    }
    diagnostics.update({k: v for k, v in diag.items() if k not in diagnostics})
    (config.output_dir / "diagnostics.json").write_text(json.dumps(diagnostics, indent=2) + "\n")
    logger.info("%s finished in %.2fs -> %s", config.mode, diagnostics["runtime_seconds"], config.output_dir)
    return EXIT_OK


def _run_preset_panel(args):
    cfg, alpha, beta = args
    h = dataclasses.replace(cfg.hyperparams, alpha=alpha, beta=beta)
    sub = cfg.output_dir / f"alpha{alpha:g}_beta{beta:g}"
    return run(dataclasses.replace(cfg, hyperparams=h, output_dir=sub))


def run_preset(cfg: RunConfig, workers: int = 1) -> int:
    jobs = [(cfg, a, b) for a, b in SENSITIVITY_PRESET]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            codes = list(ex.map(_run_preset_panel, jobs))
    else:
        codes = [_run_preset_panel(j) for j in jobs]
    return max(codes)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wavshrink", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--input", help="CSV with phase,value,sigma rows (fit: synthetic data if omitted)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--sigma0sq", type=float)
    p.add_argument("--J0", type=int)
    p.add_argument("--J", type=int)
    p.add_argument("--family", help="haar, db2 .. db10")
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--bridge", choices=("exact", "endpoint"))
    p.add_argument("--preset", choices=("sensitivity",), help="run the four (alpha, beta) panels into subdirectories")
    p.add_argument("--workers", type=int, default=1, help="parallel workers for --preset")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {
        "mode": args.mode, "input": args.input, "out": args.out, "alpha": args.alpha,
        "beta": args.beta, "lambda": args.lambda_, "sigma0sq": args.sigma0sq, "J0": args.J0,
        "J": args.J, "family": args.family, "iterations": args.iterations,
        "burn_in": args.burn_in, "thin": args.thin, "seed": args.seed, "bridge": args.bridge,
        "preset": args.preset,
    }
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = resolve_config(file_values, overrides)
    except FileNotFoundError as exc:
        print(f"wavshrink: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"wavshrink: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.raw.get("preset") == "sensitivity":
        if cfg.mode != "fit":
            print("wavshrink: error: --preset sensitivity requires mode fit", file=sys.stderr)
            return EXIT_USAGE
        return run_preset(cfg, args.workers)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
