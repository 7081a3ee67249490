"""Numba vs numpy timing for the move kernels and for a whole chain.

    python benchmarks/bench_kernels.py [--sizes 32,64,128,256] [--repeat 200]

Kernel timings call the ``*_jit`` and ``*_numpy`` variants side by side in
this process. The chain timing runs each backend in a fresh interpreter so
that ``WAVSHRINK_DISABLE_NUMBA`` takes effect.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from wavshrink import kernels
from wavshrink._accel import NUMBA_ENABLED

CHAIN_SNIPPET = """
import time
from wavshrink import kernels
from wavshrink.data import generate_synthetic
from wavshrink.mcmc import ChainConfig, Problem, init_state, run_chain
from wavshrink.prior import Hyperparams, smooth_prior
from wavshrink.wavelets import WaveletFamily, build_design
h = Hyperparams(alpha={alpha}, J0={J0}, J={J})
fam = WaveletFamily.from_name("db4")
ds = generate_synthetic(N={N}, seed=0)
pb = Problem(ds, build_design(fam, h, ds.phase), smooth_prior(h, fam), h)
cfg = ChainConfig(iterations={iters}, burn_in=0, thin=10, seed=0, store_theta=False)
run_chain(pb, ChainConfig(iterations=200, burn_in=0, thin=10, store_theta=False))
t = time.perf_counter()
out = run_chain(pb, cfg)
print(kernels.BACKEND, time.perf_counter() - t, out.acceptance_rate, out.model_size.mean())
"""


def spd(q, rng):
    A = rng.standard_normal((q, q + 4))
    return A @ A.T / q + 0.1 * np.eye(q)


def kernel_cases(q, rng):
    S = spd(q, rng)
    T = np.linalg.cholesky(S)
    hv = rng.standard_normal(q)
    w = rng.standard_normal(q + 1)
    z = rng.standard_normal(q)
    l = q // 3
    return {
        "grow_cov": (S, hv, 2.0),
        "grow_factor": (T, w),
        "shrink_cov": (S, l),
        "drop_factor": (T, l),
        "factor_residual": (T, S, z),
    }


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'q':>6}{'numpy us':>12}{'numba us':>12}{'speedup':>10}")
    for q in sizes:
        for name, args in kernel_cases(q, rng).items():
            ref = getattr(kernels, f"{name}_numpy")
            fast = getattr(kernels, f"{name}_jit")
            fast(*args)  # compile outside the timed region
            t_ref = min(timeit.repeat(lambda: ref(*args), number=repeat, repeat=3)) / repeat * 1e6
            t_fast = min(timeit.repeat(lambda: fast(*args), number=repeat, repeat=3)) / repeat * 1e6
            print(f"{name:<16}{q:>6}{t_ref:>12.1f}{t_fast:>12.1f}{t_ref / t_fast:>10.2f}")


def bench_chain(J, J0, alpha, N, iters):
    code = CHAIN_SNIPPET.format(J=J, J0=J0, alpha=alpha, N=N, iters=iters)
    rows = []
    for disable in (True, False):
        env = dict(os.environ)
        env.pop("WAVSHRINK_DISABLE_NUMBA", None)
        if disable:
            env["WAVSHRINK_DISABLE_NUMBA"] = "1"
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, secs, acc, size = out.stdout.split()
        rows.append((backend, float(secs), float(acc), float(size)))
    print(f"\nchain: J={J}, J0={J0}, alpha={alpha}, N={N}, {iters} iterations")
    for backend, secs, acc, size in rows:
        print(f"  {backend:<6} {secs:7.2f}s  {secs / iters * 1e6:7.1f} us/step  acceptance {acc:.3f}  mean q {size:.1f}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="32,64,128,256")
    p.add_argument("--repeat", type=int, default=200)
    p.add_argument("--chain-J", type=int, default=8)
    # many scaling columns keep q large enough for the kernels to matter
    p.add_argument("--chain-J0", type=int, default=6)
    p.add_argument("--chain-alpha", type=float, default=0.7)
    p.add_argument("--chain-N", type=int, default=300)
    p.add_argument("--chain-iterations", type=int, default=20000)
    args = p.parse_args()
    if not NUMBA_ENABLED:
        print("numba is not active; the *_jit kernels run as plain Python loops")
    bench_kernels([int(s) for s in args.sizes.split(",")], args.repeat)
    bench_chain(args.chain_J, args.chain_J0, args.chain_alpha, args.chain_N, args.chain_iterations)


if __name__ == "__main__":
    main()
