"""Time the numba and numpy kernel backends on the shapes the solvers use.

    python benchmarks/bench_kernels.py [--repeat 2000]

Single-state calls dominate inversion and editing, so that row matters most.
"""

import argparse
import timeit

import numpy as np

from rfedit import kernels
from rfedit.harness.config import config_from_dict
from rfedit.harness.experiments import run_reconstruction
from rfedit.harness.presets import preset


def bench_velocity(mix, n, repeat):
    z = np.random.default_rng(0).standard_normal((n, mix.d))
    args = (z, 0.4, mix.log_weights, mix.means, mix.covs)
    kernels.mixture_velocity_batch(*args)  # compile / warm up
    t = timeit.timeit(lambda: kernels.mixture_velocity_batch(*args), number=repeat)
    return t / repeat * 1e6


def bench_pipeline(cfg, repeat):
    run_reconstruction(cfg)
    t = timeit.timeit(lambda: run_reconstruction(cfg), number=repeat)
    return t / repeat * 1e3


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args()
    cfg = config_from_dict(preset("standard"))
    mix = cfg.mixtures["src"]
    backends = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])
    prev = kernels.get_backend()
    results = {}
    try:
        for b in backends:
            kernels.set_backend(b)
            results[b] = (
                bench_velocity(mix, 1, args.repeat),
                bench_velocity(mix, 256, max(1, args.repeat // 20)),
                bench_pipeline(cfg, 3),
            )
    finally:
        kernels.set_backend(prev)
    print(f"{'backend':<8s} {'1 state (us)':>14s} {'256 states (us)':>16s} {'20-seed recon (ms)':>19s}")
    for b, (one, batch, pipe) in results.items():
        print(f"{b:<8s} {one:14.1f} {batch:16.1f} {pipe:19.1f}")
    if "numba" in results:
        print(f"single-state speedup: {results['numpy'][0] / results['numba'][0]:.1f}x")


if __name__ == "__main__":
    main()
