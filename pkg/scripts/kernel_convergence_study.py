#!/usr/bin/env python3
"""Convergence of Monte Carlo heat-kernel estimates against closed forms.

Sweeps path counts (and optionally step counts) for a chosen benchmark
problem and prints estimate, standard error, and true error per row, so
the 1/sqrt(N) statistical decay and the O(dt) discretization bias can be
read off directly.

Example:
    python scripts/kernel_convergence_study.py --problem landau \
        --n-paths 1000 4000 16000 64000 --n-steps 500 --t 1.0
"""

import argparse
import math
import time

import numpy as np

from fkmc import closed_forms as cf
from fkmc import estimators, potentials
from fkmc.estimators import ProblemSpec
from fkmc.geometry import FullSpace, HalfSpace


def build_problem(name: str, t: float):
    if name == "free":
        spec = ProblemSpec(potentials.zero_vector(2), potentials.zero_scalar(2), FullSpace(2))
        x, y = np.array([0.3, -0.2]), np.array([1.0, 0.5])
        oracle = cf.free_kernel(t, x, y, 2)
    elif name == "half_plane":
        spec = ProblemSpec(potentials.zero_vector(2), potentials.zero_scalar(2),
                           HalfSpace(np.array([1.0, 0.0])))
        x = y = np.array([1.0, 0.0])
        oracle = cf.half_space_kernel(t, x, y, 2)
    elif name == "landau":
        spec = ProblemSpec(potentials.landau(1.0), potentials.zero_scalar(2), FullSpace(2))
        x = y = np.zeros(2)
        oracle = cf.landau_kernel_magnitude(t, x, y, 1.0)
    elif name == "mehler":
        spec = ProblemSpec(potentials.zero_vector(2), potentials.harmonic(1.0, 2), FullSpace(2))
        x = y = np.zeros(2)
        oracle = cf.mehler_kernel(t, x, y, 2)
    else:
        raise SystemExit(f"unknown problem {name!r}")
    return spec, x, y, oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problem", default="half_plane",
                    choices=["free", "half_plane", "landau", "mehler"])
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--n-paths", type=int, nargs="+",
                    default=[1000, 4000, 16000, 64000])
    ap.add_argument("--n-steps", type=int, nargs="+", default=[500])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    spec, x, y, oracle = build_problem(args.problem, args.t)
    print(f"problem={args.problem}  t={args.t}  oracle={oracle:.8f}")
    print(f"{'n_paths':>9s} {'n_steps':>8s} {'|estimate|':>12s} {'stderr':>10s} "
          f"{'|err|':>10s} {'err/SE':>7s} {'sec':>6s}")
    for n_steps in args.n_steps:
        for n_paths in args.n_paths:
            t0 = time.perf_counter()
            est = estimators.kernel(spec, args.t, x, y, n_paths, n_steps,
                                    seed=args.seed, workers=args.workers)
            el = time.perf_counter() - t0
            err = abs(abs(est.mean) - oracle)
            z = err / est.stderr if est.stderr > 0 else math.inf
            print(f"{n_paths:9d} {n_steps:8d} {abs(est.mean):12.8f} "
                  f"{est.stderr:10.2e} {err:10.2e} {z:7.2f} {el:6.2f}")


if __name__ == "__main__":
    main()
