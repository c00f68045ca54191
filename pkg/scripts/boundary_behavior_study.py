#!/usr/bin/env python3
"""Boundary behavior of Dirichlet kernels: soft-kill limits and regularity.

Two experiments on a chosen domain:
  * soft-kill: bridge-weighted penalty estimates at increasing clamp levels
    n, against the hard-kill (absorbing) limit;
  * regularity: short-time survival probability started on the boundary,
    comparing the naive leave-the-open-set check with the corrected
    (endpoint-pair) killing rule.  At a regular boundary point the
    corrected rule kills immediately; a thin slit fools the naive rule.

Example:
    python scripts/boundary_behavior_study.py --domain slit --n-paths 20000
"""

import argparse

import numpy as np

from fkmc import potentials, validation
from fkmc.estimators import ProblemSpec
from fkmc.geometry import HalfSpace, slit_plane


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--domain", default="half_plane", choices=["half_plane", "slit"])
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--levels", type=float, nargs="+", default=[10, 100, 1000, 10000])
    ap.add_argument("--n-paths", type=int, default=20000)
    ap.add_argument("--n-steps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if args.domain == "half_plane":
        dom = HalfSpace(np.array([1.0, 0.0]))
        bpt = np.array([0.0, 0.0])
        xy = np.array([1.0, 0.0])
    else:
        dom = slit_plane()
        bpt = np.array([0.5, 0.0])  # a point on the slit itself
        xy = np.array([0.5, 0.5])
    spec = ProblemSpec(potentials.zero_vector(2), potentials.zero_scalar(2), dom)

    rep = validation.soft_kill_convergence(spec, args.mu, args.levels, args.t,
                                           xy, xy, args.n_paths, args.n_steps,
                                           args.seed)
    print(f"soft-kill on {args.domain} at x=y={xy.tolist()}, t={args.t}, mu={args.mu}")
    for e in rep.details:
        if e["value"] is None:
            continue
        print(f"  n={e['n']!s:>16}  estimate={e['value']:.6f}  stderr={e['stderr']:.2e}")
    print(f"  trend check: {'PASS' if rep.passed else 'FAIL'} (stat {rep.statistic:.2e})")

    print(f"\nregularity probe at boundary point {bpt.tolist()}")
    taus = [0.04, 0.02, 0.01]
    for mode in ("naive", "corrected"):
        rep = validation.regularity_probe(dom, [bpt], args.t, taus,
                                          args.n_paths, args.n_steps, args.seed,
                                          mode=mode)
        vals = rep.details[0]["estimates"]
        line = "  ".join(f"tau={e['tau']:.3g}: {e['value']:.4f}" for e in vals)
        flag = "irregular?" if not rep.passed else "regular"
        print(f"  {mode:>9s}: {line}   -> {flag}")


if __name__ == "__main__":
    main()
