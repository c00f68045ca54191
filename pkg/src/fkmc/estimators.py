"""Monte Carlo estimators: semigroup images, heat kernels, traces, and the
Khas'minskii sup-norm bound.

Path indices are sharded into fixed-size Philox streams (see paths); the
reduction runs in shard order, so results are bit-reproducible for a given
(seed, n_paths) regardless of worker count.  Comparisons that reuse a seed
and stream base see identical path batches, which turns pathwise-exact
inequalities (diamagnetic domination, domain monotonicity, soft-kill
monotonicity) into exact inequalities between estimates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import paths as _paths
from .geometry import Ball, Box, Domain
from .potentials import ScalarField, VectorField
from .stochastics import action_batch, survival_batch

STREAM_STRIDE = 4096  # stream ids reserved per estimator call


@dataclass(frozen=True)
class ProblemSpec:
    A: VectorField
    V: ScalarField
    domain: Domain

    def __post_init__(self):
        d = self.domain.dim
        if self.A.dim != d or (self.V.dim is not None and self.V.dim != d):
            raise ValueError("field and domain dimensions disagree")

    @property
    def dim(self) -> int:
        return self.domain.dim


@dataclass(frozen=True)
class Estimate:
    mean: complex
    stderr: float
    n_paths: int
    n_steps: int
    cap_hits: int
    seed: int

    @property
    def real(self) -> float:
        return self.mean.real


class KhasminskiiFailure(RuntimeError):
    """Estimated occupation integral alpha >= 1: shrink t and retry."""


def default_n_steps(t: float, ds_max: float = 1.0e-3) -> int:
    return max(100, math.ceil(t / ds_max))


def _reduce(weights_per_shard, n_paths, n_steps, cap_hits, seed, prefactor=1.0):
    tot = 0.0 + 0.0j
    tot_re2 = tot_im2 = 0.0
    for z in weights_per_shard:
        tot += z.sum()
        tot_re2 += float(np.sum(z.real**2))
        tot_im2 += float(np.sum(z.imag**2))
    mean = tot / n_paths
    var = max((tot_re2 - n_paths * mean.real**2) + (tot_im2 - n_paths * mean.imag**2), 0.0)
    se = math.sqrt(var / (n_paths - 1) / n_paths) if n_paths > 1 else 0.0
    return Estimate(complex(mean * prefactor), se * prefactor, n_paths, n_steps, cap_hits, seed)


def _map_shards(fn, shards, workers):
    if workers <= 1:
        return [fn(i, m) for i, m in enumerate(shards)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda im: fn(*im), enumerate(shards)))


def _path_weights(spec: ProblemSpec, pos: np.ndarray, dt: float, killing: str):
    ito, div, v, hits = action_batch(spec.A, spec.V, pos, dt)
    surv = survival_batch(spec.domain, pos, dt, killing)
    with np.errstate(over="ignore", under="ignore"):
        mag = surv if spec.V.is_zero else np.exp(-np.minimum(v, 700.0)) * surv
        if spec.A.is_zero:
            return mag.astype(complex), hits
        phase = ito + div
        return mag * (np.cos(phase) - 1j * np.sin(phase)), hits


def apply_semigroup(
    spec: ProblemSpec,
    psi,
    t: float,
    x,
    n_paths: int,
    n_steps: int,
    seed: int,
    killing: str = "corrected",
    stream_base: int = 0,
    workers: int = 1,
) -> Estimate:
    """Feynman-Kac-Ito estimate of the semigroup image at x.

    Sample mean over free paths from x of
    exp(-action) * survival * psi(endpoint).
    """
    x = np.asarray(x, dtype=float)
    if not spec.domain.contains(x):
        raise ValueError("start point lies outside the domain")
    dt = t / n_steps
    shards = _paths.shard_counts(n_paths)
    hits_tot = 0

    def one(i, m):
        pos = _paths.brownian_batch(x, t, m, n_steps, seed, stream_base + i)
        w, hits = _path_weights(spec, pos, dt, killing)
        endv = np.asarray(psi(pos[:, -1]), dtype=complex)
        if not np.all(np.isfinite(endv)):
            raise ValueError("psi is nonfinite at a sampled endpoint")
        return w * endv, hits

    results = _map_shards(one, shards, workers)
    hits_tot = sum(h for _, h in results)
    return _reduce([z for z, _ in results], n_paths, n_steps, hits_tot, seed)


def kernel(
    spec: ProblemSpec,
    t: float,
    x,
    y,
    n_paths: int,
    n_steps: int,
    seed: int,
    killing: str = "corrected",
    stream_base: int = 0,
    workers: int = 1,
) -> Estimate:
    """Heat-kernel estimate: Gaussian prefactor times the bridge-sample mean
    of exp(-action) * survival.  The prefactor is closed form, never sampled.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (spec.domain.contains(x) and spec.domain.contains(y)):
        raise ValueError("kernel endpoints must lie inside the domain")
    d = spec.dim
    dt = t / n_steps
    pref = (2.0 * math.pi * t) ** (-d / 2.0) * math.exp(-float(np.sum((x - y) ** 2)) / (2.0 * t))
    shards = _paths.shard_counts(n_paths)

    def one(i, m):
        pos = _paths.bridge_batch(x, y, t, m, n_steps, seed, stream_base + i)
        return _path_weights(spec, pos, dt, killing)

    results = _map_shards(one, shards, workers)
    hits_tot = sum(h for _, h in results)
    return _reduce([z for z, _ in results], n_paths, n_steps, hits_tot, seed, prefactor=pref)


def kernel_grid(
    spec: ProblemSpec,
    t: float,
    xs,
    ys,
    n_paths: int,
    n_steps: int,
    seed: int,
    killing: str = "corrected",
    workers: int = 1,
) -> list[list[Estimate]]:
    """Elementwise kernel() with independent path streams per (x, y) pair.

    The (0, 0) entry reproduces kernel() bit-exactly for the same seed.
    """
    out = []
    for i, x in enumerate(xs):
        row = []
        for j, y in enumerate(ys):
            base = (i * len(ys) + j) * STREAM_STRIDE
            row.append(kernel(spec, t, x, y, n_paths, n_steps, seed, killing, stream_base=base, workers=workers))
        out.append(row)
    return out


def trace(
    spec: ProblemSpec,
    t: float,
    n_paths: int,
    n_steps: int,
    grid_resolution: int,
    seed: int,
    killing: str = "corrected",
    integration_box: tuple | None = None,
    workers: int = 1,
) -> Estimate:
    """Trace estimate: midpoint quadrature over the domain of the diagonal
    kernel, each diagonal value its own Monte Carlo estimate.

    `n_paths` counts paths per quadrature point.  Unbounded domains require
    an explicit integration box justified by kernel decay.
    """
    dom = spec.domain
    if isinstance(dom, Box):
        lo, hi = dom.lo, dom.hi
    elif isinstance(dom, Ball):
        lo, hi = dom.center - dom.radius, dom.center + dom.radius
    elif integration_box is not None:
        lo = np.asarray(integration_box[0], dtype=float)
        hi = np.asarray(integration_box[1], dtype=float)
    else:
        raise ValueError("unbounded domain: supply integration_box")
    d = spec.dim
    edges = [np.linspace(lo[i], hi[i], grid_resolution + 1) for i in range(d)]
    centers = [0.5 * (e[:-1] + e[1:]) for e in edges]
    mesh = np.meshgrid(*centers, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    cell = float(np.prod((hi - lo) / grid_resolution))
    inside = dom.contains(pts)
    total = 0.0 + 0.0j
    var = 0.0
    hits = 0
    for k, p in enumerate(pts):
        if not inside[k]:
            continue
        est = kernel(spec, t, p, p, n_paths, n_steps, seed, killing, stream_base=k * STREAM_STRIDE, workers=workers)
        total += est.mean
        var += est.stderr**2
        hits += est.cap_hits
    return Estimate(total * cell, cell * math.sqrt(var), int(inside.sum()) * n_paths, n_steps, hits, seed)


@dataclass(frozen=True)
class KhasminskiiResult:
    alpha: float
    alpha_stderr: float
    bound: float


def khasminskii_bound(
    V: ScalarField,
    t: float,
    x_grid,
    n_paths: int,
    n_steps: int,
    seed: int,
    d: int,
) -> KhasminskiiResult:
    """alpha = sup_x E_x[int_0^t V^-(w(s)) ds] over the probe grid, and the
    exponential-moment bound 1/(1 - alpha).  Raises KhasminskiiFailure when
    the estimated alpha reaches 1 (subdivide t and retry).
    """
    dt = t / n_steps
    best, best_se = 0.0, 0.0
    for ix, x in enumerate(x_grid):
        tot = tot2 = 0.0
        n_done = 0
        for stream, m in enumerate(_paths.shard_counts(n_paths)):
            pos = _paths.brownian_batch(np.asarray(x, dtype=float), t, m, n_steps, seed, ix * STREAM_STRIDE + stream)
            vneg = np.maximum(-V.capped(pos[:, :-1]), 0.0)
            s = vneg.sum(axis=1) * dt
            tot += s.sum()
            tot2 += float((s * s).sum())
            n_done += m
        mean = tot / n_done
        se = math.sqrt(max(tot2 / n_done - mean * mean, 0.0) / n_done)
        if mean > best:
            best, best_se = mean, se
    if best >= 1.0:
        raise KhasminskiiFailure(f"alpha = {best:.3f} >= 1 at t = {t}; shrink t")
    return KhasminskiiResult(best, best_se, 1.0 / (1.0 - best))
