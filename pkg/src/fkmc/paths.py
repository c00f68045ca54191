"""Discretized Brownian motion and Brownian bridges on uniform time grids.

Diffusion constant 1/2: per-coordinate increment variance equals the step
size dt, matching the transition density (2 pi s)^(-d/2) exp(-|.|^2 / 2s).

Sampling uses the counter-based Philox generator keyed by (seed, stream),
so any stream is reconstructible independently of execution order.  Batch
estimators shard path indices into fixed-size streams; results depend only
on (seed, n_paths), never on scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SHARD_SIZE = 16384  # paths per Philox stream in batch estimators


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), stream]))


def shard_counts(n_paths: int, shard_size: int = SHARD_SIZE) -> list[int]:
    full, rest = divmod(n_paths, shard_size)
    return [shard_size] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class Path:
    """One sampled path: uniform grid s_i = i t / n_steps, positions (n+1, d)."""

    t: float
    n_steps: int
    positions: np.ndarray
    kind: str  # "free" | "bridge"

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t, self.n_steps + 1)

    @property
    def dt(self) -> float:
        return self.t / self.n_steps


def brownian_batch(x, t: float, n_paths: int, n_steps: int, seed: int, stream: int = 0) -> np.ndarray:
    """Positions array (n_paths, n_steps+1, d) of Brownian motion from x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not t > 0 or n_steps < 1:
        raise ValueError("need t > 0 and n_steps >= 1")
    d = x.shape[0]
    dt = t / n_steps
    inc = generator(seed, stream).standard_normal(size=(n_paths, n_steps, d))
    inc *= np.sqrt(dt)
    pos = np.empty((n_paths, n_steps + 1, d))
    pos[:, 0] = x
    np.cumsum(inc, axis=1, out=inc)
    pos[:, 1:] = x + inc
    return pos


def bridge_batch(x, y, t: float, n_paths: int, n_steps: int, seed: int, stream: int = 0) -> np.ndarray:
    """Brownian bridge positions pinned at (0, x) and (t, y).

    Exact Gaussian conditioning of a free path:
    b(s_i) = w(s_i) - (s_i / t) (w(t) - y).  Agrees in law with the
    drift-integral construction at the grid points.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    pos = brownian_batch(x, t, n_paths, n_steps, seed, stream)
    frac = np.arange(n_steps + 1) / n_steps
    pos -= frac[None, :, None] * (pos[:, -1:] - y)
    pos[:, -1] = y  # pin exactly
    return pos


def sample_brownian(x, t: float, n_steps: int, seed: int) -> Path:
    return Path(t, n_steps, brownian_batch(x, t, 1, n_steps, seed)[0], "free")


def sample_bridge(x, y, t: float, n_steps: int, seed: int) -> Path:
    return Path(t, n_steps, bridge_batch(x, y, t, 1, n_steps, seed)[0], "bridge")


def escape_probability(r: float, t: float, d: int, n_paths: int, n_steps: int, seed: int) -> tuple[float, float]:
    """P_0{ sup_{s <= t} |w(s)| >= r } on the discrete grid, with stderr.

    A lower bound of the continuous-time probability: the grid misses
    excursions between sampling times.
    """
    if not (r > 0 and t > 0):
        raise ValueError("need r > 0 and t > 0")
    hits = 0
    for stream, m in enumerate(shard_counts(n_paths)):
        pos = brownian_batch(np.zeros(d), t, m, n_steps, seed, stream)
        hits += int(np.count_nonzero(np.linalg.norm(pos, axis=2).max(axis=1) >= r))
    p = hits / n_paths
    se = np.sqrt(max(p * (1.0 - p), 0.0) / n_paths)
    return p, se


def dump_paths_csv(paths: list[Path], filename: str) -> None:
    """Debug dump: one CSV block per path with columns s, x1..xd."""
    with open(filename, "w") as fh:
        for k, p in enumerate(paths):
            fh.write(f"# path {k} kind={p.kind}\n")
            for s, row in zip(p.grid, p.positions):
                fh.write(",".join(f"{v:.17g}" for v in (s, *row)) + "\n")
