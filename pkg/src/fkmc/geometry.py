"""Configuration-space domains: membership, boundary distance, cone regularity.

A domain is an open subset of R^d, d >= 2.  Membership and boundary
distance are vectorized over trailing-axis point arrays of shape (..., d).
Boundary distance is always inf{|x - y| : y not in the domain}, so it is 0
outside the domain and +inf for the full space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ConeSpec:
    """Finite exterior cone witness: radius > 0, opening angle in (0, pi/2).

    The cone with vertex x and axis u is
    {y : 0 < |y - x| < radius, u.(y - x) > |y - x| cos(angle)}.
    """

    radius: float
    angle: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("cone radius must be positive")
        if not 0 < self.angle < math.pi / 2:
            raise ValueError("cone opening angle must lie in (0, pi/2)")

    def points(self, vertex: np.ndarray, axis: np.ndarray, n: int, seed: int = 0) -> np.ndarray:
        """Sample n points from the open cone at `vertex` with axis `axis`."""
        vertex = np.asarray(vertex, dtype=float)
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        d = vertex.shape[-1]
        rng = np.random.default_rng(seed)
        pts = np.empty((n, d))
        filled = 0
        while filled < n:
            v = rng.normal(size=(4 * n, d))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            keep = v @ axis > math.cos(self.angle) + 1e-12
            v = v[keep][: n - filled]
            r = rng.uniform(1e-9, self.radius, size=v.shape[0])
            pts[filled : filled + v.shape[0]] = vertex + r[:, None] * v
            filled += v.shape[0]
        return pts


@dataclass(frozen=True)
class Regularity:
    kind: str  # "uniformly_regular" | "regular" | "unknown"
    cone: ConeSpec | None = None


class Domain:
    """Base class; subclasses implement membership and boundary distance."""

    dim: int

    def __init__(self, dim: int):
        if dim < 2:
            raise ValueError("only dimensions d >= 2 are supported")
        self.dim = int(dim)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"point dimension {x.shape[-1]} != domain dimension {self.dim}")
        return x

    def contains(self, x) -> np.ndarray:
        raise NotImplementedError

    def boundary_distance(self, x) -> np.ndarray:
        raise NotImplementedError

    def classify_regularity(self) -> Regularity:
        return Regularity("unknown")

    # witness data for regularity checks: (boundary point, exterior cone axis)
    def boundary_witness(self, n: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
        raise NotImplementedError


class FullSpace(Domain):
    def contains(self, x):
        x = self._check(x)
        return np.ones(x.shape[:-1], dtype=bool)

    def boundary_distance(self, x):
        x = self._check(x)
        return np.full(x.shape[:-1], np.inf)

    def classify_regularity(self) -> Regularity:
        # convention: the whole space counts as uniformly regular (no boundary)
        return Regularity("uniformly_regular", None)


class HalfSpace(Domain):
    """Open half-space {x : normal . x > offset}."""

    def __init__(self, normal, offset: float = 0.0):
        normal = np.asarray(normal, dtype=float)
        super().__init__(normal.shape[-1])
        self.normal = normal / np.linalg.norm(normal)
        self.offset = float(offset)

    def contains(self, x):
        x = self._check(x)
        return x @ self.normal > self.offset

    def boundary_distance(self, x):
        x = self._check(x)
        return np.maximum(x @ self.normal - self.offset, 0.0)

    def classify_regularity(self) -> Regularity:
        return Regularity("uniformly_regular", ConeSpec(radius=1.0, angle=math.pi / 4))

    def boundary_witness(self, n, seed=0):
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(n):
            v = rng.normal(size=self.dim)
            v -= (v @ self.normal) * self.normal
            out.append((self.offset * self.normal + v, -self.normal))
        return out


class Ball(Domain):
    """Open ball {x : |x - center| < radius}."""

    def __init__(self, center, radius: float):
        center = np.asarray(center, dtype=float)
        super().__init__(center.shape[-1])
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.center = center
        self.radius = float(radius)

    def contains(self, x):
        x = self._check(x)
        return np.linalg.norm(x - self.center, axis=-1) < self.radius

    def boundary_distance(self, x):
        x = self._check(x)
        return np.maximum(self.radius - np.linalg.norm(x - self.center, axis=-1), 0.0)

    def classify_regularity(self) -> Regularity:
        return Regularity("uniformly_regular", ConeSpec(radius=self.radius, angle=math.pi / 4))

    def boundary_witness(self, n, seed=0):
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(n):
            u = rng.normal(size=self.dim)
            u /= np.linalg.norm(u)
            out.append((self.center + self.radius * u, u))
        return out


class Box(Domain):
    """Open axis-aligned box {x : lo_i < x_i < hi_i}."""

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape:
            raise ValueError("lo and hi must have the same shape")
        if not np.all(hi > lo):
            raise ValueError("box must have positive extent in every coordinate")
        super().__init__(lo.shape[-1])
        self.lo = lo
        self.hi = hi

    def contains(self, x):
        x = self._check(x)
        return np.all((x > self.lo) & (x < self.hi), axis=-1)

    def boundary_distance(self, x):
        x = self._check(x)
        inside = np.minimum(x - self.lo, self.hi - x).min(axis=-1)
        return np.maximum(inside, 0.0)

    def classify_regularity(self) -> Regularity:
        r = min(0.5 * float(np.min(self.hi - self.lo)), 1.0)
        return Regularity("uniformly_regular", ConeSpec(radius=r, angle=math.pi / 6))

    def boundary_witness(self, n, seed=0):
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(n):
            i = rng.integers(self.dim)
            side = rng.integers(2)
            p = rng.uniform(self.lo, self.hi)
            axis = np.zeros(self.dim)
            if side == 0:
                p[i] = self.lo[i]
                axis[i] = -1.0
            else:
                p[i] = self.hi[i]
                axis[i] = 1.0
            out.append((p, axis))
        return out


class ComplementOfBall(Domain):
    """Exterior domain {x : |x - center| > radius}."""

    def __init__(self, center, radius: float):
        center = np.asarray(center, dtype=float)
        super().__init__(center.shape[-1])
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.center = center
        self.radius = float(radius)

    def contains(self, x):
        x = self._check(x)
        return np.linalg.norm(x - self.center, axis=-1) > self.radius

    def boundary_distance(self, x):
        x = self._check(x)
        return np.maximum(np.linalg.norm(x - self.center, axis=-1) - self.radius, 0.0)

    def classify_regularity(self) -> Regularity:
        # cone fits inside the closed ball: need r <= 2 R cos(angle)
        angle = math.pi / 4
        r = 0.9 * 2.0 * self.radius * math.cos(angle)
        return Regularity("uniformly_regular", ConeSpec(radius=min(r, self.radius), angle=angle))

    def boundary_witness(self, n, seed=0):
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(n):
            u = rng.normal(size=self.dim)
            u /= np.linalg.norm(u)
            out.append((self.center + self.radius * u, -u))
        return out


class CustomDomain(Domain):
    """User-supplied membership predicate plus boundary-distance function.

    Both callables must be vectorized over (..., d) arrays.  Distance is
    never inferred from membership; the killing correction needs it.
    """

    def __init__(self, dim: int, membership: Callable, distance: Callable):
        super().__init__(dim)
        self._membership = membership
        self._distance = distance

    def contains(self, x):
        x = self._check(x)
        return np.asarray(self._membership(x), dtype=bool)

    def boundary_distance(self, x):
        x = self._check(x)
        return np.asarray(self._distance(x), dtype=float)

    def classify_regularity(self) -> Regularity:
        return Regularity("unknown")


def slit_plane() -> CustomDomain:
    """R^2 minus the closed half-line {x1 >= 0, x2 = 0}."""

    def member(x):
        return ~((x[..., 0] >= 0) & (x[..., 1] == 0.0))

    def dist(x):
        x1, x2 = x[..., 0], x[..., 1]
        return np.where(x1 > 0, np.abs(x2), np.hypot(x1, x2))

    return CustomDomain(2, member, dist)


def make_domain(kind: str, dim: int, **params) -> Domain:
    """Build a domain from a config-style description."""
    if kind == "full_space":
        return FullSpace(dim)
    if kind == "half_space":
        return HalfSpace(params.get("normal", [1.0] + [0.0] * (dim - 1)), params.get("offset", 0.0))
    if kind == "ball":
        return Ball(params.get("center", [0.0] * dim), params["radius"])
    if kind == "box":
        return Box(params["lo"], params["hi"])
    if kind == "complement_of_ball":
        return ComplementOfBall(params.get("center", [0.0] * dim), params["radius"])
    if kind == "slit_plane":
        return slit_plane()
    raise ValueError(f"unknown domain kind: {kind!r}")
