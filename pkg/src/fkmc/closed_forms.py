"""Closed-form reference kernels used by the validation suite and tests."""

from __future__ import annotations

import math

import numpy as np


def free_kernel(t: float, x, y, d: int) -> float:
    """Gaussian heat kernel of -Laplacian/2 on R^d."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (2.0 * math.pi * t) ** (-d / 2.0) * math.exp(-float(np.sum((x - y) ** 2)) / (2.0 * t))


def half_space_kernel(t: float, x, y, d: int) -> float:
    """Dirichlet kernel of the half-space {x_1 > 0} by the method of images."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    y_ref = y.copy()
    y_ref[0] = -y_ref[0]
    return free_kernel(t, x, y, d) - free_kernel(t, x, y_ref, d)


def landau_kernel_magnitude(t: float, x, y, h: float) -> float:
    """|k_t(x, y)| for H = (-i grad - A_h)^2 / 2 with constant field h in d = 2.

    Gauge-independent magnitude: the Landau-level sum gives
    h / (4 pi sinh(h t / 2)) * exp(-(h/4) coth(h t / 2) |x - y|^2).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = 0.5 * h * t
    return h / (4.0 * math.pi * math.sinh(a)) * math.exp(-0.25 * h / math.tanh(a) * float(np.sum((x - y) ** 2)))


def mehler_kernel(t: float, x, y, d: int, omega: float = 1.0) -> float:
    """Kernel of -Laplacian/2 + omega^2 |x|^2 / 2 (product of 1-D Mehler factors)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = float(omega)
    s = math.sinh(w * t)
    c = math.cosh(w * t)
    pref = (w / (2.0 * math.pi * s)) ** (d / 2.0)
    expo = -w * (c * float(np.sum(x * x) + np.sum(y * y)) - 2.0 * float(np.sum(x * y))) / (2.0 * s)
    return pref * math.exp(expo)


def interval_dirichlet_trace(t: float, length: float = math.pi, n_terms: int = 50) -> float:
    """Trace of exp(t Laplacian / 2) on (0, length) with Dirichlet ends."""
    n = np.arange(1, n_terms + 1)
    lam = 0.5 * (n * math.pi / length) ** 2
    return float(np.sum(np.exp(-lam * t)))


def box_dirichlet_trace(t: float, length: float = math.pi, d: int = 2, n_terms: int = 50) -> float:
    return interval_dirichlet_trace(t, length, n_terms) ** d


def interval_dirichlet_kernel(t: float, x: float, y: float, length: float = math.pi, n_images: int = 6) -> float:
    """1-D Dirichlet kernel on (0, length) by the reflection image sum."""
    total = 0.0
    for n in range(-n_images, n_images + 1):
        shift = 2.0 * n * length
        total += math.exp(-((x - y - shift) ** 2) / (2.0 * t))
        total -= math.exp(-((x + y - shift) ** 2) / (2.0 * t))
    return (2.0 * math.pi * t) ** -0.5 * total


def box_dirichlet_diagonal(t: float, x, length: float = math.pi) -> float:
    x = np.asarray(x, dtype=float)
    out = 1.0
    for xi in x:
        out *= interval_dirichlet_kernel(t, float(xi), float(xi), length)
    return out
