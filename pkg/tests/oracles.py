"""Closed-form reference values computed independently of pacal."""

from __future__ import annotations

import numpy as np

J = np.array([[0.0, -1.0], [1.0, 0.0]])
Y = np.diag([1.0, -1.0])


def rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def exp_y(t: float) -> np.ndarray:
    return np.diag([np.exp(t), np.exp(-t)])


def mixed_frame(p) -> np.ndarray:
    return rot(p[0]) @ exp_y(p[1])


def mixed_gamma(p, u) -> np.ndarray:
    """F^-1 dF[F u] for F = exp(x0 J) exp(x1 Y), differentiated by hand."""
    w = mixed_frame(p) @ u
    ey = exp_y(p[1])
    return w[0] * np.linalg.inv(ey) @ J @ ey + w[1] * Y
