"""Gradients from an inner product and affine geodesic tracing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .affine import as_array
from .derivatives import plain_derivative
from .errors import DomainError, NumericError, UsageError
from .fields import ScalarField
from .limits import DEFAULT_LIMIT, LimitConfig
from .space import BoxDomain, PointwiseSystem, constant_frame, solve_frame


@dataclass(frozen=True)
class Metric:
    """Symmetric non-degenerate bilinear form ``<x, y> = x @ g @ y``."""

    matrix: np.ndarray

    def __post_init__(self):
        g = np.array(self.matrix, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise UsageError("metric must be a square matrix")
        if np.max(np.abs(g - g.T)) > 1e-14 * max(1.0, float(np.max(np.abs(g)))):
            raise UsageError("metric must be symmetric")
        if not np.linalg.cond(g) < 1e12:
            raise NumericError("metric is degenerate")
        g.setflags(write=False)
        object.__setattr__(self, "matrix", g)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def inner(self, x, y) -> float:
        return float(as_array(x, self.dim) @ self.matrix @ as_array(y, self.dim))


def _canonical_system(x, dim):
    # the canonical self-action on V: identity frame on a box around x
    return PointwiseSystem(BoxDomain(x - 1.0, x + 1.0), constant_frame(np.eye(dim), "canonical"))


def differential(phi: ScalarField, x, dim=None, sys: PointwiseSystem | None = None,
                 config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """Components ``partial_{e_i} phi(x)`` of the differential."""
    x = as_array(x, dim, "point")
    sys = sys or _canonical_system(x, x.shape[0])
    eye = np.eye(x.shape[0])
    return np.array([plain_derivative(sys, phi, eye[i], x, "ambient", config)
                     for i in range(x.shape[0])])


def gradient(phi: ScalarField, metric: Metric, x, sys: PointwiseSystem | None = None,
             method="solve", config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """The unique ``grad`` with ``<grad, u> = partial_u phi(x)`` for all ``u``.

    ``method="normal"`` solves the normal equations ``g^T g grad = g^T dphi``
    instead of ``g grad = dphi``; both agree for a non-degenerate metric.
    """
    dphi = differential(phi, x, metric.dim, sys, config)
    g = metric.matrix
    if method == "solve":
        return solve_frame(g, dphi)
    if method == "normal":
        return solve_frame(g.T @ g, g.T @ dphi)
    raise UsageError("method must be 'solve' or 'normal'")


@dataclass(frozen=True)
class GeodesicTrace:
    """Uniformly sampled affine geodesic ``t -> gamma(t)``."""

    times: np.ndarray
    points: np.ndarray
    body_velocity: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1]

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])


def geodesic_trace(sys: PointwiseSystem, p0, v, t_end, step_count) -> GeodesicTrace:
    """Integrate ``gamma' = F(gamma) v`` with classical fixed-step RK4 on ``[0, t_end]``."""
    if int(step_count) < 1:
        raise UsageError("step_count must be >= 1")
    if not t_end > 0:
        raise UsageError("t_end must be positive")
    steps = int(step_count)
    v = as_array(v, sys.dim)
    y = sys.check_point(p0, "start point").copy()
    h = float(t_end) / steps
    times = np.arange(steps + 1) * h
    times[-1] = float(t_end)
    points = np.empty((steps + 1, sys.dim))
    points[0] = y

    def rhs(q, t):
        try:
            return sys.act(q, v)
        except DomainError as exc:
            raise DomainError(f"geodesic leaves domain near t={float(t)!r}", point=exc.point,
                              parameter=float(t)) from exc

    for k in range(steps):
        t = times[k]
        k1 = rhs(y, t)
        k2 = rhs(y + 0.5 * h * k1, t + 0.5 * h)
        k3 = rhs(y + 0.5 * h * k2, t + 0.5 * h)
        k4 = rhs(y + h * k3, t + h)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not sys.domain.contains(y):
            raise DomainError(f"geodesic leaves domain at t={times[k + 1]!r}", point=y,
                              parameter=float(times[k + 1]))
        points[k + 1] = y
    stats = {"method": "rk4", "steps": steps, "h": h, "frame_evaluations": 4 * steps}
    return GeodesicTrace(times, points, v, stats)


def _central(values: np.ndarray, h: float, stride: int, five_point: bool) -> np.ndarray:
    """Central-difference derivative at the interior samples (uniform spacing ``h``)."""
    s = stride
    if five_point:
        return (values[: -4 * s] - 8.0 * values[s:-3 * s] + 8.0 * values[3 * s:-s]
                - values[4 * s:]) / (12.0 * s * h)
    return (values[2 * s:] - values[: -2 * s]) / (2.0 * s * h)


def geodesic_residual(sys: PointwiseSystem, trace: GeodesicTrace) -> float:
    """Max norm of the parameter derivative of the body velocity ``F(gamma)^-1 gamma'``.

    ``gamma'`` and the derivative of the body velocity are both estimated by
    central differences over the samples; for an affine geodesic the result
    vanishes up to discretization error.  Long traces use five-point stencils
    with a stride of about ``N / 200`` samples to keep roundoff small.
    """
    pts = np.asarray(trace.points, dtype=float)
    n = pts.shape[0]
    if n < 5:
        raise UsageError("geodesic residual needs at least 5 samples")
    h = trace.step
    stride = max(1, (n - 1) // 200)
    five = n >= 8 * stride + 1
    if not five:
        stride = 1
    reach = (2 if five else 1) * stride
    velocity = _central(pts, h, stride, five)
    body = np.array([solve_frame(sys.frame_at(q), d)
                     for q, d in zip(pts[reach:n - reach], velocity)])
    accel = _central(body, h, stride, five)
    return float(np.max(np.linalg.norm(accel, axis=1)))
