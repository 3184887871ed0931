"""Pointwise affine systems: a box chart with an invertible frame field.

The affine action at a point ``p`` is the matrix ``F(p)``; it sends a ground
vector ``v`` to the translation ``F(p) @ v``.  Stepping from ``p`` by ``v``
therefore lands at ``p + F(p) @ v``.  The space is affine flat exactly when
``F`` is constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .affine import as_array
from .errors import DomainError, NumericError, UsageError
from .limits import LimitConfig, richardson_limit


@dataclass(frozen=True)
class BoxDomain:
    """Closed box ``[min, max]`` in R^n."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = as_array(self.min, what="domain min")
        hi = as_array(self.max, what="domain max", dim=lo.shape[0])
        if not np.all(lo < hi):
            raise UsageError(f"domain needs min < max componentwise, got {lo} and {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def cube(cls, dim, half_width=1.0):
        return cls(np.full(dim, -half_width), np.full(dim, half_width))

    @property
    def dim(self) -> int:
        return self.min.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    @property
    def widths(self) -> np.ndarray:
        return self.max - self.min

    def contains(self, p) -> bool:
        return bool((p >= self.min).all() and (p <= self.max).all())

    def sample(self, rng, shrink=1.0) -> np.ndarray:
        """Uniform point in the box scaled by ``shrink`` about its center."""
        half = 0.5 * shrink * self.widths
        return self.center + rng.uniform(-half, half)


@dataclass(frozen=True)
class FrameField:
    """Matrix field ``p -> F(p)`` realizing an affine action field.

    ``derivative(p, w)``, when given, returns the directional derivative
    ``dF(p)[w]`` in the ambient direction ``w``.
    """

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    derivative: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    name: str = "frame"
    params: dict = field(default_factory=dict)

    def __call__(self, p) -> np.ndarray:
        return self.evaluate(p)


def constant_frame(matrix, name="constant") -> FrameField:
    m = np.array(matrix, dtype=float)
    m.setflags(write=False)
    zero = np.zeros_like(m)
    zero.setflags(write=False)
    return FrameField(m.shape[0], lambda p: m, lambda p, w: zero, name=name)


def solve_frame(a, b):
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NumericError("singular frame matrix") from exc
    if not np.isfinite(x).all():
        raise NumericError("frame inversion produced non-finite values")
    return x


@dataclass(frozen=True)
class PointwiseSystem:
    """A pointwise affine system: box chart plus frame field."""

    domain: BoxDomain
    frame: FrameField

    def __post_init__(self):
        if self.frame.dim != self.domain.dim:
            raise UsageError(
                f"frame dimension {self.frame.dim} != domain dimension {self.domain.dim}"
            )

    @property
    def dim(self) -> int:
        return self.domain.dim

    def check_point(self, p, what="point") -> np.ndarray:
        p = as_array(p, self.dim, what)
        if not self.domain.contains(p):
            raise DomainError(f"{what} {p.tolist()} outside domain", point=p)
        return p

    def frame_at(self, p) -> np.ndarray:
        m = np.asarray(self.frame(self.check_point(p)), dtype=float)
        if m.shape != (self.dim, self.dim):
            raise UsageError(f"frame returned shape {m.shape}, expected {(self.dim, self.dim)}")
        if not np.isfinite(m).all():
            raise NumericError(f"frame is not finite at {list(p)}")
        return m

    def act(self, p, v) -> np.ndarray:
        """``p(v)``: the translation ``F(p) @ v``."""
        return self.frame_at(p) @ as_array(v, self.dim)

    def unact(self, p, t) -> np.ndarray:
        """``p^{-1}(t)``: the ground vector ``F(p)^{-1} @ t``."""
        return solve_frame(self.frame_at(p), as_array(t, self.dim, "translation"))

    def step(self, p, v) -> np.ndarray:
        """``p + v-bar``: the point ``p + F(p) @ v``; must stay in the domain."""
        p = as_array(p, self.dim, "point")
        q = p + self.act(p, v)
        if not self.domain.contains(q):
            raise DomainError(f"step from {p.tolist()} leaves domain at {q.tolist()}", point=q)
        return q

    def transition(self, p, u) -> np.ndarray:
        """Deviation matrix ``F(p)^{-1} F(p + u-bar)``; ``G_u v(p) = transition @ v``."""
        return solve_frame(self.frame_at(p), self.frame_at(self.step(p, u)))

    def flatness_residual(self, p, u, v) -> np.ndarray:
        """``p^{-1}((p + u-bar)(v)) - v``; vanishes for all inputs iff flat.

        Evaluated as ``p^{-1}((p + u-bar)(v) - p(v))`` so that ``u = 0`` gives
        an exact zero.
        """
        return self.unact(p, self.act(self.step(p, u), v) - self.act(p, v))

    def frame_derivative(self, p, w, config: LimitConfig | None = None,
                         analytic: bool = True) -> np.ndarray:
        """Directional derivative ``dF(p)[w]`` of the frame.

        Uses the analytic derivative when the frame provides one; otherwise a
        central difference with base step ``1e-3 * (1 + |p|)`` and a 4-level
        Richardson extrapolation in ``h**2``.
        """
        p = self.check_point(p)
        w = as_array(w, self.dim, "direction")
        if analytic and self.frame.derivative is not None:
            return np.asarray(self.frame.derivative(p, w), dtype=float)
        h0 = 1e-3 * (1.0 + float(np.linalg.norm(p)))
        for q in (p + h0 * w, p - h0 * w):
            if not self.domain.contains(q):
                raise DomainError(f"finite-difference probe {q.tolist()} outside domain", point=q)
        cfg = config or LimitConfig(h0=h0, levels=4, tol=1e-8)
        frame = self.frame

        def central(h):
            return (np.asarray(frame(p + h * w)) - np.asarray(frame(p - h * w))) / (2.0 * h)

        est = richardson_limit(central, cfg, h0=h0, power=2)
        return est.require("frame directional derivative")


@dataclass(frozen=True)
class FlatnessReport:
    flat: bool
    max_residual: float
    witness: Optional[dict]
    samples: int
    resampled: int


def is_affine_flat(system: PointwiseSystem, sample_count=200, seed=0, tol=1e-12,
                   step_scale=0.25, max_tries=100) -> FlatnessReport:
    """Sample ``(p, u, v)`` triples and test the flatness residual.

    Steps ``u`` are drawn with entries of size ``step_scale`` times the
    smallest box width; samples whose step leaves the domain are redrawn and
    counted in ``resampled``.
    """
    if sample_count < 1:
        raise UsageError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    n = system.dim
    reach = step_scale * float(np.min(system.domain.widths))
    worst = -1.0
    witness = None
    resampled = 0
    for _ in range(sample_count):
        for _attempt in range(max_tries):
            p = system.domain.sample(rng, shrink=0.9)
            u = rng.uniform(-reach, reach, n)
            v = rng.uniform(-1.0, 1.0, n)
            try:
                r = system.flatness_residual(p, u, v)
            except DomainError:
                resampled += 1
                continue
            break
        else:
            raise DomainError("could not draw an in-domain flatness sample")
        size = float(np.linalg.norm(r))
        if size > worst:
            worst = size
            witness = {"p": p.tolist(), "u": u.tolist(), "v": v.tolist(),
                       "residual": r.tolist()}
    return FlatnessReport(worst <= tol, worst, witness, sample_count, resampled)
