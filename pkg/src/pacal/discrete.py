"""Discrete operator algebra: deviation, dissociation, displacement and the
discrete skew-curvatures with their bracket identities.

Argument order is uniformly ``(sys, u, v[, w], p)``.  The ``vec`` flag selects
the translation-valued variant of an operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .affine import as_array, between, translate
from .errors import DomainError
from .space import PointwiseSystem


def deviation(sys: PointwiseSystem, u, v, p, vec=False) -> np.ndarray:
    """``G_u v(p) = p^-1((p + u-bar)(v))``; the vec form is ``(p + u-bar)(v)``."""
    moved = sys.act(sys.step(p, u), v)
    return moved if vec else sys.unact(p, moved)


def dissociation(sys: PointwiseSystem, u, v, p, vec=False) -> np.ndarray:
    """``D_u v(p) = G_u v(p) - v``; the vec form is ``(p + u-bar)(v) - p(v)``."""
    diff = sys.act(sys.step(p, u), v) - sys.act(p, v)
    return diff if vec else sys.unact(p, diff)


def deviation2(sys: PointwiseSystem, u, v, w, p) -> np.ndarray:
    """``G_u(G_v w(p))(p)``."""
    return deviation(sys, u, deviation(sys, v, w, p), p)


def dissociation2(sys: PointwiseSystem, u, v, w, p) -> np.ndarray:
    """``D_u(D_v w(p))(p)`` by composing the dissociation twice."""
    return dissociation(sys, u, dissociation(sys, v, w, p), p)


def dissociation2_expanded(sys: PointwiseSystem, u, v, w, p) -> np.ndarray:
    """The expansion ``G_u(G_v w) - G_u w - G_v w + w``; equal to :func:`dissociation2`."""
    w = as_array(w, sys.dim)
    return (deviation2(sys, u, v, w, p) - deviation(sys, u, w, p)
            - deviation(sys, v, w, p) + w)


def displacement(sys: PointwiseSystem, u, v, p) -> np.ndarray:
    """``M_u v(p) = (p + u-bar) + v-bar``."""
    return sys.step(sys.step(p, u), v)


def displacement2(sys: PointwiseSystem, u, v, w, p) -> np.ndarray:
    """``M_uv w(p) = M_u v(p) + (p + u-bar)(G_v w(p))``."""
    shift = sys.act(sys.step(p, u), deviation(sys, v, w, p))
    q = translate(displacement(sys, u, v, p), shift)
    return sys.check_point(q, "iterated displacement")


@dataclass(frozen=True)
class PolyPath:
    """A start point and an ordered list of ground-vector steps."""

    start: np.ndarray
    steps: tuple = field(default=())

    def points(self, sys: PointwiseSystem) -> list[np.ndarray]:
        pts = [sys.check_point(self.start, "path start")]
        for k, u in enumerate(self.steps):
            try:
                pts.append(sys.step(pts[-1], u))
            except DomainError as exc:
                raise DomainError(f"path leaves domain at step {k}: {exc}",
                                  point=exc.point, step=k) from exc
        return pts

    def is_closed(self, sys: PointwiseSystem, tol=1e-12) -> bool:
        pts = self.points(sys)
        return float(np.linalg.norm(pts[-1] - pts[0])) <= tol * max(1.0, float(np.linalg.norm(pts[0])))


@dataclass(frozen=True)
class TransportResult:
    vectors: list
    points: list

    @property
    def final(self) -> np.ndarray:
        return self.vectors[-1]


def transport(sys: PointwiseSystem, v, path: PolyPath, full_output=False):
    """Parallel transport: ``v_{k+1} = G_{u_k} v_k(p_k)`` re-expressed at ``p_{k+1}``.

    The bound vector ``v`` at ``p`` corresponds to the translation ``p(v)``;
    moving it to ``q = p + u-bar`` keeps the ground vector and applies the new
    action, so in ground coordinates at ``p`` it reads ``G_u v(p)``.  The
    folded sequence of deviations is returned.
    """
    vectors = [as_array(v, sys.dim)]
    points = [sys.check_point(path.start, "path start")]
    for k, u in enumerate(path.steps):
        try:
            vectors.append(deviation(sys, u, vectors[-1], points[-1]))
            points.append(sys.step(points[-1], u))
        except DomainError as exc:
            raise DomainError(f"transport leaves domain at step {k}: {exc}",
                              point=exc.point, step=k) from exc
    if full_output:
        return TransportResult(vectors, points)
    return vectors[-1]


def discrete_torsion(sys: PointwiseSystem, u, v, p, vec=False) -> np.ndarray:
    """``T_uv(p) = D_u v(p) - D_v u(p)``."""
    return dissociation(sys, u, v, p, vec) - dissociation(sys, v, u, p, vec)


def displacement_bracket(sys: PointwiseSystem, u, v, p) -> np.ndarray:
    """``[M_u v(p)] = M_u v(p) <- M_v u(p)``; equals the vec discrete torsion."""
    return between(displacement(sys, u, v, p), displacement(sys, v, u, p))


def discrete_riemann(sys: PointwiseSystem, u, v, w, p, vec=False, form="D") -> np.ndarray:
    """``R_uvw(p) = D_u(D_v w) - D_v(D_u w)``; ``form="G"`` uses ``G_u(G_v w) - G_v(G_u w)``."""
    if form == "D":
        r = dissociation2(sys, u, v, w, p) - dissociation2(sys, v, u, w, p)
    elif form == "G":
        r = deviation2(sys, u, v, w, p) - deviation2(sys, v, u, w, p)
    else:
        raise ValueError(f"unknown form {form!r}")
    return sys.act(p, r) if vec else r


def displacement2_bracket(sys: PointwiseSystem, u, v, w, p) -> np.ndarray:
    """``[M_uv w(p)] = M_uv w(p) <- M_vu w(p)``; equals the vec cumulative curvature."""
    return between(displacement2(sys, u, v, w, p), displacement2(sys, v, u, w, p))


def discrete_cumulative(sys: PointwiseSystem, u, v, w, p, vec=False) -> np.ndarray:
    """``C_uvw(p) = T_uv(p) + R_uvw(p)``.

    With ``w = 0`` this returns ``T_uv``, which is generally nonzero.
    """
    return discrete_torsion(sys, u, v, p, vec) + discrete_riemann(sys, u, v, w, p, vec)


@dataclass(frozen=True)
class DiscreteCurvatureMap:
    """The point-indexed map ``(u, v) -> D_u v(at)``."""

    system: PointwiseSystem
    at: np.ndarray

    def apply(self, u, v) -> np.ndarray:
        return dissociation(self.system, u, v, self.at)

    def matrix(self, u) -> np.ndarray:
        """Matrix of ``v -> D_u v(at)``."""
        return self.system.transition(self.at, u) - np.eye(self.system.dim)


def discrete_curvature(sys: PointwiseSystem, p) -> DiscreteCurvatureMap:
    return DiscreteCurvatureMap(sys, sys.check_point(p))
