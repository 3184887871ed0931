"""Stacked evaluation of the discrete operations over many inputs.

For an input ``(p, u, v, w)`` every discrete deviation, curvature and
displacement only needs the frames at ``p``, ``p + u-bar`` and ``p + v-bar``.
:func:`sample_frames` evaluates those once per row (frame callables take a
single point) and the operations below do the linear algebra on stacks.
The formulas mirror :mod:`pacal.discrete` term by term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError, UsageError
from .space import PointwiseSystem


def _mv(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return (a @ x[..., None])[..., 0]


def _solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        x = np.linalg.solve(a, b[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise NumericError("singular frame matrix in batch") from exc
    if not np.isfinite(x).all():
        raise NumericError("frame inversion produced non-finite values")
    return x


def _rows(x, dim, what) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise UsageError(f"{what} must have shape (N, {dim}), got {arr.shape}")
    return arr


def frames(sys: PointwiseSystem, points) -> np.ndarray:
    """Stack of ``F(p)`` for each row of ``points``, shape ``(N, n, n)``."""
    pts = _rows(points, sys.dim, "points")
    ok = inside(sys, pts)
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        raise DomainError(f"batch point {pts[bad].tolist()} outside domain", point=pts[bad])
    n = sys.dim
    out = np.empty((pts.shape[0], n, n))
    evaluate = sys.frame.evaluate
    for k, p in enumerate(pts):
        m = np.asarray(evaluate(p), dtype=float)
        if m.shape != (n, n):
            raise UsageError(f"frame returned shape {m.shape}, expected {(n, n)}")
        out[k] = m
    if not np.isfinite(out).all():
        raise NumericError("frame is not finite on the batch")
    return out


def inside(sys: PointwiseSystem, points) -> np.ndarray:
    """Row mask of points in the closed domain box."""
    pts = np.asarray(points, dtype=float)
    dom = sys.domain
    return np.all((pts >= dom.min) & (pts <= dom.max), axis=-1)


@dataclass(frozen=True)
class FrameSample:
    """Inputs ``p, u, v`` with the frames at ``p``, ``q_u = p + u-bar`` and ``q_v``.

    ``index`` maps rows back to the caller's input rows.
    """

    sys: PointwiseSystem
    p: np.ndarray
    u: np.ndarray
    v: np.ndarray
    fp: np.ndarray
    qu: np.ndarray
    fu: np.ndarray
    qv: np.ndarray
    fv: np.ndarray
    index: np.ndarray

    def __len__(self) -> int:
        return self.p.shape[0]

    def take(self, rows) -> "FrameSample":
        """The sub-sample of the given row positions."""
        rows = np.asarray(rows, dtype=int)
        return FrameSample(self.sys, self.p[rows], self.u[rows], self.v[rows], self.fp[rows],
                           self.qu[rows], self.fu[rows], self.qv[rows], self.fv[rows],
                           self.index[rows])

    def swapped(self) -> "FrameSample":
        """The same sample with the roles of ``u`` and ``v`` exchanged."""
        return FrameSample(self.sys, self.p, self.v, self.u, self.fp, self.qv, self.fv,
                           self.qu, self.fu, self.index)


def sample_frames(sys: PointwiseSystem, p, u, v, strict=True) -> FrameSample:
    """Evaluate the three frames per row.

    With ``strict=False`` rows whose ``p``, ``q_u`` or ``q_v`` leave the domain
    are dropped instead of raising :class:`DomainError`.
    """
    n = sys.dim
    p, u, v = _rows(p, n, "p"), _rows(u, n, "u"), _rows(v, n, "v")
    if not (p.shape[0] == u.shape[0] == v.shape[0]):
        raise UsageError("p, u and v need the same number of rows")
    ok = inside(sys, p)
    keep = np.flatnonzero(ok)
    fp = frames(sys, p[keep])
    qu = p[keep] + _mv(fp, u[keep])
    qv = p[keep] + _mv(fp, v[keep])
    ok2 = inside(sys, qu) & inside(sys, qv)
    if strict and not (ok.all() and ok2.all()):
        bad = int(np.flatnonzero(~ok)[0]) if not ok.all() else int(keep[np.flatnonzero(~ok2)[0]])
        raise DomainError(f"batch row {bad} leaves the domain", point=p[bad])
    sel = np.flatnonzero(ok2)
    keep = keep[sel]
    return FrameSample(sys, p[keep], u[keep], v[keep], fp[sel], qu[sel], frames(sys, qu[sel]),
                       qv[sel], frames(sys, qv[sel]), keep)


def _frame_for(s: FrameSample, which: str) -> np.ndarray:
    if which == "u":
        return s.fu
    if which == "v":
        return s.fv
    raise UsageError("direction must be 'u' or 'v'")


def deviation(s: FrameSample, which: str, x) -> np.ndarray:
    """``G_a x(p)`` for ``a`` the row direction named by ``which``."""
    return _solve(s.fp, _mv(_frame_for(s, which), x))


def dissociation(s: FrameSample, which: str, x) -> np.ndarray:
    """``D_a x(p) = p^-1((p + a-bar)(x) - p(x))``."""
    return _solve(s.fp, _mv(_frame_for(s, which), x) - _mv(s.fp, x))


def dissociation2(s: FrameSample, w) -> np.ndarray:
    """``D_u(D_v w)(p)``."""
    return dissociation(s, "u", dissociation(s, "v", w))


def dissociation2_expanded(s: FrameSample, w) -> np.ndarray:
    """``G_u(G_v w) - G_u w - G_v w + w``."""
    w = np.asarray(w, dtype=float)
    return (deviation(s, "u", deviation(s, "v", w)) - deviation(s, "u", w)
            - deviation(s, "v", w) + w)


def torsion(s: FrameSample) -> np.ndarray:
    """``T_uv(p) = D_u v - D_v u``."""
    return dissociation(s, "u", s.v) - dissociation(s, "v", s.u)


def riemann(s: FrameSample, w) -> np.ndarray:
    """``R_uvw(p) = D_u(D_v w) - D_v(D_u w)``."""
    return dissociation2(s, w) - dissociation2(s.swapped(), w)


def cumulative(s: FrameSample, w) -> np.ndarray:
    """``C_uvw(p) = T_uv(p) + R_uvw(p)``."""
    return torsion(s) + riemann(s, w)


def act(s: FrameSample, x) -> np.ndarray:
    """``p(x)`` row by row."""
    return _mv(s.fp, np.asarray(x, dtype=float))


def displacement(s: FrameSample) -> np.ndarray:
    """``M_u v(p) = q_u + F(q_u) v``; not domain-checked, see :func:`inside`."""
    return s.qu + _mv(s.fu, s.v)


def displacement2(s: FrameSample, w) -> np.ndarray:
    """``M_uv w(p) = M_u v(p) + F(q_u) G_v w(p)``; not domain-checked."""
    return displacement(s) + _mv(s.fu, deviation(s, "v", w))


def displacement_bracket(s: FrameSample) -> tuple[np.ndarray, np.ndarray]:
    """``M_u v <- M_v u`` and the mask of rows whose endpoints lie in the domain."""
    a, b = displacement(s), displacement(s.swapped())
    return a - b, inside(s.sys, a) & inside(s.sys, b)


def displacement2_bracket(s: FrameSample, w) -> tuple[np.ndarray, np.ndarray]:
    """``M_uv w <- M_vu w`` and the in-domain row mask."""
    a, b = displacement2(s, w), displacement2(s.swapped(), w)
    mask = inside(s.sys, a) & inside(s.sys, b)
    mask &= inside(s.sys, displacement(s)) & inside(s.sys, displacement(s.swapped()))
    return a - b, mask
