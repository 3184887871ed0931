"""Infinitesimal layer: pseudo-derivatives, connection coefficients and the
infinitesimal skew-curvatures.

In the frame model the pseudo-derivative is linear in both arguments,
``Delta_u v(p) = Gamma(u) @ v`` with ``Gamma(u) = F(p)^-1 dF(p)[F(p) u]``.
The numeric mode never uses that formula: it extrapolates the difference
quotient ``D_{tau u} v(p) / tau`` to ``tau = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .affine import as_array
from .discrete import dissociation, discrete_riemann
from .errors import UsageError
from .limits import DEFAULT_LIMIT, LimitConfig, observed_order, richardson_limit
from .space import PointwiseSystem, solve_frame

MODES = ("numeric", "analytic")


def _check_mode(sys, mode):
    if mode not in MODES:
        raise UsageError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "analytic" and sys.frame.derivative is None:
        raise UsageError(f"frame {sys.frame.name!r} has no analytic derivative")


def pseudo_quotient(sys: PointwiseSystem, u, v, p, symmetric=False):
    """The difference quotient ``tau -> D_{tau u} v(p) / tau`` (or its central form)."""
    u = as_array(u, sys.dim)
    v = as_array(v, sys.dim)
    if symmetric:
        def q(tau):
            return (dissociation(sys, tau * u, v, p) - dissociation(sys, -tau * u, v, p)) / (2 * tau)
    else:
        def q(tau):
            return dissociation(sys, tau * u, v, p) / tau
    return q


def pseudo_derivative(sys: PointwiseSystem, u, v, p, mode="numeric",
                      config: LimitConfig = DEFAULT_LIMIT, full_output=False,
                      symmetric=False, direction=1.0):
    """``Delta_u v(p) = lim_{tau -> 0} D_{tau u} v(p) / tau``.

    ``symmetric`` switches to the central quotient (a diagnostic, extrapolated
    in powers of ``tau**2``); ``direction=-1`` approaches from ``tau < 0``.
    With ``full_output`` the :class:`LimitEstimate` is returned instead of
    raising on non-convergence.
    """
    _check_mode(sys, mode)
    p = sys.check_point(p)
    if mode == "analytic":
        return gamma_matrix(sys, u, p, "analytic") @ as_array(v, sys.dim)
    est = richardson_limit(pseudo_quotient(sys, u, v, p, symmetric), config,
                           power=2 if symmetric else 1, direction=direction)
    if full_output:
        return est
    return est.require("pseudo-derivative")


def gamma_matrix(sys: PointwiseSystem, u, p, mode="numeric",
                 config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """The matrix ``Gamma(u)`` with ``Gamma(u) @ v = Delta_u v(p)``.

    Numeric mode extrapolates ``(G_{tau u}(p) - I) / tau``, the matrix of the
    scaled dissociation; column ``j`` is exactly the quotient for ``v = e_j``.
    """
    _check_mode(sys, mode)
    p = sys.check_point(p)
    u = as_array(u, sys.dim)
    if mode == "analytic":
        frame = sys.frame_at(p)
        return solve_frame(frame, sys.frame_derivative(p, frame @ u))
    eye = np.eye(sys.dim)

    def q(tau):
        return (sys.transition(p, tau * u) - eye) / tau

    return richardson_limit(q, config).require("connection matrix")


@dataclass(frozen=True)
class ConnectionMap:
    """Connection at a point: ``gammas[i] = Gamma(e_i)``.

    ``coefficients[k, i, j]`` is the k-th component of ``Delta_{e_i} e_j``.
    """

    at: np.ndarray
    gammas: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.gammas.shape[0]

    @property
    def coefficients(self) -> np.ndarray:
        return np.transpose(self.gammas, (1, 0, 2))

    def matrix_of(self, u) -> np.ndarray:
        return np.tensordot(as_array(u, self.dim), self.gammas, axes=1)

    def apply(self, u, v) -> np.ndarray:
        """``sum_ij u^i v^j Gamma^k_ij e_k``."""
        return np.einsum("kij,i,j->k", self.coefficients, as_array(u, self.dim),
                         as_array(v, self.dim))

    def torsion(self, u, v) -> np.ndarray:
        return self.matrix_of(u) @ v - self.matrix_of(v) @ u

    def riemann(self, u, v, w) -> np.ndarray:
        gu, gv = self.matrix_of(u), self.matrix_of(v)
        return (gu @ gv - gv @ gu) @ as_array(w, self.dim)

    def cumulative(self, u, v, w) -> np.ndarray:
        return self.torsion(u, v) + self.riemann(u, v, w)


def connection_map(sys: PointwiseSystem, p, mode="numeric",
                   config: LimitConfig = DEFAULT_LIMIT) -> ConnectionMap:
    p = sys.check_point(p)
    eye = np.eye(sys.dim)
    gammas = np.array([gamma_matrix(sys, eye[i], p, mode, config) for i in range(sys.dim)])
    gammas.setflags(write=False)
    return ConnectionMap(p, gammas)


def second_pseudo(sys: PointwiseSystem, u, v, w, p, mode="numeric",
                  config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``Delta_u(Delta_v w(p))(p)``: the inner value is computed once and frozen."""
    inner = pseudo_derivative(sys, v, w, p, mode, config)
    return pseudo_derivative(sys, u, inner, p, mode, config)


def torsion(sys: PointwiseSystem, u, v, p, mode="numeric",
            config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``T_uv(p) = Delta_u v(p) - Delta_v u(p)``."""
    return (pseudo_derivative(sys, u, v, p, mode, config)
            - pseudo_derivative(sys, v, u, p, mode, config))


def riemann(sys: PointwiseSystem, u, v, w, p, mode="numeric",
            config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``R_uvw(p) = Delta_u(Delta_v w) - Delta_v(Delta_u w)``."""
    return (second_pseudo(sys, u, v, w, p, mode, config)
            - second_pseudo(sys, v, u, w, p, mode, config))


def cumulative(sys: PointwiseSystem, u, v, w, p, mode="numeric",
               config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``C_uvw(p) = T_uv(p) + R_uvw(p)``."""
    return torsion(sys, u, v, p, mode, config) + riemann(sys, u, v, w, p, mode, config)


def scaled_discrete_riemann(sys: PointwiseSystem, u, v, w, p, tau) -> np.ndarray:
    """``(D_{tau u}(D_{tau v} w) - D_{tau v}(D_{tau u} w)) / tau**2``."""
    u = as_array(u, sys.dim)
    v = as_array(v, sys.dim)
    return discrete_riemann(sys, tau * u, tau * v, w, p) / (tau * tau)


BRIDGE_LIMIT = LimitConfig(h0=1e-2, levels=5, tol=1e-7)


def scaled_bridge_limit(sys: PointwiseSystem, u, v, w, p, config: LimitConfig = BRIDGE_LIMIT):
    """Extrapolate :func:`scaled_discrete_riemann` to ``tau = 0``.

    The quotient has a first-order error term, so the fixed-``tau`` value
    carries an error of size ``tau`` times the second derivative of the
    frame; the extrapolated value removes it.  Few levels are used because
    roundoff grows like ``eps / tau**2``.
    """
    est = richardson_limit(lambda tau: scaled_discrete_riemann(sys, u, v, w, p, tau), config)
    return est.require("scaled discrete riemann")


def quotient_order(sys: PointwiseSystem, u, v, p, reference,
                   taus=(1e-2, 1e-3, 1e-4, 1e-5)) -> float:
    """Log-log slope of the raw quotient error against ``tau``."""
    q = pseudo_quotient(sys, u, v, p)
    return observed_order(taus, [q(t) for t in taus], np.asarray(reference, dtype=float))


@dataclass(frozen=True)
class ProbeReport:
    """Outcome of :func:`differentiability_probe`; residuals are maxima over trials."""

    point: list
    trials: int
    converged: list
    orders: list
    additivity: float
    homogeneity: float
    continuity: float
    two_sided_gap: float
    differentiable: bool
    failures: list

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def differentiability_probe(sys: PointwiseSystem, p, trials=5, seed=0,
                            config: LimitConfig = DEFAULT_LIMIT,
                            tol=1e-8) -> ProbeReport:
    """Probe the pseudo-derivative at ``p`` for existence and linearity.

    For random ``(u, u', v)`` records limit convergence and the raw quotient
    order, the additivity residual ``|Delta_{u+u'} v - Delta_u v - Delta_{u'} v|``,
    homogeneity residuals for factors 2.5 and -1, the continuity residual
    ``|D_{tau u} v|`` at the smallest sampled ``tau`` and the gap between the
    limits from ``tau > 0`` and ``tau < 0``.  Nothing raises: a failed limit is
    recorded as a failure.
    """
    p = sys.check_point(p)
    rng = np.random.default_rng(seed)
    n = sys.dim
    converged, orders, failures = [], [], []
    add_res = hom_res = cont_res = gap_res = 0.0

    def est(u, v, direction=1.0):
        return pseudo_derivative(sys, u, v, p, config=config, full_output=True,
                                 direction=direction)

    for t in range(trials):
        u, u2, v = (rng.uniform(-1.0, 1.0, n) for _ in range(3))
        e_u = est(u, v)
        e_u2 = est(u2, v)
        e_sum = est(u + u2, v)
        e_neg = est(u, v, direction=-1.0)
        ok = all(e.converged for e in (e_u, e_u2, e_sum, e_neg))
        converged.append(bool(ok))
        if not ok:
            failures.append(f"trial {t}: limit did not converge")
        scale = 1.0 + float(np.linalg.norm(e_u.value))
        add = float(np.linalg.norm(e_sum.value - e_u.value - e_u2.value))
        add_res = max(add_res, add)
        if add > tol * scale:
            failures.append(f"trial {t}: additivity residual {add:.3e}")
        for c in (2.5, -1.0):
            e_c = est(c * u, v)
            hom = float(np.linalg.norm(e_c.value - c * e_u.value))
            hom_res = max(hom_res, hom)
            if hom > tol * scale * abs(c):
                failures.append(f"trial {t}: homogeneity residual {hom:.3e} at c={c}")
        gap = float(np.linalg.norm(e_u.value - e_neg.value))
        gap_res = max(gap_res, gap)
        if gap > tol * scale:
            failures.append(f"trial {t}: one-sided limits differ by {gap:.3e}")
        cont = float(np.linalg.norm(e_u.quotients[-1] * e_u.taus[-1]))
        cont_res = max(cont_res, cont)
        if cont > 1e-2 * (1.0 + float(np.linalg.norm(v))):
            failures.append(f"trial {t}: continuity residual {cont:.3e}")
        errs = np.abs(e_u.quotients - e_u.value).max(axis=-1)
        if errs.max() > 1e-12:
            orders.append(observed_order(e_u.taus, e_u.quotients, e_u.value))
        else:
            orders.append(float("inf"))
    return ProbeReport(
        point=p.tolist(), trials=trials, converged=converged, orders=orders,
        additivity=add_res, homogeneity=hom_res, continuity=cont_res,
        two_sided_gap=gap_res, differentiable=not failures, failures=failures,
    )
