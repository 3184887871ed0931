"""Derivatives of fields on pointwise affine spaces and the product rules.

Every derivative is the extrapolated limit of a difference quotient in
``tau``.  Two sampling conventions appear:

* ``"step"``: the field is sampled at ``p + (tau u)-bar``, the point reached by
  the action (operators written ``nabla``, ``delta``);
* ``"ambient"``: the field is sampled at the chart point ``p + tau u``
  (operators written ``triangledown``, ``partial``; the classical directional
  derivative).

Reduced derivatives transport the sampled value back with
``p^-1 o (p + (tau u)-bar)`` in both conventions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .affine import as_array
from .errors import UsageError
from .fields import BilinearMap, CovectorField, PointField, ScalarField, VectorField
from .infinitesimal import pseudo_derivative
from .limits import DEFAULT_LIMIT, LimitConfig, richardson_limit
from .space import PointwiseSystem

SAMPLINGS = ("step", "ambient")


def _limit(q: Callable[[float], np.ndarray], config: LimitConfig, what: str):
    return richardson_limit(q, config).require(what)


def _sample_point(sys: PointwiseSystem, p, tau_u, sampling):
    if sampling == "step":
        return sys.step(p, tau_u)
    if sampling == "ambient":
        return sys.check_point(p + tau_u, "sample point")
    raise UsageError(f"sampling must be one of {SAMPLINGS}, got {sampling!r}")


def _value(x):
    """Scalars become shape-(1,) arrays so every quotient is an array."""
    return np.atleast_1d(np.asarray(x, dtype=float))


def _unwrap(field, value):
    return float(value[0]) if isinstance(field, ScalarField) else value


# point fields ---------------------------------------------------------------

def point_field_complete_derivative(sys_a: PointwiseSystem, sys_b: PointwiseSystem,
                                    phi: PointField, u, p,
                                    config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``lim b(Phi(p))^-1 (Phi(p + (tau u)-bar) <- Phi(p)) / tau``."""
    p = sys_a.check_point(p)
    u = as_array(u, sys_a.dim)
    base = sys_b.check_point(phi(p), "image point")

    def q(tau):
        image = sys_b.check_point(phi(sys_a.step(p, tau * u)), "image point")
        return sys_b.unact(base, image - base) / tau

    return _limit(q, config, "complete derivative of point field")


def point_field_reduced_derivative(sys_a: PointwiseSystem, phi: PointField, u, p,
                                   config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``lim a(p)^-1 (Phi(p + (tau u)-bar) <- Phi(p)) / tau``; target must lie in the source chart."""
    target = getattr(phi.target, "domain", None)
    if target is not None and (np.any(target.min < sys_a.domain.min)
                               or np.any(target.max > sys_a.domain.max)):
        raise UsageError("reduced derivative needs the target chart inside the source chart")
    if phi.dim != sys_a.dim:
        raise UsageError("reduced derivative needs equal source and target dimension")
    p = sys_a.check_point(p)
    u = as_array(u, sys_a.dim)
    base = phi(p)

    def q(tau):
        return sys_a.unact(p, phi(sys_a.step(p, tau * u)) - base) / tau

    return _limit(q, config, "reduced derivative of point field")


# vector fields --------------------------------------------------------------

def vector_field_complete_derivative(sys_a: PointwiseSystem, sys_b: PointwiseSystem,
                                     v: VectorField, u, p,
                                     config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``lim (b(v(p))^-1 b(v(p')) v(p') - v(p)) / tau`` with ``p' = p + (tau u)-bar``.

    ``sys_b`` is a pointwise system on the value space V itself.
    """
    p = sys_a.check_point(p)
    u = as_array(u, sys_a.dim)
    v0 = v(p)

    def q(tau):
        v1 = v(sys_a.step(p, tau * u))
        return (sys_b.unact(v0, sys_b.act(v1, v1)) - v0) / tau

    return _limit(q, config, "complete derivative of vector field")


def reduced_derivative(sys: PointwiseSystem, v: VectorField, u, p, sampling="step",
                       config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``nabla_u v(p) = lim (p^-1 o (p + (tau u)-bar)(v(p')) - v(p)) / tau``.

    ``sampling="ambient"`` samples ``v`` at ``p + tau u`` instead, giving the
    ``triangledown`` variant.
    """
    p = sys.check_point(p)
    u = as_array(u, sys.dim)
    v0 = v(p)

    def q(tau):
        moved = sys.step(p, tau * u)
        value = v(_sample_point(sys, p, tau * u, sampling))
        return (sys.unact(p, sys.act(moved, value)) - v0) / tau

    return _limit(q, config, "reduced derivative")


def vector_field_reduced_derivative(sys, v, u, p, config=DEFAULT_LIMIT):
    return reduced_derivative(sys, v, u, p, "step", config)


def plain_derivative(sys: PointwiseSystem, f, u, p, sampling="step",
                     config: LimitConfig = DEFAULT_LIMIT):
    """``delta_u f(p) = lim (f(p') - f(p)) / tau`` for scalar, vector or covector ``f``.

    Returns a float for scalar fields.  ``sampling="ambient"`` gives the
    classical directional derivative ``partial_u f``.
    """
    p = sys.check_point(p)
    u = as_array(u, sys.dim)
    f0 = _value(f(p))

    def q(tau):
        return (_value(f(_sample_point(sys, p, tau * u, sampling))) - f0) / tau

    return _unwrap(f, _limit(q, config, "plain derivative"))


def lie_derivative(sys: PointwiseSystem, uf: VectorField, vf: VectorField, x,
                   config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``L_u v(x) = (partial_u v)(x) - (partial_v u)(x)`` with classical derivatives."""
    x = sys.check_point(x)
    return (plain_derivative(sys, vf, uf(x), x, "ambient", config)
            - plain_derivative(sys, uf, vf(x), x, "ambient", config))


def field_pseudo_derivative(sys, uf: VectorField, vf: VectorField, p, mode="numeric",
                            config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``Delta_u v(p)`` for fields: depends only on the values ``u(p)``, ``v(p)``."""
    return pseudo_derivative(sys, uf(p), vf(p), p, mode, config)


def torsion_via_derivatives(sys: PointwiseSystem, uf: VectorField, vf: VectorField, x,
                            config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``triangledown_u v - triangledown_v u - L_u v`` at ``x``."""
    x = sys.check_point(x)
    return (reduced_derivative(sys, vf, uf(x), x, "ambient", config)
            - reduced_derivative(sys, uf, vf(x), x, "ambient", config)
            - lie_derivative(sys, uf, vf, x, config))


def decomposition_residual(sys: PointwiseSystem, v: VectorField, u, p, sampling="step",
                           config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """``nabla_u v(p) - delta_u v(p) - Delta_u v(p)``, with ``Delta`` on the frozen value ``v(p)``.

    ``sampling="ambient"`` checks ``triangledown = partial + Delta`` instead.
    """
    return (reduced_derivative(sys, v, u, p, sampling, config)
            - plain_derivative(sys, v, u, p, sampling, config)
            - pseudo_derivative(sys, u, v(p), p, config=config))


def mixed_derivative(sys: PointwiseSystem, bilinear: Callable, f, v: VectorField, u, p,
                     sampling="step", config: LimitConfig = DEFAULT_LIMIT) -> np.ndarray:
    """Joint limit ``lim (B(f(p'), P v(p')) - B(f(p), v(p))) / tau``.

    ``f`` is sampled plainly, ``v`` is transported back by
    ``P = p^-1 o (p + (tau u)-bar)``; ``B`` is any bilinear callable.
    """
    p = sys.check_point(p)
    u = as_array(u, sys.dim)
    base = _value(bilinear(f(p), v(p)))

    def q(tau):
        moved = sys.step(p, tau * u)
        at = _sample_point(sys, p, tau * u, sampling)
        transported = sys.unact(p, sys.act(moved, v(at)))
        return (_value(bilinear(f(at), transported)) - base) / tau

    return _limit(q, config, "mixed derivative")


def covector_decomposition_residual(sys: PointwiseSystem, phi: CovectorField, v, u, p,
                                    pairing="plain", config: LimitConfig = DEFAULT_LIMIT) -> float:
    """``|(delta_u phi)(v) - D_u(phi(v)) + phi(Delta_u v)|`` for a constant field ``v``.

    ``pairing="plain"`` takes ``D`` to be the plain derivative of the scalar
    field ``x -> phi(x) @ v``.  On a curved space this residual equals
    ``|phi(p) @ Delta_u v(p)|`` and does not vanish.  ``pairing="mixed"``
    takes ``D`` to be the joint mixed derivative, which transports ``v``; that
    form does vanish.
    """
    p = sys.check_point(p)
    v = as_array(v, sys.dim)
    vfield = VectorField(sys.dim, lambda x: v, "const")
    d_phi = plain_derivative(sys, phi, u, p, config=config)
    if pairing == "plain":
        joint = plain_derivative(sys, phi.pair(vfield), u, p, config=config)
    elif pairing == "mixed":
        joint = float(mixed_derivative(sys, _dot, phi, vfield, u, p, config=config)[0])
    else:
        raise UsageError("pairing must be 'plain' or 'mixed'")
    delta_v = pseudo_derivative(sys, u, v, p, config=config)
    return abs(float(d_phi @ v) - joint + float(phi(p) @ delta_v))


def _dot(x, y):
    return np.array([np.asarray(x) @ np.asarray(y)])


# product rules --------------------------------------------------------------

PRODUCT_RULES = ("pseudo", "coherent", "plain", "mixed", "mixed_corollary", "scalar_vector")


@dataclass(frozen=True)
class ProductRuleResult:
    kind: str
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def residual(self) -> float:
        return float(np.linalg.norm(self.lhs - self.rhs))


def _scalar_times(a, b):
    return np.asarray(a, dtype=float) * np.asarray(b, dtype=float)


def product_rule(kind: str, sys: PointwiseSystem, f, g, u, p,
                 bilinear: BilinearMap | None = None, sampling="step",
                 config: LimitConfig = DEFAULT_LIMIT) -> ProductRuleResult:
    """Evaluate both sides of a product rule, each by its own limits.

    ``pseudo``: ``f``, ``g`` fixed vectors,
    ``Delta_u B(f, g)`` vs ``B(f, Delta_u g) + B(Delta_u f, g)``.
    ``coherent``: vector fields, the same with ``nabla``.
    ``plain``: any fields, the same with ``delta``.
    ``mixed``: covector field ``f``, vector field ``g``, joint mixed derivative
    vs ``B(f, nabla_u g) + B(delta_u f, g)``.
    ``mixed_corollary``: ``delta_u(f(g))`` (plain) vs ``f(nabla_u g) + (delta_u f)(g)``.
    ``scalar_vector``: scalar field ``f``, vector field ``g``, joint mixed
    derivative of ``f g`` vs ``f nabla_u g + (delta_u f) g``.
    """
    if kind not in PRODUCT_RULES:
        raise UsageError(f"unknown product rule {kind!r}; expected one of {PRODUCT_RULES}")
    p = sys.check_point(p)
    u = as_array(u, sys.dim)
    if kind in ("mixed_corollary", "scalar_vector"):
        bilinear = _dot if kind == "mixed_corollary" else _scalar_times
    elif bilinear is None:
        raise UsageError(f"product rule {kind!r} needs a bilinear map")

    def reduced(field):
        return reduced_derivative(sys, field, u, p, sampling, config)

    def plain(field):
        return plain_derivative(sys, field, u, p, sampling, config)

    B = bilinear
    if kind == "pseudo":
        fv, gv = as_array(f, sys.dim), as_array(g, sys.dim)
        base = _value(B(fv, gv))

        def q(tau):
            moved = sys.step(p, tau * u)
            pf = sys.unact(p, sys.act(moved, fv))
            pg = sys.unact(p, sys.act(moved, gv))
            return (_value(B(pf, pg)) - base) / tau

        lhs = _limit(q, config, "pseudo-derivative of product")
        rhs = (_value(B(fv, pseudo_derivative(sys, u, gv, p, config=config)))
               + _value(B(pseudo_derivative(sys, u, fv, p, config=config), gv)))
    elif kind == "coherent":
        base = _value(B(f(p), g(p)))

        def q(tau):
            moved = sys.step(p, tau * u)
            at = _sample_point(sys, p, tau * u, sampling)
            pf = sys.unact(p, sys.act(moved, f(at)))
            pg = sys.unact(p, sys.act(moved, g(at)))
            return (_value(B(pf, pg)) - base) / tau

        lhs = _limit(q, config, "reduced derivative of product")
        rhs = _value(B(f(p), reduced(g))) + _value(B(reduced(f), g(p)))
    elif kind == "plain":
        base = _value(B(f(p), g(p)))

        def q(tau):
            at = _sample_point(sys, p, tau * u, sampling)
            return (_value(B(f(at), g(at))) - base) / tau

        lhs = _limit(q, config, "plain derivative of product")
        rhs = _value(B(f(p), plain(g))) + _value(B(plain(f), g(p)))
    elif kind == "mixed_corollary":
        scalar = ScalarField(lambda x: float(f(x) @ g(x)), "pairing")
        lhs = _value(plain(scalar))
        rhs = _value(B(f(p), reduced(g))) + _value(B(plain(f), g(p)))
    else:
        # mixed and scalar_vector share the joint limit
        lhs = mixed_derivative(sys, B, f, g, u, p, sampling, config)
        rhs = _value(B(f(p), reduced(g))) + _value(B(plain(f), g(p)))
    return ProductRuleResult(kind, lhs, rhs)


def product_rule_residual(kind, sys, f, g, u, p, bilinear=None, sampling="step",
                          config: LimitConfig = DEFAULT_LIMIT) -> float:
    """``|LHS - RHS|`` of :func:`product_rule`."""
    return product_rule(kind, sys, f, g, u, p, bilinear, sampling, config).residual


# connection axioms ----------------------------------------------------------

@dataclass(frozen=True)
class KoszulReport:
    direction_linearity: float
    argument_linearity: float
    leibniz: float
    constant_basis: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def koszul_axiom_residuals(sys: PointwiseSystem, uf: VectorField, uf2: VectorField,
                           vf: VectorField, vf2: VectorField, phi: ScalarField, lam, p,
                           config: LimitConfig = DEFAULT_LIMIT) -> KoszulReport:
    """Residual norms of the three connection axioms for ``nabla`` at ``p``.

    (1) ``nabla_{phi u + u'} v = phi nabla_u v + nabla_{u'} v``;
    (2) ``nabla_u(lam v + v') = lam nabla_u v + nabla_u v'``;
    (3) ``nabla_u(phi v) = phi nabla_u v + (delta_u phi) v``;
    plus ``max_ij |nabla_{e_i} e_j - Delta_{e_i} e_j|`` for constant basis fields.
    """
    p = sys.check_point(p)
    lam = float(lam)
    u0, u1, c = uf(p), uf2(p), phi(p)

    def nab(field, direction):
        return reduced_derivative(sys, field, direction, p, config=config)

    nv_u = nab(vf, u0)
    ax1 = nab(vf, c * u0 + u1) - (c * nv_u + nab(vf, u1))
    ax2 = nab(lam * vf + vf2, u0) - (lam * nv_u + nab(vf2, u0))
    d_phi = plain_derivative(sys, phi, u0, p, config=config)
    ax3 = nab(phi * vf, u0) - (c * nv_u + d_phi * vf(p))
    eye = np.eye(sys.dim)
    basis = 0.0
    for i in range(sys.dim):
        for j in range(sys.dim):
            ej = VectorField(sys.dim, lambda x, e=eye[j]: e, f"e{j}")
            gap = nab(ej, eye[i]) - pseudo_derivative(sys, eye[i], eye[j], p, config=config)
            basis = max(basis, float(np.linalg.norm(gap)))
    return KoszulReport(float(np.linalg.norm(ax1)), float(np.linalg.norm(ax2)),
                        float(np.linalg.norm(ax3)), basis)


def transported_value_sequence(sys: PointwiseSystem, v: VectorField, u, p,
                               taus=(1e-1, 1e-2, 1e-3, 1e-4, 1e-5)) -> np.ndarray:
    """``|p^-1 o (p + (tau u)-bar)(v(p')) - v(p)|`` for decreasing ``tau``; tends to 0."""
    p = sys.check_point(p)
    u = as_array(u, sys.dim)
    v0 = v(p)
    out = []
    for tau in taus:
        moved = sys.step(p, tau * u)
        out.append(float(np.linalg.norm(sys.unact(p, sys.act(moved, v(moved))) - v0)))
    return np.array(out)
