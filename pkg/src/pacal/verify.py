"""Executable identity suites over a single pointwise system.

Each identity is a small function drawing its own seeded inputs, so results do
not depend on execution order or on how many worker threads run the suite.
The report is plain JSON data with no timings, so repeated runs are
byte-identical.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import affine, derivatives as dv, discrete as ds, infinitesimal as inf
from .applications import Metric, _canonical_system, geodesic_residual, geodesic_trace, gradient
from .derivatives import plain_derivative
from .errors import DomainError, LimitError, NumericError, UsageError
from .fields import (BilinearMap, VectorField, random_polynomial_covector,
                     random_polynomial_scalar, random_polynomial_vector)
from .gallery import GallerySpace
from .limits import DEFAULT_LIMIT, LimitConfig

SUITES = ("discrete", "infinitesimal", "derivatives", "applications")


def norm(x) -> float:
    return float(np.linalg.norm(np.atleast_1d(x)))


def relative_residual(a, b, *scale) -> float:
    """``|a - b| / max(1, |a|, |b|, *scale)``."""
    size = max([1.0, norm(a), norm(b)] + [norm(s) for s in scale])
    return norm(np.asarray(a) - np.asarray(b)) / size


@dataclass
class Context:
    space: GallerySpace
    config: LimitConfig
    extra_fields: tuple = ()
    samples: float = 1.0

    @property
    def sys(self):
        return self.space.system

    @property
    def dim(self):
        return self.space.system.dim

    def count(self, base: int) -> int:
        return max(1, int(round(base * self.samples)))


@dataclass
class Identity:
    name: str
    suite: str
    bound: float
    relation: str  # "<=" or ">="
    run: Callable  # (ctx, rng) -> (value, samples, notes)
    applies: Callable = lambda ctx: True


def draw(rng, make, tries=200):
    """Call ``make(rng)`` until it does not raise :class:`DomainError`."""
    for _ in range(tries):
        try:
            return make(rng)
        except DomainError:
            continue
    raise DomainError("could not draw in-domain inputs")


def _point(ctx, rng, shrink=0.5):
    return ctx.sys.domain.sample(rng, shrink)


def _vec(ctx, rng, scale=0.5):
    return rng.uniform(-scale, scale, ctx.dim)


def _worst(values):
    return max(values) if values else 0.0


# discrete -------------------------------------------------------------------

def _exact_affine(ctx, rng):
    worst = 0.0
    n = ctx.count(500)
    for _ in range(n):
        p, q, r, s = (_point(ctx, rng, 1.0) for _ in range(4))
        worst = max(worst, norm(affine.weyl_residual(p, q, r)),
                    norm(affine.four_point_residual(p, q, r, s)),
                    norm(affine.between(affine.translate(p, q), p) - q))
    return worst, n, ""


def _discrete_inputs(ctx, rng, check):
    def make(rng):
        p, u, v, w = _point(ctx, rng), _vec(ctx, rng), _vec(ctx, rng), _vec(ctx, rng, 1.0)
        return p, u, v, w, check(p, u, v, w)
    return draw(rng, make)


def _loop(ctx, rng, base, check):
    vals = [_discrete_inputs(ctx, rng, check)[-1] for _ in range(ctx.count(base))]
    return _worst(vals), len(vals), ""


def _antisymmetry(ctx, rng):
    sys = ctx.sys

    def check(p, u, v, w):
        return max(norm(ds.discrete_torsion(sys, u, v, p) + ds.discrete_torsion(sys, v, u, p)),
                   norm(ds.discrete_riemann(sys, u, v, w, p) + ds.discrete_riemann(sys, v, u, w, p)),
                   norm(ds.discrete_cumulative(sys, u, v, w, p)
                        + ds.discrete_cumulative(sys, v, u, w, p)))
    return _loop(ctx, rng, 200, check)


def _dg(ctx, rng):
    sys = ctx.sys

    def check(p, u, v, w):
        return relative_residual(ds.dissociation2(sys, u, v, w, p),
                                 ds.dissociation2_expanded(sys, u, v, w, p), w)
    return _loop(ctx, rng, 200, check)


def _torsion_bracket(ctx, rng):
    sys = ctx.sys

    def check(p, u, v, w):
        return relative_residual(sys.act(p, ds.discrete_torsion(sys, u, v, p)),
                                 ds.displacement_bracket(sys, u, v, p),
                                 ds.displacement(sys, u, v, p))
    return _loop(ctx, rng, 200, check)


def _riemann_bracket(ctx, rng):
    sys = ctx.sys

    def check(p, u, v, w):
        lhs = ds.discrete_riemann(sys, u, v, w, p, vec=True)
        rhs = ds.displacement2_bracket(sys, u, v, w, p) - ds.displacement_bracket(sys, u, v, p)
        return relative_residual(lhs, rhs, ds.displacement2(sys, u, v, w, p))
    return _loop(ctx, rng, 200, check)


def _cumulative_bracket(ctx, rng):
    sys = ctx.sys

    def check(p, u, v, w):
        return relative_residual(sys.act(p, ds.discrete_cumulative(sys, u, v, w, p)),
                                 ds.displacement2_bracket(sys, u, v, w, p),
                                 ds.displacement2(sys, u, v, w, p))
    return _loop(ctx, rng, 200, check)


def _riemann_forms(ctx, rng):
    sys = ctx.sys

    def check(p, u, v, w):
        return relative_residual(ds.discrete_riemann(sys, u, v, w, p, form="D"),
                                 ds.discrete_riemann(sys, u, v, w, p, form="G"), w)
    return _loop(ctx, rng, 200, check)


def _discrete_linearity(ctx, rng):
    sys = ctx.sys

    def check(p, u, v, w):
        a, b = rng.uniform(-2, 2, 2)
        combo = a * v + b * w
        worst = 0.0
        for op in (ds.deviation, ds.dissociation):
            lhs = op(sys, u, combo, p)
            rhs = a * op(sys, u, v, p) + b * op(sys, u, w, p)
            worst = max(worst, relative_residual(lhs, rhs, a * v, b * w))
        for op in (ds.deviation2, ds.dissociation2):
            lhs = op(sys, u, v, combo, p)
            rhs = a * op(sys, u, v, v, p) + b * op(sys, u, v, w, p)
            worst = max(worst, relative_residual(lhs, rhs, a * v, b * w))
        return worst
    return _loop(ctx, rng, 100, check)


def _flatness_consistency(ctx, rng):
    sys = ctx.sys

    def check(p, u, v, w):
        return norm(ds.dissociation(sys, u, v, p) - sys.flatness_residual(p, u, v))
    return _loop(ctx, rng, 100, check)


# infinitesimal --------------------------------------------------------------

def _interior_inputs(ctx, rng):
    return _point(ctx, rng, 0.5), _vec(ctx, rng, 1.0), _vec(ctx, rng, 1.0), _vec(ctx, rng, 1.0)


def _probe(ctx, rng):
    worst, notes = 0.0, []
    n = ctx.count(3)
    for k in range(n):
        p = _point(ctx, rng, 0.5)
        rep = inf.differentiability_probe(ctx.sys, p, trials=2, seed=int(rng.integers(2**31)),
                                          config=ctx.config)
        worst = max(worst, rep.additivity, rep.homogeneity, rep.two_sided_gap)
        if not all(rep.converged):
            worst = math.inf
        if not rep.differentiable:
            notes.extend(f"point {k}: {msg}" for msg in rep.failures[:3])
    return worst, n, "; ".join(notes)


def _probe_at_kink(ctx, rng):
    center = float(ctx.sys.frame.params.get("center", 0.0))
    p = np.zeros(ctx.dim)
    p[0] = center
    rep = inf.differentiability_probe(ctx.sys, p, trials=2, seed=int(rng.integers(2**31)),
                                      config=ctx.config)
    worst = max(rep.additivity, rep.homogeneity, rep.two_sided_gap)
    return worst, 1, "; ".join(rep.failures[:3])


def _analytic_vs_numeric(ctx, rng):
    vals = []
    for _ in range(ctx.count(20)):
        p, u, v, _w = _interior_inputs(ctx, rng)
        a = inf.pseudo_derivative(ctx.sys, u, v, p, "analytic")
        b = inf.pseudo_derivative(ctx.sys, u, v, p, config=ctx.config)
        vals.append(norm(a - b))
    return _worst(vals), len(vals), ""


def _oracle(which):
    def run(ctx, rng):
        vals = []
        orc = ctx.space.oracle
        for _ in range(ctx.count(10)):
            p, u, v, w = _interior_inputs(ctx, rng)
            if which == "gamma":
                vals.append(norm(inf.gamma_matrix(ctx.sys, u, p, config=ctx.config) - orc.gamma(p, u)))
            elif which == "torsion":
                vals.append(norm(inf.torsion(ctx.sys, u, v, p, config=ctx.config)
                                 - orc.torsion(p, u, v)))
            else:
                vals.append(norm(inf.riemann(ctx.sys, u, v, w, p, config=ctx.config)
                                 - orc.riemann(p, u, v, w)))
        return _worst(vals), len(vals), ""
    return run


def _reconstruction(ctx, rng):
    vals = []
    for _ in range(ctx.count(4)):
        p = _point(ctx, rng, 0.5)
        cmap = inf.connection_map(ctx.sys, p, config=ctx.config)
        for _ in range(5):
            u, v = _vec(ctx, rng, 1.0), _vec(ctx, rng, 1.0)
            direct = inf.pseudo_derivative(ctx.sys, u, v, p, config=ctx.config)
            vals.append(norm(cmap.apply(u, v) - direct))
    return _worst(vals), len(vals), ""


def _second_order(ctx, rng):
    vals = []
    for _ in range(ctx.count(4)):
        p, u, v, w = _interior_inputs(ctx, rng)
        cmap = inf.connection_map(ctx.sys, p, config=ctx.config)
        gu, gv = cmap.matrix_of(u), cmap.matrix_of(v)
        vals.append(norm(inf.second_pseudo(ctx.sys, u, v, w, p, config=ctx.config) - gu @ gv @ w))
        vals.append(norm(inf.riemann(ctx.sys, u, v, w, p, config=ctx.config) - cmap.riemann(u, v, w)))
    return _worst(vals), len(vals), ""


def _multilinearity(ctx, rng):
    sys, cfg = ctx.sys, ctx.config
    vals = []
    for _ in range(ctx.count(4)):
        p, u, v, w = _interior_inputs(ctx, rng)
        u2 = _vec(ctx, rng, 1.0)
        a, b = rng.uniform(-1.5, 1.5, 2)
        combo = a * u + b * u2

        def rel(lhs, x, y):
            return relative_residual(lhs, a * x + b * y, a * x, b * y)

        vals.append(rel(inf.pseudo_derivative(sys, combo, v, p, config=cfg),
                        inf.pseudo_derivative(sys, u, v, p, config=cfg),
                        inf.pseudo_derivative(sys, u2, v, p, config=cfg)))
        vals.append(rel(inf.pseudo_derivative(sys, v, combo, p, config=cfg),
                        inf.pseudo_derivative(sys, v, u, p, config=cfg),
                        inf.pseudo_derivative(sys, v, u2, p, config=cfg)))
        vals.append(rel(inf.torsion(sys, combo, v, p, config=cfg),
                        inf.torsion(sys, u, v, p, config=cfg),
                        inf.torsion(sys, u2, v, p, config=cfg)))
        vals.append(rel(inf.riemann(sys, combo, v, w, p, config=cfg),
                        inf.riemann(sys, u, v, w, p, config=cfg),
                        inf.riemann(sys, u2, v, w, p, config=cfg)))
    return _worst(vals), len(vals), ""


def _infinitesimal_antisymmetry(ctx, rng):
    sys, cfg = ctx.sys, ctx.config
    vals = []
    for _ in range(ctx.count(3)):
        p, u, v, w = _interior_inputs(ctx, rng)
        vals.append(norm(inf.torsion(sys, u, v, p, config=cfg) + inf.torsion(sys, v, u, p, config=cfg)))
        vals.append(norm(inf.riemann(sys, u, v, w, p, config=cfg)
                         + inf.riemann(sys, v, u, w, p, config=cfg)))
        vals.append(norm(inf.cumulative(sys, u, v, w, p, config=cfg)
                         + inf.cumulative(sys, v, u, w, p, config=cfg)))
    return _worst(vals), len(vals), ""


def _quotient_order(ctx, rng):
    orders = []
    for _ in range(ctx.count(5)):
        p, u, v, _w = _interior_inputs(ctx, rng)
        ref = inf.pseudo_derivative(ctx.sys, u, v, p, "analytic")
        orders.append(inf.quotient_order(ctx.sys, u, v, p, ref))
    return min(orders), len(orders), ""


def _scaled_bridge(ctx, rng):
    vals = []
    for _ in range(ctx.count(5)):
        p, u, v, w = _point(ctx, rng, 0.5), _vec(ctx, rng, 0.5), _vec(ctx, rng, 0.5), _vec(ctx, rng, 1.0)
        limit = inf.scaled_bridge_limit(ctx.sys, u, v, w, p)
        vals.append(norm(limit - inf.riemann(ctx.sys, u, v, w, p, config=ctx.config)))
    return _worst(vals), len(vals), ""


# derivatives ----------------------------------------------------------------

def _vector_fields(ctx, rng):
    fields = [random_polynomial_vector(ctx.dim, rng)]
    fields.extend(f for f in ctx.extra_fields if isinstance(f, VectorField) and f.dim == ctx.dim)
    return fields


def _decomposition(sampling):
    def run(ctx, rng):
        vals = []
        for _ in range(ctx.count(5)):
            p, u = _point(ctx, rng, 0.3), _vec(ctx, rng, 1.0)
            for v in _vector_fields(ctx, rng):
                vals.append(norm(dv.decomposition_residual(ctx.sys, v, u, p, sampling, ctx.config)))
        return _worst(vals), len(vals), ""
    return run


def _covector_decomposition(pairing):
    def run(ctx, rng):
        vals = []
        for _ in range(ctx.count(5)):
            p, u, v = _point(ctx, rng, 0.3), _vec(ctx, rng, 1.0), _vec(ctx, rng, 1.0)
            phi = random_polynomial_covector(ctx.dim, rng)
            vals.append(dv.covector_decomposition_residual(ctx.sys, phi, v, u, p, pairing, ctx.config))
        return _worst(vals), len(vals), ""
    return run


def _bilinear_for(ctx, kind, rng):
    n = ctx.dim
    if kind == "pseudo":
        choice = ["inner", "tensor", "geometric"] + (["cross"] if n == 3 else [])
    elif kind == "coherent":
        choice = ["inner", "exterior", "tensor"] + (["cross"] if n == 3 else [])
    elif kind == "plain":
        choice = ["inner", "tensor", "geometric", "exterior"]
    else:
        choice = ["pairing"]
    return BilinearMap(choice[int(rng.integers(len(choice)))], n)


def _product_rule(kind):
    def run(ctx, rng):
        vals = []
        n = ctx.dim
        for _ in range(ctx.count(5)):
            p, u = _point(ctx, rng, 0.3), _vec(ctx, rng, 1.0)
            bil = _bilinear_for(ctx, kind, rng)
            if kind == "pseudo":
                f, g = _vec(ctx, rng, 1.0), _vec(ctx, rng, 1.0)
            elif kind in ("coherent", "plain"):
                f, g = random_polynomial_vector(n, rng), random_polynomial_vector(n, rng)
            elif kind in ("mixed", "mixed_corollary"):
                f, g = random_polynomial_covector(n, rng), random_polynomial_vector(n, rng)
            else:
                f, g = random_polynomial_scalar(n, rng), random_polynomial_vector(n, rng)
            vals.append(dv.product_rule_residual(kind, ctx.sys, f, g, u, p, bil, config=ctx.config))
        return _worst(vals), len(vals), ""
    return run


def _torsion_fields(ctx, rng):
    vals = []
    for _ in range(ctx.count(5)):
        x = _point(ctx, rng, 0.3)
        uf, vf = random_polynomial_vector(ctx.dim, rng), random_polynomial_vector(ctx.dim, rng)
        lhs = dv.torsion_via_derivatives(ctx.sys, uf, vf, x, ctx.config)
        vals.append(norm(lhs - inf.torsion(ctx.sys, uf(x), vf(x), x, config=ctx.config)))
    return _worst(vals), len(vals), ""


def _torsion_extension(ctx, rng):
    vals = []
    for _ in range(ctx.count(5)):
        x = _point(ctx, rng, 0.3)
        uf, vf = random_polynomial_vector(ctx.dim, rng), random_polynomial_vector(ctx.dim, rng)
        du, dvv = random_polynomial_vector(ctx.dim, rng), random_polynomial_vector(ctx.dim, rng)
        # second extensions agree with the first at x only
        u2 = VectorField(ctx.dim, lambda y, a=uf, b=du: a(y) + b(y) - b(x))
        v2 = VectorField(ctx.dim, lambda y, a=vf, b=dvv: a(y) + b(y) - b(x))
        t1 = dv.torsion_via_derivatives(ctx.sys, uf, vf, x, ctx.config)
        t2 = dv.torsion_via_derivatives(ctx.sys, u2, v2, x, ctx.config)
        vals.append(norm(t1 - t2))
    return _worst(vals), len(vals), ""


def _koszul(which):
    def run(ctx, rng):
        vals = []
        n = ctx.dim
        for _ in range(ctx.count(3)):
            p = _point(ctx, rng, 0.3)
            fields = [random_polynomial_vector(n, rng) for _ in range(4)]
            rep = dv.koszul_axiom_residuals(ctx.sys, *fields, random_polynomial_scalar(n, rng),
                                            float(rng.uniform(-2, 2)), p, ctx.config)
            vals.append(getattr(rep, which))
        return _worst(vals), len(vals), ""
    return run


def _generic_linearity(ctx, rng):
    sys, cfg, n = ctx.sys, ctx.config, ctx.dim
    vals = []
    for _ in range(ctx.count(3)):
        p, u, u2 = _point(ctx, rng, 0.3), _vec(ctx, rng, 1.0), _vec(ctx, rng, 1.0)
        v, v2 = random_polynomial_vector(n, rng), random_polynomial_vector(n, rng)
        a = float(rng.uniform(-1.5, 1.5))
        for op in (lambda f, d: dv.reduced_derivative(sys, f, d, p, "step", cfg),
                   lambda f, d: dv.reduced_derivative(sys, f, d, p, "ambient", cfg),
                   lambda f, d: plain_derivative(sys, f, d, p, "step", cfg),
                   lambda f, d: plain_derivative(sys, f, d, p, "ambient", cfg)):
            x, y = op(v, u), op(v, u2)
            vals.append(relative_residual(op(v, a * u + u2), a * x + y, a * x, y))
            x, y = op(v, u), op(v2, u)
            vals.append(relative_residual(op(a * v + v2, u), a * x + y, a * x, y))
    return _worst(vals), len(vals), ""


def _transport_limit(ctx, rng):
    vals = []
    for _ in range(ctx.count(5)):
        p, u = _point(ctx, rng, 0.3), _vec(ctx, rng, 1.0)
        v = random_polynomial_vector(ctx.dim, rng)
        seq = dv.transported_value_sequence(ctx.sys, v, u, p)
        vals.append(seq[-1] / (1.0 + norm(v(p))))
    return _worst(vals), len(vals), ""


# applications ---------------------------------------------------------------

def _random_metric(ctx, rng):
    n = ctx.dim
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    eig = rng.uniform(0.5, 2.0, n) * rng.choice([-1.0, 1.0], n)
    g = q @ np.diag(eig) @ q.T
    return Metric(0.5 * (g + g.T))


def _gradient_identity(ctx, rng):
    vals = []
    for _ in range(ctx.count(5)):
        x = _point(ctx, rng, 0.3)
        phi = random_polynomial_scalar(ctx.dim, rng)
        g = _random_metric(ctx, rng)
        grad = gradient(phi, g, x, config=ctx.config)
        canon = _canonical_system(x, ctx.dim)
        for _ in range(10):
            u = _vec(ctx, rng, 1.0)
            vals.append(abs(g.inner(grad, u) - plain_derivative(canon, phi, u, x, "ambient", ctx.config)))
    return _worst(vals), len(vals), ""


def _gradient_paths(ctx, rng):
    vals = []
    for _ in range(ctx.count(5)):
        x = _point(ctx, rng, 0.3)
        phi = random_polynomial_scalar(ctx.dim, rng)
        g = _random_metric(ctx, rng)
        a = gradient(phi, g, x, method="solve", config=ctx.config)
        b = gradient(phi, g, x, method="normal", config=ctx.config)
        vals.append(relative_residual(a, b))
    return _worst(vals), len(vals), ""


def _geodesic_trace_residual(ctx, rng):
    vals = []
    for _ in range(ctx.count(2)):
        def make(rng):
            p0, v = _point(ctx, rng, 0.3), _vec(ctx, rng, 0.4)
            tr = geodesic_trace(ctx.sys, p0, v, 1.0, 1000)
            return geodesic_residual(ctx.sys, tr) / (1.0 + norm(v))
        vals.append(draw(rng, make))
    return _worst(vals), len(vals), ""


def _rk4_order(ctx, rng):
    orders = []
    for _ in range(ctx.count(1)):
        def make(rng):
            p0, v = _point(ctx, rng, 0.3), _vec(ctx, rng, 0.4)
            ends = [geodesic_trace(ctx.sys, p0, v, 1.0, n).endpoint for n in (40, 80, 160, 320)]
            errs = [norm(ends[k] - ends[k + 1]) for k in range(3)]
            if min(errs) < 1e-13:
                return math.inf
            return float(-np.polyfit(np.log([40, 80, 160]), np.log(errs), 1)[0])
        orders.append(draw(rng, make))
    return min(orders), len(orders), "self-convergence at steps 40..320"


def _has_derivative(ctx):
    return ctx.sys.frame.derivative is not None


def _has_oracle(ctx):
    return ctx.space.oracle is not None


def _is_kinked(ctx):
    return ctx.sys.frame.name == "kinked"


def identities() -> list[Identity]:
    return [
        Identity("affine_exact_identities", "discrete", 0.0, "<=", _exact_affine),
        Identity("discrete_antisymmetry_TRC", "discrete", 0.0, "<=", _antisymmetry),
        Identity("dissociation2_expansion", "discrete", 1e-12, "<=", _dg),
        Identity("torsion_displacement_bracket", "discrete", 1e-12, "<=", _torsion_bracket),
        Identity("riemann_displacement2_bracket", "discrete", 1e-12, "<=", _riemann_bracket),
        Identity("cumulative_displacement2_bracket", "discrete", 1e-12, "<=", _cumulative_bracket),
        Identity("riemann_D_form_vs_G_form", "discrete", 1e-12, "<=", _riemann_forms),
        Identity("discrete_trailing_linearity", "discrete", 1e-12, "<=", _discrete_linearity),
        Identity("dissociation_is_flatness_residual", "discrete", 0.0, "<=", _flatness_consistency),
        Identity("differentiability_probe", "infinitesimal", 1e-8, "<=", _probe),
        Identity("differentiability_probe_at_kink", "infinitesimal", 1e-8, "<=", _probe_at_kink,
                 _is_kinked),
        Identity("pseudo_derivative_analytic_vs_numeric", "infinitesimal", 1e-8, "<=",
                 _analytic_vs_numeric, _has_derivative),
        Identity("oracle_connection_matrix", "infinitesimal", 1e-8, "<=", _oracle("gamma"), _has_oracle),
        Identity("oracle_torsion", "infinitesimal", 1e-8, "<=", _oracle("torsion"), _has_oracle),
        Identity("oracle_riemann", "infinitesimal", 1e-6, "<=", _oracle("riemann"), _has_oracle),
        Identity("connection_reconstruction", "infinitesimal", 1e-10, "<=", _reconstruction),
        Identity("second_pseudo_and_riemann_vs_connection", "infinitesimal", 1e-8, "<=",
                 _second_order),
        Identity("multilinearity_delta_T_R", "infinitesimal", 1e-10, "<=", _multilinearity),
        Identity("infinitesimal_antisymmetry_TRC", "infinitesimal", 0.0, "<=",
                 _infinitesimal_antisymmetry),
        Identity("raw_quotient_order", "infinitesimal", 0.9, ">=", _quotient_order, _has_derivative),
        Identity("scaled_discrete_bridge_limit", "infinitesimal", 1e-5, "<=", _scaled_bridge),
        Identity("decomposition_reduced", "derivatives", 1e-7, "<=", _decomposition("step")),
        Identity("decomposition_canonical_sampling", "derivatives", 1e-7, "<=", _decomposition("ambient")),
        Identity("covector_decomposition_plain", "derivatives", 1e-7, "<=", _covector_decomposition("plain")),
        Identity("covector_decomposition_mixed", "derivatives", 1e-7, "<=", _covector_decomposition("mixed")),
        *[Identity(f"product_rule_{k}", "derivatives", 1e-6, "<=", _product_rule(k))
          for k in dv.PRODUCT_RULES],
        Identity("torsion_via_derivatives", "derivatives", 1e-7, "<=", _torsion_fields),
        Identity("torsion_extension_independence", "derivatives", 1e-6, "<=", _torsion_extension),
        Identity("koszul_direction_linearity", "derivatives", 1e-7, "<=", _koszul("direction_linearity")),
        Identity("koszul_argument_linearity", "derivatives", 1e-7, "<=", _koszul("argument_linearity")),
        Identity("koszul_leibniz", "derivatives", 1e-7, "<=", _koszul("leibniz")),
        Identity("koszul_constant_basis", "derivatives", 1e-8, "<=", _koszul("constant_basis")),
        Identity("generic_derivative_linearity", "derivatives", 1e-9, "<=", _generic_linearity),
        Identity("transported_value_limit", "derivatives", 1e-3, "<=", _transport_limit),
        Identity("gradient_defining_identity", "applications", 1e-7, "<=", _gradient_identity),
        Identity("gradient_solve_vs_normal_equations", "applications", 1e-9, "<=", _gradient_paths),
        Identity("geodesic_body_velocity_residual", "applications", 1e-5, "<=", _geodesic_trace_residual),
        Identity("rk4_self_convergence_order", "applications", 3.7, ">=", _rk4_order),
    ]


def _json_number(x: float):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return float(x)


def _run_one(index: int, ident: Identity, ctx: Context, seed: int) -> dict:
    rng = np.random.default_rng([seed, index])
    entry = {"name": ident.name, "suite": ident.suite, "relation": ident.relation,
             "bound": ident.bound}
    try:
        value, samples, notes = ident.run(ctx, rng)
        value = float(value)
        ok = value <= ident.bound if ident.relation == "<=" else value >= ident.bound
        entry.update(value=_json_number(value), samples=samples, passed=bool(ok), notes=notes)
    except (LimitError, DomainError, NumericError, UsageError) as exc:
        entry.update(value=None, samples=0, passed=False,
                     notes=f"{type(exc).__name__}: {exc}")
    return entry


def run_suite(space: GallerySpace, suite="all", seed=0, config: LimitConfig = DEFAULT_LIMIT,
              threads=1, extra_fields=(), samples=1.0) -> dict:
    """Run the selected identities and return a JSON-ready report."""
    if suite != "all" and suite not in SUITES:
        raise UsageError(f"suite must be 'all' or one of {SUITES}")
    ctx = Context(space, config, tuple(extra_fields), samples)
    chosen = [(i, ident) for i, ident in enumerate(identities())
              if (suite == "all" or ident.suite == suite) and ident.applies(ctx)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_one, i, ident, ctx, seed) for i, ident in chosen]
            results = [f.result() for f in futures]
    else:
        results = [_run_one(i, ident, ctx, seed) for i, ident in chosen]
    passed = sum(r["passed"] for r in results)
    spec = space.spec
    return {
        "space": {"kind": spec.kind, "dim": spec.dim, "params": space.system.frame.params,
                  "domain": {"min": space.system.domain.min.tolist(),
                             "max": space.system.domain.max.tolist()}},
        "suite": suite,
        "seed": seed,
        "limit": {"h0": config.h0, "levels": config.levels, "tol": config.tol,
                  "ratio": config.ratio},
        "identities": results,
        "summary": {"total": len(results), "passed": passed, "failed": len(results) - passed},
    }
