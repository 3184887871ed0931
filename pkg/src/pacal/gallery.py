"""Canonical example spaces with closed-form frame derivatives and oracles.

Each builder returns a :class:`GallerySpace`: the pointwise system together
with hand-derived formulas for the connection matrix ``Gamma(u)`` (so that
``Delta_u v(p) = Gamma(u) @ v``), torsion and Riemann curvature, where those
exist in closed form.  The oracles are derived independently of the numeric
limit machinery and serve as ground truth in the test suite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm

from .errors import UsageError
from .space import BoxDomain, FrameField, PointwiseSystem

KINDS = ("flat", "rotation2d", "scaling", "mixed_exp2d", "polynomial", "kinked")

J = np.array([[0.0, -1.0], [1.0, 0.0]])
J.setflags(write=False)

# near-singular frames on the pre-scan grid are rejected above this condition number
MAX_CONDITION = 1e10


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class GallerySpec:
    """Declarative description of a gallery space (the CLI ``space`` record)."""

    kind: str
    dim: int = 2
    params: dict = field(default_factory=dict)
    domain: Optional[tuple] = None
    seed: int = 0


@dataclass(frozen=True)
class Oracle:
    """Closed-form ``Gamma(p, u)``; torsion and Riemann follow algebraically."""

    gamma: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def pseudo_derivative(self, p, u, v):
        return self.gamma(p, u) @ np.asarray(v, dtype=float)

    def torsion(self, p, u, v):
        return self.gamma(p, u) @ v - self.gamma(p, v) @ u

    def riemann(self, p, u, v, w):
        gu, gv = self.gamma(p, u), self.gamma(p, v)
        return (gu @ gv - gv @ gu) @ np.asarray(w, dtype=float)


@dataclass(frozen=True)
class GallerySpace:
    spec: GallerySpec
    system: PointwiseSystem
    oracle: Optional[Oracle]

    @property
    def name(self) -> str:
        return self.system.frame.name


def _vector_param(params, key, default, dim):
    value = np.array(params.get(key, default), dtype=float)
    if value.shape != (dim,):
        raise UsageError(f"parameter {key!r} must have length {dim}")
    return value


def _matrix_param(params, key, default):
    value = np.array(params.get(key, default), dtype=float)
    if value.shape != (2, 2):
        raise UsageError(f"parameter {key!r} must be a 2x2 matrix")
    return value


def _check_params(kind, params, allowed):
    extra = set(params) - set(allowed)
    if extra:
        raise UsageError(f"unknown parameters for {kind}: {sorted(extra)}")


def _flat(spec):
    _check_params("flat", spec.params, ())
    n = spec.dim
    eye = np.eye(n)
    zero = np.zeros((n, n))
    eye.setflags(write=False)
    zero.setflags(write=False)
    frame = FrameField(n, lambda p: eye, lambda p, w: zero, name="flat")
    return frame, Oracle(lambda p, u: np.zeros((n, n)))


def _rotation2d(spec):
    _check_params("rotation2d", spec.params, ("omega",))
    if spec.dim != 2:
        raise UsageError("rotation2d requires dim = 2")
    omega = _vector_param(spec.params, "omega", [1.0, 0.0], 2)

    def evaluate(p):
        return rotation(float(omega @ p))

    def derivative(p, w):
        return float(omega @ w) * (J @ rotation(float(omega @ p)))

    def gamma(p, u):
        return float(omega @ (evaluate(p) @ u)) * J

    frame = FrameField(2, evaluate, derivative, "rotation2d", {"omega": omega.tolist()})
    return frame, Oracle(gamma)


def _scaling(spec):
    _check_params("scaling", spec.params, ("lam",))
    n = spec.dim
    default = np.zeros(n)
    default[0] = 1.0
    lam = _vector_param(spec.params, "lam", default, n)
    eye = np.eye(n)

    def evaluate(p):
        return math.exp(float(lam @ p)) * eye

    def derivative(p, w):
        return float(lam @ w) * math.exp(float(lam @ p)) * eye

    def gamma(p, u):
        return float(lam @ (evaluate(p) @ u)) * eye

    frame = FrameField(n, evaluate, derivative, "scaling", {"lam": lam.tolist()})
    return frame, Oracle(gamma)


def _exp_factory(gen: np.ndarray) -> Callable[[float], np.ndarray]:
    """``t -> exp(t * gen)``, closed form for rotation generators and diagonals."""
    a, b = gen[0, 1], gen[1, 0]
    if gen[0, 0] == 0 and gen[1, 1] == 0 and a == -b:
        return lambda t: rotation(t * b)
    if a == 0 and b == 0:
        d0, d1 = gen[0, 0], gen[1, 1]
        return lambda t: np.array([[math.exp(t * d0), 0.0], [0.0, math.exp(t * d1)]])
    return lambda t: expm(t * gen)


def _mixed_exp2d(spec):
    _check_params("mixed_exp2d", spec.params, ("X", "Y"))
    if spec.dim != 2:
        raise UsageError("mixed_exp2d requires dim = 2")
    x_gen = _matrix_param(spec.params, "X", J)
    y_gen = _matrix_param(spec.params, "Y", [[1.0, 0.0], [0.0, -1.0]])
    exp_x = _exp_factory(x_gen)
    exp_y = _exp_factory(y_gen)

    def evaluate(p):
        return exp_x(p[0]) @ exp_y(p[1])

    def derivative(p, w):
        e1, e2 = exp_x(p[0]), exp_y(p[1])
        return w[0] * (x_gen @ e1 @ e2) + w[1] * (e1 @ y_gen @ e2)

    def gamma(p, u):
        # F^-1 dF[Fu] = a * E2^-1 X E2 + b * Y with (a, b) = F u
        a, b = evaluate(p) @ u
        e2 = exp_y(p[1])
        e2_inv = exp_y(-p[1])
        return a * (e2_inv @ x_gen @ e2) + b * y_gen

    params = {"X": x_gen.tolist(), "Y": y_gen.tolist()}
    frame = FrameField(2, evaluate, derivative, "mixed_exp2d", params)
    return frame, Oracle(gamma)


def monomial_exponents(dim: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples with total degree in ``1..degree``, graded lexicographic."""
    out = []
    for total in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(dim), total):
            alpha = [0] * dim
            for i in combo:
                alpha[i] += 1
            out.append(tuple(alpha))
    return out


def _polynomial(spec):
    _check_params("polynomial", spec.params, ("degree", "scale"))
    n = spec.dim
    degree = int(spec.params.get("degree", 2))
    scale = float(spec.params.get("scale", 0.1))
    if degree < 1:
        raise UsageError("polynomial degree must be >= 1")
    if not 0.0 <= scale <= 0.1:
        raise UsageError("polynomial scale must lie in [0, 0.1]")
    exps = np.array(monomial_exponents(n, degree), dtype=int)
    rng = np.random.default_rng(spec.seed)
    # each monomial contributes at most `scale` to any row sum on the unit box
    coeffs = rng.uniform(-1.0, 1.0, (len(exps), n, n)) * (scale / n)
    eye = np.eye(n)

    def evaluate(p):
        mono = np.prod(p ** exps, axis=1)
        return eye + np.tensordot(mono, coeffs, axes=1)

    def derivative(p, w):
        # d/dw of p^alpha = sum_i alpha_i w_i p^(alpha - e_i)
        grads = np.zeros(len(exps))
        for i in range(n):
            if w[i] == 0:
                continue
            reduced = exps.copy()
            reduced[:, i] -= 1
            mask = exps[:, i] > 0
            grads[mask] += exps[mask, i] * w[i] * np.prod(p ** reduced[mask], axis=1)
        return np.tensordot(grads, coeffs, axes=1)

    params = {"degree": degree, "scale": scale, "seed": spec.seed}
    frame = FrameField(n, evaluate, derivative, "polynomial", params)
    return frame, None


def _kinked(spec):
    _check_params("kinked", spec.params, ("center",))
    n = spec.dim
    c = float(spec.params.get("center", 0.0))
    eye = np.eye(n)

    def evaluate(p):
        return (1.0 + abs(p[0] - c)) * eye

    # deliberately no analytic derivative: the frame is not differentiable at p0 = c
    frame = FrameField(n, evaluate, None, "kinked", {"center": c})
    return frame, None


_BUILDERS = {
    "flat": _flat,
    "rotation2d": _rotation2d,
    "scaling": _scaling,
    "mixed_exp2d": _mixed_exp2d,
    "polynomial": _polynomial,
    "kinked": _kinked,
}


def default_domain(kind: str, dim: int) -> BoxDomain:
    half = 1.0 if kind == "polynomial" else 4.0
    return BoxDomain.cube(dim, half)


def prescan(system: PointwiseSystem, per_axis: int = 5) -> float:
    """Worst condition number of ``F`` on a coarse grid; raises on near-singularity."""
    dom = system.domain
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(dom.min, dom.max)]
    worst = 1.0
    for pt in itertools.product(*axes):
        m = np.asarray(system.frame(np.array(pt)), dtype=float)
        cond = float(np.linalg.cond(m)) if np.all(np.isfinite(m)) else math.inf
        if not cond <= MAX_CONDITION:
            raise UsageError(f"frame is near-singular at {list(pt)} (condition {cond:.3g})")
        worst = max(worst, cond)
    return worst


def build(spec: GallerySpec) -> GallerySpace:
    """Construct the gallery space described by ``spec``."""
    if spec.kind not in _BUILDERS:
        raise UsageError(f"unknown space kind {spec.kind!r}; expected one of {KINDS}")
    if spec.dim < 1:
        raise UsageError("dim must be >= 1")
    frame, oracle = _BUILDERS[spec.kind](spec)
    if spec.domain is None:
        domain = default_domain(spec.kind, spec.dim)
    elif isinstance(spec.domain, BoxDomain):
        domain = spec.domain
    else:
        lo, hi = spec.domain
        domain = BoxDomain(np.array(lo, dtype=float), np.array(hi, dtype=float))
    if domain.dim != spec.dim:
        raise UsageError(f"domain has dimension {domain.dim}, space has {spec.dim}")
    system = PointwiseSystem(domain, frame)
    prescan(system, per_axis=5 if spec.dim <= 4 else 2)
    return GallerySpace(spec, system, oracle)


def make(kind: str, dim: int = 2, seed: int = 0, domain=None, **params) -> GallerySpace:
    """Convenience wrapper: ``make("rotation2d", omega=[1, 0])``."""
    return build(GallerySpec(kind, dim, params, domain, seed))


def standard_spaces() -> list[GallerySpace]:
    """The smooth reference spaces exercised by the verification suites."""
    return [
        make("flat", 2),
        make("flat", 3),
        make("rotation2d", omega=[1.0, 0.0]),
        make("rotation2d", omega=[0.7, -0.4]),
        make("scaling", 2, lam=[1.0, 0.0]),
        make("scaling", 3, lam=[0.3, -0.2, 0.5]),
        make("mixed_exp2d"),
        make("polynomial", 2, seed=7),
        make("polynomial", 3, seed=11, degree=3),
    ]
