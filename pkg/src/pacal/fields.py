"""Field handles on a chart and bilinear maps between their values.

Handles are immutable wrappers around pure callables.  Scalar fields return
floats, vector and covector fields return ``(n,)`` arrays, point fields return
points of some target chart.  A covector acts on a vector by the dot pairing.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .affine import as_array
from .errors import NumericError, UsageError


@dataclass(frozen=True)
class ScalarField:
    evaluate: Callable[[np.ndarray], float]
    name: str = "phi"

    def __call__(self, p) -> float:
        return float(self.evaluate(np.asarray(p, dtype=float)))

    def __add__(self, other):
        other = as_scalar_field(other)
        return ScalarField(lambda p: self(p) + other(p), f"({self.name}+{other.name})")

    def __mul__(self, other):
        if isinstance(other, VectorField):
            return other.__rmul__(self)
        other = as_scalar_field(other)
        return ScalarField(lambda p: self(p) * other(p), f"({self.name}*{other.name})")

    __radd__ = __add__
    __rmul__ = __mul__


def as_scalar_field(x) -> ScalarField:
    if isinstance(x, ScalarField):
        return x
    c = float(x)
    return ScalarField(lambda p: c, repr(c))


@dataclass(frozen=True)
class VectorField:
    """Field with values in the ground space V."""

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    name: str = "v"

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.evaluate(np.asarray(p, dtype=float)), dtype=float)

    def _like(self, fn, name):
        return type(self)(self.dim, fn, name)

    def __add__(self, other):
        if not isinstance(other, VectorField) or other.dim != self.dim:
            raise UsageError("can only add fields of the same kind and dimension")
        return self._like(lambda p: self(p) + other(p), f"({self.name}+{other.name})")

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, k):
        """``k * field`` for a real ``k`` or a scalar field ``k``."""
        if isinstance(k, ScalarField):
            return self._like(lambda p: k(p) * self(p), f"({k.name}*{self.name})")
        c = float(k)
        return self._like(lambda p: c * self(p), f"({c!r}*{self.name})")

    def __neg__(self):
        return (-1.0) * self


class CovectorField(VectorField):
    """Field with values in the dual space V*, paired with vectors by dot product."""

    def pair(self, vfield: VectorField) -> ScalarField:
        """The scalar field ``x -> phi(x)(v(x))``."""
        return ScalarField(lambda p: float(self(p) @ vfield(p)), f"{self.name}({vfield.name})")


@dataclass(frozen=True)
class PointField:
    """Map from the source chart into a target chart (a system with a domain)."""

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    target: Optional[object] = None
    name: str = "Phi"

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.evaluate(np.asarray(p, dtype=float)), dtype=float)


# constructors ---------------------------------------------------------------

def constant_scalar(c) -> ScalarField:
    return as_scalar_field(c)


def constant_vector(v, cls=VectorField) -> VectorField:
    v = as_array(v).copy()
    v.setflags(write=False)
    return cls(v.shape[0], lambda p: v, f"const{v.tolist()}")


def constant_covector(v) -> CovectorField:
    return constant_vector(v, CovectorField)


def basis_field(dim: int, i: int) -> VectorField:
    return constant_vector(np.eye(dim)[i])


@dataclass(frozen=True)
class Polynomial:
    """``sum_m coeffs[m] * x**exponents[m]``; coefficients may be vector-valued."""

    exponents: np.ndarray
    coeffs: np.ndarray

    def __call__(self, p):
        mono = np.prod(np.asarray(p, dtype=float) ** self.exponents, axis=1)
        return np.tensordot(mono, self.coeffs, axes=1)


def _polynomial(exponents, coeffs):
    exps = np.atleast_2d(np.asarray(exponents, dtype=int))
    cs = np.asarray(coeffs, dtype=float)
    if cs.shape[0] != exps.shape[0]:
        raise UsageError("need one coefficient row per exponent tuple")
    if np.any(exps < 0):
        raise UsageError("exponents must be non-negative")
    return Polynomial(exps, cs)


def polynomial_scalar(exponents, coeffs, name="poly") -> ScalarField:
    poly = _polynomial(exponents, coeffs)
    return ScalarField(lambda p: float(poly(p)), name)


def polynomial_vector(exponents, coeffs, name="poly", cls=VectorField) -> VectorField:
    poly = _polynomial(exponents, coeffs)
    if poly.coeffs.ndim != 2:
        raise UsageError("vector polynomial needs coefficients of shape (terms, n)")
    return cls(poly.coeffs.shape[1], poly, name)


def polynomial_covector(exponents, coeffs, name="poly") -> CovectorField:
    return polynomial_vector(exponents, coeffs, name, CovectorField)


def _all_exponents(dim, degree):
    from .gallery import monomial_exponents

    return [(0,) * dim] + monomial_exponents(dim, degree)


def random_polynomial_scalar(dim, rng, degree=2, scale=1.0) -> ScalarField:
    exps = _all_exponents(dim, degree)
    return polynomial_scalar(exps, rng.uniform(-scale, scale, len(exps)), "rand_poly")


def random_polynomial_vector(dim, rng, degree=2, scale=1.0, cls=VectorField) -> VectorField:
    exps = _all_exponents(dim, degree)
    return polynomial_vector(exps, rng.uniform(-scale, scale, (len(exps), dim)),
                             "rand_poly", cls)


def random_polynomial_covector(dim, rng, degree=2, scale=1.0) -> CovectorField:
    return random_polynomial_vector(dim, rng, degree, scale, CovectorField)


# expression grammar ---------------------------------------------------------

_FUNCS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


def _validate(node, dim):
    if isinstance(node, ast.Expression):
        return _validate(node.body, dim)
    if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
        _validate(node.left, dim)
        _validate(node.right, dim)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        _validate(node.operand, dim)
    elif isinstance(node, ast.Constant) and type(node.value) in (int, float):
        pass
    elif isinstance(node, ast.Name):
        name = node.id
        if not (name.startswith("x") and name[1:].isdigit() and int(name[1:]) < dim):
            raise UsageError(f"unknown identifier {name!r} (expected x0..x{dim - 1})")
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise UsageError("only sin, cos and exp may be called")
        if len(node.args) != 1 or node.keywords:
            raise UsageError(f"{node.func.id} takes exactly one argument")
        _validate(node.args[0], dim)
    else:
        raise UsageError(f"unsupported syntax: {ast.dump(node)[:40]}")


def parse_expression(text: str, dim: int) -> Callable[[np.ndarray], float]:
    """Compile an arithmetic expression in ``x0..x{dim-1}``.

    Grammar: numbers, identifiers, ``+ - * / ^`` (``^`` is exponentiation),
    parentheses and the functions ``sin``, ``cos``, ``exp``.
    """
    if not isinstance(text, str) or not text.strip():
        raise UsageError("empty expression")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise UsageError(f"cannot parse expression {text!r}: {exc.msg}") from exc
    _validate(tree, dim)
    code = compile(tree, "<expression>", "eval")
    names = [f"x{i}" for i in range(dim)]

    def evaluate(p):
        env = dict(zip(names, (float(c) for c in p)))
        env.update(_FUNCS)
        try:
            return float(eval(code, {"__builtins__": {}}, env))
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise NumericError(f"evaluating {text!r} at {list(p)}: {exc}") from exc

    return evaluate


def expression_scalar(text: str, dim: int) -> ScalarField:
    return ScalarField(parse_expression(text, dim), text)


def expression_vector(texts, dim: int, cls=VectorField) -> VectorField:
    if isinstance(texts, str):
        raise UsageError("a vector field needs a list of component expressions")
    comps = [parse_expression(t, dim) for t in texts]
    if len(comps) != dim:
        raise UsageError(f"vector field needs {dim} components, got {len(comps)}")
    return cls(dim, lambda p: np.array([c(p) for c in comps]), "[" + ", ".join(texts) + "]")


# bilinear maps --------------------------------------------------------------

BILINEAR_KINDS = ("scalar", "inner", "cross", "tensor", "exterior", "geometric", "pairing")


def _wedge(x, y):
    n = x.shape[0]
    return np.array([x[i] * y[j] - x[j] * y[i] for i in range(n) for j in range(i + 1, n)])


@dataclass(frozen=True)
class BilinearMap:
    """A bilinear map of two values, returning a flat coefficient vector.

    Kinds: ``scalar`` (product of reals), ``inner`` (``x @ g @ y``), ``cross``
    (n = 3 only), ``tensor`` (row-major outer product), ``exterior`` (blades
    ``e_i ^ e_j`` with ``i < j`` in lexicographic order), ``geometric``
    (Clifford product of two vectors: scalar part followed by the bivector
    part) and ``pairing`` (covector applied to vector).
    """

    kind: str
    dim: int
    metric: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in BILINEAR_KINDS:
            raise UsageError(f"unknown bilinear kind {self.kind!r}")
        if self.kind == "cross" and self.dim != 3:
            raise UsageError("cross product requires dim = 3")
        if self.metric is not None:
            g = np.asarray(self.metric, dtype=float)
            if g.shape != (self.dim, self.dim):
                raise UsageError("metric must be dim x dim")
            object.__setattr__(self, "metric", g)

    @property
    def arg_kinds(self) -> tuple[str, str]:
        """Value types of the two arguments: ``scalar``, ``vector`` or ``covector``."""
        if self.kind == "scalar":
            return ("scalar", "scalar")
        if self.kind == "pairing":
            return ("covector", "vector")
        return ("vector", "vector")

    def __call__(self, x, y) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        k = self.kind
        if k == "scalar":
            return x * y
        if k == "inner":
            g = self.metric
            return np.array([x @ y if g is None else x @ g @ y])
        if k == "pairing":
            return np.array([x @ y])
        if k == "cross":
            return np.cross(x, y)
        if k == "tensor":
            return np.outer(x, y).ravel()
        if k == "exterior":
            return _wedge(x, y)
        # geometric product of vectors: x y = x.y + x^y
        return np.concatenate(([x @ y], _wedge(x, y)))
