"""Arithmetic of a single affine system realized on coordinate tuples.

Points, translations and ground vectors are all plain float arrays of shape
``(n,)``; the operations below also accept stacks of shape ``(N, n)`` and
work row by row.  The role of an array is carried by the function consuming it:
``translate(p, t)`` takes a point and a translation, ``between(q, p)`` returns
the translation ``q <- p`` sending ``p`` to ``q``.

All identities here involve only additions and subtractions of identical
operands, so they hold bit-exactly in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, UsageError

# Aliases documenting the role of an array; all are float ndarrays of shape (n,).
Point = np.ndarray
Translation = np.ndarray
Vector = np.ndarray


def as_array(x, dim=None, what="vector") -> np.ndarray:
    """Coerce ``x`` to a 1-d float array, optionally checking its length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise UsageError(f"{what} must be 1-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise UsageError(f"{what} has dimension {arr.shape[0]}, expected {dim}")
    return arr


def _rows(x, what) -> np.ndarray:
    """A single element ``(n,)`` or a stack ``(N, n)`` of them."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim not in (1, 2):
        raise UsageError(f"{what} must have shape (n,) or (N, n), got {arr.shape}")
    return arr


def _check_dims(*arrays):
    dims = {a.shape[-1] for a in arrays}
    if len(dims) != 1:
        raise UsageError(f"dimension mismatch: {sorted(dims)}")


def translate(p, t) -> Point:
    """``p + t``: apply the translation ``t`` to the point ``p``."""
    p, t = _rows(p, "point"), _rows(t, "translation")
    _check_dims(p, t)
    return p + t


def between(q, p) -> Translation:
    """The unique translation ``q <- p`` with ``translate(p, q <- p) == q``."""
    q, p = _rows(q, "point"), _rows(p, "point")
    _check_dims(q, p)
    return q - p


def compose(s, t) -> Translation:
    """Composition of translations; commutative addition of displacements."""
    s, t = _rows(s, "translation"), _rows(t, "translation")
    _check_dims(s, t)
    return s + t


def scale(k, t) -> Translation:
    return float(k) * _rows(t, "translation")


def weyl_residual(p, q, r) -> Translation:
    """``(r <- q) + (q <- p) - (r <- p)``; zero by Weyl's axiom."""
    return compose(between(r, q), between(q, p)) - between(r, p)


def four_point_residual(p, q, r, s) -> Translation:
    """``((p <- q) - (s <- r)) - ((p <- s) - (q <- r))``; zero in any point space."""
    return (between(p, q) - between(s, r)) - (between(p, s) - between(q, r))


def vectorize_at(p, q, action) -> Vector:
    """Coordinates of ``q`` in the vector space obtained by pinning the origin at ``p``.

    Returns ``action^{-1}(p <- q)``.  Note the direction: the translation is
    ``p <- q`` (from ``q`` to ``p``), so ``vectorize_at(0, q, I) == -q``.
    ``action`` is an invertible ``(n, n)`` matrix.
    """
    t = between(p, q)
    a = np.asarray(action, dtype=float)
    n = t.shape[-1]
    if a.shape != (n, n):
        raise UsageError(f"action must be {n}x{n}, got {a.shape}")
    try:
        return np.linalg.solve(a, t.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericError("singular action") from exc


@dataclass(frozen=True)
class Interval:
    """A pair of points ``start ... end``; a bound vector at ``start``."""

    start: Point
    end: Point

    def translation(self) -> Translation:
        return between(self.end, self.start)
