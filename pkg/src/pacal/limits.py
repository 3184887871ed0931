"""Richardson-extrapolated difference-quotient limits.

Every derivative in pacal is a limit ``lim_{tau -> 0} q(tau)`` of some
difference quotient.  The quotient is sampled at ``tau_k = h0 / ratio**k`` and
extrapolated to ``tau = 0`` with a Neville tableau, assuming an expansion
``q(tau) = L + c1*tau + c2*tau**2 + ...`` (or in powers of ``tau**2`` for
symmetric quotients).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import LimitError, UsageError


@dataclass(frozen=True)
class LimitConfig:
    """Sampling and convergence settings for :func:`richardson_limit`."""

    h0: float = 1e-2
    levels: int = 8
    tol: float = 1e-9
    ratio: float = 2.0

    def __post_init__(self):
        if not self.h0 > 0:
            raise UsageError(f"h0 must be positive, got {self.h0}")
        if not 2 <= self.levels <= 12:
            raise UsageError(f"levels must be in [2, 12], got {self.levels}")
        if not self.tol > 0:
            raise UsageError(f"tol must be positive, got {self.tol}")
        if not self.ratio > 1:
            raise UsageError(f"ratio must exceed 1, got {self.ratio}")


DEFAULT_LIMIT = LimitConfig()


@dataclass(frozen=True)
class LimitEstimate:
    """Extrapolated limit with its diagnostics.

    ``taus`` and ``quotients`` are the raw samples; ``diagonals`` holds the
    tableau diagonal ``T[k][k]`` for every level that was computed.
    """

    value: np.ndarray
    err: float
    converged: bool
    taus: np.ndarray = field(repr=False)
    quotients: np.ndarray = field(repr=False)
    diagonals: np.ndarray = field(repr=False)

    def require(self, what="limit"):
        """Return ``value`` or raise :class:`LimitError` if not converged."""
        if not self.converged:
            raise LimitError(
                f"{what} did not converge (err={self.err:.3e} after "
                f"{len(self.taus)} levels)",
                estimate=self,
            )
        return self.value


def _norm(x):
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def richardson_limit(
    quotient: Callable[[float], np.ndarray],
    config: LimitConfig = DEFAULT_LIMIT,
    *,
    h0: float | None = None,
    power: int = 1,
    direction: float = 1.0,
    early_exit: bool = True,
) -> LimitEstimate:
    """Estimate ``lim_{tau -> 0} quotient(tau)``.

    Parameters
    ----------
    quotient
        Maps a step ``tau`` to an array (any shape) or scalar.
    config
        Sampling settings; ``h0`` overrides ``config.h0``.
    power
        Exponent step of the error expansion: 1 for one-sided quotients,
        2 for symmetric (central) ones.
    direction
        Sign of the sampled steps; ``-1`` approaches zero from below.
    early_exit
        Stop at the first level whose successive diagonals agree to ``tol``.

    Convergence is declared when two successive tableau diagonals differ by
    at most ``tol * max(1, |value|)``.
    """
    start = config.h0 if h0 is None else h0
    taus = []
    rows: list[list[np.ndarray]] = []
    diagonals = []
    diffs = []
    for k in range(config.levels):
        tau = start / config.ratio**k
        taus.append(tau)
        row = [np.asarray(quotient(direction * tau), dtype=float)]
        for j in range(1, k + 1):
            factor = config.ratio ** (power * j) - 1.0
            row.append(row[j - 1] + (row[j - 1] - rows[k - 1][j - 1]) / factor)
        rows.append(row)
        diagonals.append(row[k])
        if k == 0:
            continue
        diff = _norm(row[k] - rows[k - 1][k - 1])
        diffs.append(diff)
        if early_exit and diff <= config.tol * max(1.0, _norm(row[k])):
            return LimitEstimate(
                value=row[k],
                err=diff,
                converged=True,
                taus=np.array(taus),
                quotients=np.array([r[0] for r in rows]),
                diagonals=np.array(diagonals),
            )
    best = int(np.argmin(diffs)) + 1
    value = diagonals[best]
    err = diffs[best - 1]
    return LimitEstimate(
        value=value,
        err=err,
        converged=err <= config.tol * max(1.0, _norm(value)),
        taus=np.array(taus),
        quotients=np.array([r[0] for r in rows]),
        diagonals=np.array(diagonals),
    )


def limit_value(quotient, config=DEFAULT_LIMIT, what="limit", **kwargs):
    """Shorthand for ``richardson_limit(...).require(what)``."""
    return richardson_limit(quotient, config, **kwargs).require(what)


def observed_order(taus, quotients, reference) -> float:
    """Least-squares log-log slope of ``|quotient - reference|`` against tau."""
    taus = np.asarray(taus, dtype=float)
    errs = np.array([_norm(np.asarray(q) - reference) for q in quotients])
    mask = errs > 0
    if mask.sum() < 2:
        return float("inf")
    slope, _ = np.polyfit(np.log(taus[mask]), np.log(errs[mask]), 1)
    return float(slope)
