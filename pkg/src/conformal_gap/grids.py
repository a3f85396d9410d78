"""Discretized C1 functions: co-located value and derivative channels.

Off-grid evaluation is cubic Hermite interpolation from the (value,
derivative) pairs, which reproduces grid data exactly at the nodes and keeps
the derivative channel analytic.  The operator code needs function values at
scattered pullback points and the oscillation-adapted norm needs an honest
derivative sup, so finite differences are never used.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import DomainError, ZeroB


@dataclass(frozen=True)
class GridFunction:
    """Complex values and derivatives on the uniform grid over [0,1]."""

    values: np.ndarray
    derivatives: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        d = np.asarray(self.derivatives, dtype=complex)
        if v.ndim != 1 or v.shape != d.shape or v.size < 2:
            raise DomainError("need matching 1-d channels with >= 2 nodes")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(d))):
            raise DomainError("non-finite grid data")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "derivatives", d)

    @property
    def grid_size(self) -> int:
        return self.values.size

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_size)

    def eval_at(self, xs) -> Tuple[np.ndarray, np.ndarray]:
        """(value, derivative) at arbitrary points of [0,1]."""
        xs = np.clip(np.asarray(xs, dtype=float), 0.0, 1.0)
        n = self.grid_size
        h = 1.0 / (n - 1)
        k = np.minimum((xs / h).astype(int), n - 2)
        t = xs / h - k
        t2 = t * t
        t3 = t2 * t
        p0, p1 = self.values[k], self.values[k + 1]
        m0, m1 = self.derivatives[k] * h, self.derivatives[k + 1] * h
        val = (
            (2 * t3 - 3 * t2 + 1) * p0
            + (t3 - 2 * t2 + t) * m0
            + (-2 * t3 + 3 * t2) * p1
            + (t3 - t2) * m1
        )
        dval = (
            (6 * t2 - 6 * t) * p0
            + (3 * t2 - 4 * t + 1) * m0
            + (-6 * t2 + 6 * t) * p1
            + (3 * t2 - 2 * t) * m1
        ) / h
        return val, dval

    def sup_value(self) -> float:
        return float(np.max(np.abs(self.values)))

    def sup_derivative(self) -> float:
        return float(np.max(np.abs(self.derivatives)))

    @staticmethod
    def constant(value: complex, grid_size: int = 4096) -> "GridFunction":
        v = np.full(grid_size, value, dtype=complex)
        return GridFunction(v, np.zeros(grid_size, dtype=complex))

    @staticmethod
    def from_callable(
        fn: Callable[[np.ndarray], np.ndarray],
        dfn: Callable[[np.ndarray], np.ndarray],
        grid_size: int = 4096,
    ) -> "GridFunction":
        xs = np.linspace(0.0, 1.0, grid_size)
        return GridFunction(np.asarray(fn(xs), dtype=complex), np.asarray(dfn(xs), dtype=complex))


def b_norm(f: GridFunction, b: float) -> float:
    """||f||_inf + |b|^-1 ||f'||_inf, the norm adapted to oscillation scale b."""
    if b == 0:
        raise ZeroB("b-norm undefined at b = 0")
    return f.sup_value() + f.sup_derivative() / abs(b)


def c1_norm(f: GridFunction) -> float:
    """||f||_inf + ||f'||_inf; the b = 0 fallback used by norm sweeps."""
    return f.sup_value() + f.sup_derivative()
