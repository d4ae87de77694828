"""Diagonal serialization of a 2-D parameter grid.

Grid points sit at ``(i / M_u, j / M_v)`` for ``0 <= i < M_u``,
``0 <= j < M_v``. The scan walks the 45-degree lines ``j - i = l`` for
``l = M_v - 1, ..., -(M_u - 1)``, each from its lower-left end to its
upper-right end, so every step inside a line moves by exactly
``(1/M_u, 1/M_v)``. Steps that jump to the next line are roll-overs.

These grid points are not the quantizer cell centers used by
:mod:`weaknoise.modulate`; they are the lower-left corners of the cells.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .theory import ErrorCostSpec


@dataclass(frozen=True)
class GridScan:
    M_u: int
    M_v: int
    indices: np.ndarray  # (M_u M_v, 2) integer grid coordinates (i, j)
    rollovers: frozenset

    @property
    def order(self) -> np.ndarray:
        """Scan points in (u, v) coordinates."""
        return self.indices / np.array([self.M_u, self.M_v], dtype=float)

    @property
    def kept_steps(self) -> list[int]:
        """Indices k whose step w_k -> w_{k+1} stays on one diagonal."""
        return [k for k in range(len(self.indices) - 1) if k not in self.rollovers]

    def diagonals(self) -> list[np.ndarray]:
        """Index ranges of the consecutive scan points on each diagonal."""
        bounds = [0] + [k + 1 for k in sorted(self.rollovers)] + [len(self.indices)]
        return [np.arange(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]

    def to_rows(self):
        """Rows ``(k, i, j, u, v, is_rollover)`` for CSV export."""
        for k, (i, j) in enumerate(self.indices):
            yield k, int(i), int(j), i / self.M_u, j / self.M_v, k in self.rollovers


def points_above(M_u: int, M_v: int, ell: int) -> int:
    """Grid points strictly above the line ``v = (u M_u + ell) / M_v``."""
    i = np.arange(M_u)[:, None]
    j = np.arange(M_v)[None, :]
    return int(np.count_nonzero(j > i + ell))


def diagonal_scan(M_u: int, M_v: int) -> GridScan:
    if M_u < 1 or M_v < 1:
        raise ValueError("grid sizes must be positive")
    pts = []
    rollovers = set()
    for ell in range(M_v - 1, -M_u, -1):
        for i in range(max(0, -ell), min(M_u, M_v - ell)):
            pts.append((i, i + ell))
        if ell > -(M_u - 1):
            rollovers.add(len(pts) - 1)
    return GridScan(M_u, M_v, np.array(pts, dtype=int).reshape(-1, 2), frozenset(rollovers))


def row_major_scan(M_u: int, M_v: int) -> GridScan:
    """Column-by-column scan; reference for tests only."""
    pts = [(i, j) for i in range(M_u) for j in range(M_v)]
    rollovers = frozenset(k * M_v + M_v - 1 for k in range(M_u - 1))
    return GridScan(M_u, M_v, np.array(pts, dtype=int), rollovers)


def scan_step_cost(M_u: int, M_v: int, ecf: ErrorCostSpec) -> float:
    """Cost of half an in-diagonal step, ``rho(1/2M_u, 1/2M_v)``."""
    if ecf.d != 2:
        raise ValueError("scan costs are two-dimensional")
    return float(ecf.cost([1 / (2 * M_u), 1 / (2 * M_v)]))


def diagonal_separation_constant(q: float) -> float:
    """``min_t |t|^q + |1-t|^q = 2^(1-q)``, the minimum sitting at t = 1/2."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return 2.0 ** (1.0 - q)
