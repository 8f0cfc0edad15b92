"""Uniform partitions of the context space.

Continuous contexts live in ``[0, 1]^d`` and are binned into ``m_T**d``
congruent hypercubes. Discrete contexts (search queries) use
:class:`DiscretePartition`, where every query is its own cell.

Cells carry two labels: the public *cell id* (1-based for hypercubes, the
query id for discrete partitions) and a dense 0-based *index* used by the
learners to address their counter arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


def compute_m_T(T: float, alpha: float, d: int) -> int:
    """Cells per axis, ``ceil(T ** (1 / (3 * alpha + d)))``."""
    if T <= 0 or alpha <= 0 or d <= 0:
        raise ValueError(f"T, alpha and d must be positive (got {T}, {alpha}, {d})")
    # guard against 16 ** 0.25 = 2.0000000000000004 style round-up
    value = T ** (1.0 / (3.0 * alpha + d))
    nearest = round(value)
    if abs(value - nearest) < 1e-9 * max(1.0, value):
        return max(1, int(nearest))
    return max(1, math.ceil(value))


@dataclass(frozen=True)
class Partition:
    """Tiling of ``[0, 1]^d`` into ``m_T**d`` hypercubes of edge ``1/m_T``.

    Cells are half-open ``[a, b)`` along every axis except the last one,
    which is closed so that coordinate ``1.0`` is covered. Cell ids are
    1-based and row-major with the first axis most significant.
    """

    d: int
    m_T: int

    def __post_init__(self):
        if self.d < 1 or self.m_T < 1:
            raise ValueError("d and m_T must be positive")

    @property
    def cell_count(self) -> int:
        return self.m_T ** self.d

    @property
    def diameter(self) -> float:
        return math.sqrt(self.d) / self.m_T

    def _coords(self, x) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if arr.shape != (self.d,):
            raise ValueError(f"expected a context of dimension {self.d}, got shape {arr.shape}")
        if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
            raise ValueError(f"context {arr.tolist()} lies outside [0, 1]^{self.d}")
        return arr

    def axis_indices(self, x) -> tuple[int, ...]:
        """1-based per-axis bin indices of context ``x``."""
        arr = self._coords(x)
        bins = np.minimum(np.floor(arr * self.m_T).astype(int), self.m_T - 1)
        return tuple(int(b) + 1 for b in bins)

    def cell_of(self, x) -> int:
        return self.index_of(x) + 1

    def index_of(self, x) -> int:
        idx = 0
        for b in self.axis_indices(x):
            idx = idx * self.m_T + (b - 1)
        return idx

    def cell_axes(self, l: int) -> tuple[int, ...]:
        """Inverse of :meth:`cell_of` at the level of per-axis indices."""
        self._check_cell(l)
        rest = l - 1
        axes = []
        for _ in range(self.d):
            rest, b = divmod(rest, self.m_T)
            axes.append(b + 1)
        return tuple(reversed(axes))

    def cell_center(self, l: int) -> np.ndarray:
        axes = self.cell_axes(l)
        return np.array([(b - 0.5) / self.m_T for b in axes])

    def center_of_index(self, idx: int) -> np.ndarray:
        return self.cell_center(idx + 1)

    def _check_cell(self, l: int) -> None:
        if not isinstance(l, (int, np.integer)) or not 1 <= l <= self.cell_count:
            raise ValueError(f"invalid cell id {l!r}; expected 1..{self.cell_count}")

    def cell_labels(self) -> list[int]:
        return list(range(1, self.cell_count + 1))


@dataclass(frozen=True)
class DiscretePartition:
    """Partition whose cells are the discrete query ids themselves."""

    queries: tuple[int, ...]

    def __init__(self, queries: Sequence[int]):
        object.__setattr__(self, "queries", tuple(int(q) for q in queries))
        if len(set(self.queries)) != len(self.queries) or not self.queries:
            raise ValueError("queries must be a non-empty set of distinct ids")
        object.__setattr__(self, "_pos", {q: i for i, q in enumerate(self.queries)})

    @property
    def cell_count(self) -> int:
        return len(self.queries)

    def cell_of(self, x) -> int:
        self.index_of(x)
        return int(x)

    def index_of(self, x) -> int:
        try:
            return self._pos[int(x)]
        except (KeyError, TypeError, ValueError):
            raise ValueError(f"unknown query context {x!r}") from None

    def cell_center(self, l: int) -> int:
        self.index_of(l)
        return int(l)

    def center_of_index(self, idx: int) -> int:
        return self.queries[idx]

    def cell_labels(self) -> list[int]:
        return list(self.queries)
