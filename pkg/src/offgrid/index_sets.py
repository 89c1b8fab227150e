"""Rectangular integer-lattice windows and their Minkowski/contraction algebra.

Every coefficient support in this package is an axis-aligned rectangle on
Z^2, stored as an inclusive (lo, hi) corner pair.  All arithmetic is exact
integer arithmetic; nothing here ever rounds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class ContractionEmpty(ValueError):
    """Raised when the contracting window is wider than the target."""


class InvalidNesting(ValueError):
    """Raised when the inner window does not fit inside the outer one."""


@dataclass(frozen=True)
class IndexSet2D:
    """Inclusive rectangle {lo.x..hi.x} x {lo.y..hi.y} on the integer lattice."""

    lo: tuple[int, int]
    hi: tuple[int, int]

    def __post_init__(self):
        lo = (int(self.lo[0]), int(self.lo[1]))
        hi = (int(self.hi[0]), int(self.hi[1]))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if hi[0] < lo[0] or hi[1] < lo[1]:
            raise ValueError(f"empty rectangle: lo={lo}, hi={hi}")

    @classmethod
    def centered(cls, half_x: int, half_y: int | None = None) -> "IndexSet2D":
        """Origin-symmetric window [-half_x, half_x] x [-half_y, half_y]."""
        if half_y is None:
            half_y = half_x
        if half_x < 0 or half_y < 0:
            raise ValueError("half widths must be nonnegative")
        return cls((-half_x, -half_y), (half_x, half_y))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.hi[0] - self.lo[0] + 1, self.hi[1] - self.lo[1] + 1)

    @property
    def size(self) -> int:
        nx, ny = self.shape
        return nx * ny

    @property
    def is_symmetric(self) -> bool:
        return self.lo[0] == -self.hi[0] and self.lo[1] == -self.hi[1]

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer coordinate arrays along x and y."""
        return (
            np.arange(self.lo[0], self.hi[0] + 1),
            np.arange(self.lo[1], self.hi[1] + 1),
        )

    def index_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrids (kx, ky), shape == self.shape, 'ij' indexing."""
        ax, ay = self.axes()
        return np.meshgrid(ax, ay, indexing="ij")

    def contains_index(self, k) -> bool:
        return (
            self.lo[0] <= k[0] <= self.hi[0] and self.lo[1] <= k[1] <= self.hi[1]
        )

    def contains(self, other: "IndexSet2D") -> bool:
        return (
            self.lo[0] <= other.lo[0]
            and self.lo[1] <= other.lo[1]
            and self.hi[0] >= other.hi[0]
            and self.hi[1] >= other.hi[1]
        )

    def offset_of(self, k) -> int:
        """Row-major linear index of lattice point k within this window."""
        if not self.contains_index(k):
            raise KeyError(f"{tuple(k)} not in window {self}")
        ny = self.shape[1]
        return (k[0] - self.lo[0]) * ny + (k[1] - self.lo[1])

    def to_json(self) -> str:
        return json.dumps({"lo": list(self.lo), "hi": list(self.hi)})

    @classmethod
    def from_json(cls, text: str | dict) -> "IndexSet2D":
        obj = json.loads(text) if isinstance(text, str) else text
        return cls(tuple(obj["lo"]), tuple(obj["hi"]))

    def __str__(self):
        return f"[{self.lo[0]},{self.hi[0]}]x[{self.lo[1]},{self.hi[1]}]"


def minkowski_sum(a: IndexSet2D, b: IndexSet2D) -> IndexSet2D:
    """Pointwise-sum window {k + l : k in a, l in b}."""
    return IndexSet2D(
        (a.lo[0] + b.lo[0], a.lo[1] + b.lo[1]),
        (a.hi[0] + b.hi[0], a.hi[1] + b.hi[1]),
    )


def dilate(a: IndexSet2D, n: int) -> IndexSet2D:
    """n-fold Minkowski self-sum (n >= 1)."""
    if n < 1:
        raise ValueError("dilation factor must be >= 1")
    return IndexSet2D(
        (n * a.lo[0], n * a.lo[1]),
        (n * a.hi[0], n * a.hi[1]),
    )


def contraction(omega: IndexSet2D, lam: IndexSet2D) -> IndexSet2D:
    """Window of integer shifts t such that t + lam fits inside omega.

    For origin-symmetric lam this coincides with the formal definition
    {l in omega : l - k in omega for all k in lam}; for offset windows the
    shift form is the one the rank and nullspace formulas rely on.
    """
    lo = (omega.lo[0] - lam.lo[0], omega.lo[1] - lam.lo[1])
    hi = (omega.hi[0] - lam.hi[0], omega.hi[1] - lam.hi[1])
    if hi[0] < lo[0] or hi[1] < lo[1]:
        raise ContractionEmpty(
            f"{lam} is wider than {omega} in at least one dimension"
        )
    return IndexSet2D(lo, hi)


def rank_bound(lambda1: IndexSet2D, lambda0: IndexSet2D) -> int:
    """Lifted-matrix rank cap |lambda1| - (number of shifts of lambda0 in lambda1)."""
    s1, s0 = lambda1.shape, lambda0.shape
    if s0[0] > s1[0] or s0[1] > s1[1]:
        raise InvalidNesting(
            f"{lambda0} does not fit inside {lambda1} after centering"
        )
    return lambda1.size - contraction(lambda1, lambda0).size
