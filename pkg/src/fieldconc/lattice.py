"""Dyadic geometry of N^d: projections, the multiscale total order, cells.

Points are plain tuples of non-negative ints. The order compares two points
at the coarsest dyadic scale where their projections still differ, using
the lexicographic order there.
"""
from __future__ import annotations

import enum
import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from fieldconc import _kernels

Point = tuple[int, ...]

#: coordinates must stay below this so 2^{2k} products fit in 64 bits
COORD_LIMIT = 2**32


class Order(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class _Unbounded:
    """Distance to an empty set. Compares greater than every integer."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("UNBOUNDED")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


UNBOUNDED = _Unbounded()


def as_point(t: Iterable[int]) -> Point:
    """Validate and normalise a lattice point."""
    p = tuple(int(x) for x in t)
    if not p:
        raise ValueError("lattice points need at least one coordinate")
    for x in p:
        if x < 0:
            raise ValueError(f"negative coordinate in {p}")
        if x >= COORD_LIMIT:
            raise ValueError(f"coordinate {x} exceeds 2^32")
    return p


def _same_dim(t: Point, u: Point) -> None:
    if len(t) != len(u):
        raise ValueError(f"dimension mismatch: {len(t)} vs {len(u)}")


@dataclass(frozen=True)
class Rectangle:
    """Origin-anchored box prod_i {0, ..., N_i - 1}."""

    sides: tuple[int, ...]

    def __post_init__(self):
        sides = tuple(int(n) for n in self.sides)
        if not sides or any(n < 1 for n in sides):
            raise ValueError(f"rectangle sides must be >= 1, got {self.sides}")
        if any(n > COORD_LIMIT for n in sides):
            raise ValueError("rectangle side exceeds 2^32")
        object.__setattr__(self, "sides", sides)

    @classmethod
    def cube(cls, n: int, d: int) -> "Rectangle":
        return cls((n,) * d)

    @property
    def d(self) -> int:
        return len(self.sides)

    @property
    def cardinality(self) -> int:
        return math.prod(self.sides)

    @property
    def max_scale(self) -> int:
        """max_i floor(log2 N_i)."""
        return max(n.bit_length() - 1 for n in self.sides)

    def __contains__(self, t) -> bool:
        return len(t) == self.d and all(0 <= x < n for x, n in zip(t, self.sides))

    def __len__(self) -> int:
        return self.cardinality

    def points(self) -> Iterator[Point]:
        return itertools.product(*(range(n) for n in self.sides))

    def array(self) -> np.ndarray:
        """All points as an (|R|, d) int64 array in lexicographic order."""
        grids = np.meshgrid(*(np.arange(n, dtype=np.int64) for n in self.sides),
                            indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class Cell:
    """C_{k,b} = {b} + {0, ..., 2^k - 1}^d."""

    k: int
    base: Point

    def __post_init__(self):
        base = as_point(self.base)
        if self.k < 0:
            raise ValueError("cell scale must be >= 0")
        side = 1 << self.k
        if any(x % side for x in base):
            raise ValueError(f"cell base {base} is not a multiple of 2^{self.k}")
        object.__setattr__(self, "base", base)

    @property
    def side(self) -> int:
        return 1 << self.k

    @property
    def cardinality(self) -> int:
        return self.side ** len(self.base)

    def __contains__(self, t) -> bool:
        return all(b <= x < b + self.side for x, b in zip(t, self.base))

    def points(self) -> Iterator[Point]:
        return itertools.product(*(range(b, b + self.side) for b in self.base))


def dyadic_project(t: Sequence[int], k: int) -> Point:
    """Round every coordinate down to a multiple of 2^k."""
    if k < 0:
        raise ValueError("scale must be >= 0")
    return tuple((x >> k) << k for x in as_point(t))


def kappa(t: Sequence[int], u: Sequence[int]) -> int:
    """min{k : pi_k(t) = pi_k(u)} - 1, so -1 exactly when t == u."""
    t, u = as_point(t), as_point(u)
    _same_dim(t, u)
    k = 0
    while dyadic_project(t, k) != dyadic_project(u, k):
        k += 1
    return k - 1


def precedes(t: Sequence[int], u: Sequence[int]) -> Order:
    """Compare t and u in the multiscale order."""
    t, u = as_point(t), as_point(u)
    k = kappa(t, u)
    if k < 0:
        return Order.EQUAL
    pt, pu = dyadic_project(t, k), dyadic_project(u, k)
    return Order.LESS if pt < pu else Order.GREATER


order_key = functools.cmp_to_key(lambda a, b: int(precedes(a, b)))


def morton_key(t: Sequence[int]) -> int:
    """Integer whose natural order agrees with the multiscale order.

    Bits are interleaved scale by scale from the top, with the first
    coordinate most significant within a scale.
    """
    t = as_point(t)
    key = 0
    for k in range(32, -1, -1):
        for x in t:
            key = (key << 1) | ((x >> k) & 1)
    return key


def sort_points(points: Iterable[Sequence[int]]) -> list[Point]:
    return sorted((as_point(p) for p in points), key=order_key)


def _window_array(window: Rectangle | np.ndarray) -> np.ndarray:
    if isinstance(window, Rectangle):
        return window.array()
    return np.asarray(window, dtype=np.int64)


def predecessor_mask(t: Sequence[int], k: int, window: Rectangle | np.ndarray,
                     strict: bool = True) -> np.ndarray:
    """Boolean mask over the window's points for the scale-k predecessor set."""
    t = as_point(t)
    pts = _window_array(window)
    proj = (pts >> k) << k
    target = np.asarray(dyadic_project(t, k), dtype=np.int64)
    cmp = _kernels.compare_to(np.ascontiguousarray(proj), target)
    return cmp < 0 if strict else cmp <= 0


def predecessors_at_scale(t: Sequence[int], k: int, window: Rectangle,
                          strict: bool = True) -> frozenset[Point]:
    """Points u of the window with pi_k(u) strictly before pi_k(t)
    (or weakly, when ``strict`` is False)."""
    pts = _window_array(window)
    mask = predecessor_mask(t, k, pts, strict)
    return frozenset(tuple(int(x) for x in row) for row in pts[mask])


def separation_distance(t: Sequence[int], k: int):
    """Exact sup-norm distance from t to its strict scale-k predecessor set.

    Returns :data:`UNBOUNDED` when that set is empty (pi_k(t) = 0). The
    search covers the sup-ball of radius 2^k, which always contains a
    predecessor otherwise.
    """
    t = as_point(t)
    if k < 0:
        raise ValueError("scale must be >= 0")
    if k > 31:
        return UNBOUNDED
    dist = _kernels.separation_scan(np.asarray(t, dtype=np.int64), int(k))
    return UNBOUNDED if dist < 0 else int(dist)


def cell_sum_of_squares(R: Rectangle, k: int) -> tuple[int, int]:
    """Sum over scale-k cells of |C cap R|^2, and the bound |R| * prod min(2^k, N_i)."""
    if k < 0:
        raise ValueError("scale must be >= 0")
    side = 1 << k
    total = 1
    bound = 1
    for n in R.sides:
        q, r = divmod(n, side)
        total *= q * side * side + r * r
        bound *= n * min(side, n)
    return total, bound


def cells_of(points: np.ndarray, k: int) -> dict[Point, np.ndarray]:
    """Group row indices of ``points`` by their scale-k cell base."""
    bases = (np.asarray(points, dtype=np.int64) >> k) << k
    groups: dict[Point, list[int]] = {}
    for i, row in enumerate(map(tuple, bases.tolist())):
        groups.setdefault(row, []).append(i)
    return {b: np.asarray(ix) for b, ix in groups.items()}
