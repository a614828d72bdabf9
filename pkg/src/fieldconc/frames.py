"""Frames, the framed set and compression of product sets.

A frame at scale k with width w is the set of integers lying less than w
past a positive multiple of 2^k. Points of a rectangle with no coordinate
in any frame form the framed set; the rest splits into d product strips.
"""
from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from fieldconc.lattice import Point, Rectangle


@dataclass(frozen=True)
class DeltaSeq:
    """Frame widths delta_1, ..., delta_m; delta_0 = 0 and zero past the end."""

    deltas: tuple[int, ...] = ()

    def __post_init__(self):
        ds = tuple(int(x) for x in self.deltas)
        prev = 0
        for k, x in enumerate(ds, start=1):
            if x < 0:
                raise ValueError(f"delta_{k} = {x} is negative")
            if x > 2**k:
                raise ValueError(f"delta_{k} = {x} exceeds 2^{k}")
            if x < prev:
                raise ValueError(f"delta sequence must be nondecreasing, got {ds}")
            prev = x
        object.__setattr__(self, "deltas", ds)

    @classmethod
    def zeros(cls, m: int) -> "DeltaSeq":
        return cls((0,) * m)

    def __getitem__(self, k: int) -> int:
        if k < 0:
            raise IndexError(k)
        if k == 0 or k > len(self.deltas):
            return 0
        return self.deltas[k - 1]

    def __len__(self) -> int:
        return len(self.deltas)

    def __iter__(self) -> Iterator[int]:
        return iter(self.deltas)

    def constraint_value(self, m: int) -> Fraction:
        """Exact sum_{k=1}^m delta_k 2^-k."""
        return sum((Fraction(self[k], 2**k) for k in range(1, m + 1)), Fraction(0))

    def replace(self, k: int, value: int) -> "DeltaSeq":
        ds = list(self.deltas) + [0] * max(0, k - len(self.deltas))
        ds[k - 1] = value
        return DeltaSeq(tuple(ds))


def constraint_limit(d: int) -> Fraction:
    return Fraction(1, 4 * d * d)


def lambda_member(x: int, k: int, delta_k: int) -> bool:
    """Whether x lies in the scale-k frame of width delta_k."""
    if delta_k > 2**k:
        raise ValueError(f"frame width {delta_k} exceeds 2^{k}")
    if delta_k <= 0 or k < 1:
        return False
    side = 1 << k
    return x >= side and x % side < delta_k


def in_frames(x: int, delta: DeltaSeq) -> bool:
    """Membership in the union of all frames of ``delta``."""
    k = 1
    # scales with 2^k > x cannot contain x
    while (1 << k) <= x:
        if lambda_member(x, k, delta[k]):
            return True
        k += 1
    return False


def frame_mask(n: int, delta: DeltaSeq) -> np.ndarray:
    """Boolean mask of {0, ..., n-1} for the union of frames."""
    x = np.arange(n, dtype=np.int64)
    out = np.zeros(n, dtype=bool)
    k = 1
    while (1 << k) < n:
        w = delta[k]
        if w > 0:
            out |= (x >= (1 << k)) & ((x & ((1 << k) - 1)) < w)
        k += 1
    return out


@dataclass(frozen=True)
class ProductSet:
    """prod_i A_i, each factor a sorted tuple of distinct non-negative ints."""

    factors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        fs = tuple(tuple(sorted(set(int(x) for x in f))) for f in self.factors)
        if not fs:
            raise ValueError("product set needs at least one factor")
        object.__setattr__(self, "factors", fs)

    @classmethod
    def from_rectangle(cls, R: Rectangle) -> "ProductSet":
        return cls(tuple(tuple(range(n)) for n in R.sides))

    @property
    def d(self) -> int:
        return len(self.factors)

    @property
    def is_empty(self) -> bool:
        return any(len(f) == 0 for f in self.factors)

    def __len__(self) -> int:
        return math.prod(len(f) for f in self.factors)

    def __contains__(self, t) -> bool:
        if len(t) != self.d:
            return False
        for x, f in zip(t, self.factors):
            i = bisect.bisect_left(f, x)
            if i == len(f) or f[i] != x:
                return False
        return True

    def points(self) -> Iterator[Point]:
        return itertools.product(*self.factors)

    def array(self) -> np.ndarray:
        if self.is_empty:
            return np.zeros((0, self.d), dtype=np.int64)
        grids = np.meshgrid(*(np.asarray(f, dtype=np.int64) for f in self.factors),
                            indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class FramePartition:
    framed: ProductSet
    strips: tuple[ProductSet, ...]

    def parts(self) -> tuple[ProductSet, ...]:
        return (self.framed,) + self.strips


def framed_partition(R: Rectangle, delta: DeltaSeq) -> FramePartition:
    """Split R into its framed part and the d strips covering the frame."""
    inside = []
    outside = []
    for n in R.sides:
        mask = frame_mask(n, delta)
        inside.append(tuple(int(x) for x in np.flatnonzero(~mask)))
        outside.append(tuple(int(x) for x in np.flatnonzero(mask)))
    framed = ProductSet(tuple(inside))
    strips = []
    for i in range(R.d):
        fs = inside[:i] + [outside[i]] + [tuple(range(n)) for n in R.sides[i + 1:]]
        strips.append(ProductSet(tuple(fs)))
    return FramePartition(framed, tuple(strips))


class Compression:
    """Order-preserving relabelling of a product set onto an origin box.

    ``forward`` sends t in K(A) = prod [|A_i|]_0 to ((t_1:A_1), ..., (t_d:A_d)),
    the coordinate-wise (t_i+1)-th smallest element.
    """

    def __init__(self, source: ProductSet):
        if source.is_empty:
            raise ValueError("cannot compress a product set with an empty factor")
        self.source = source
        self.target = Rectangle(tuple(len(f) for f in source.factors))

    def forward(self, t: Sequence[int]) -> Point:
        if t not in self.target:
            raise ValueError(f"{tuple(t)} is outside {self.target.sides}")
        return tuple(f[j] for f, j in zip(self.source.factors, t))

    def inverse(self, u: Sequence[int]) -> Point:
        out = []
        for f, x in zip(self.source.factors, u):
            i = bisect.bisect_left(f, x)
            if i == len(f) or f[i] != x:
                raise ValueError(f"{tuple(u)} is not in the source set")
            out.append(i)
        return tuple(out)

    def forward_array(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.int64)
        cols = [np.asarray(f, dtype=np.int64)[t[:, i]]
                for i, f in enumerate(self.source.factors)]
        return np.stack(cols, axis=1)

    def compress_values(self, values: np.ndarray) -> np.ndarray:
        """Compressed realisation on K(A) from a field realisation indexed
        by source coordinates (an ndarray covering max(A_i)+1 per axis)."""
        ix = np.ix_(*(np.asarray(f, dtype=np.int64) for f in self.source.factors))
        return np.asarray(values)[ix]


def compress(A: ProductSet | Iterable[Iterable[int]]) -> Compression:
    if not isinstance(A, ProductSet):
        A = ProductSet(tuple(tuple(f) for f in A))
    return Compression(A)
