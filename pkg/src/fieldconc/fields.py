"""Synthetic random fields driven by Rademacher noise.

Every field here is linear in a finite set of independent signs, so a
realisation on a rectangle is ``noise @ A.T`` for a design matrix A, and
small configurations can be enumerated exactly (all 2^B sign patterns).

Seeding: replicate ``j`` of master seed ``s`` draws from a Philox stream
keyed by ``SeedSequence(s, spawn_key=(j,))`` so results never depend on how
replicates are scheduled.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from fieldconc.bounds import (DecayModel, Exponent, FiniteRange, Polynomial,
                              Tabulated, P_INF, parse_p)
from fieldconc.lattice import Rectangle

DEFAULT_CAP = 20
LABEL_TOL = 1e-12


@dataclass(frozen=True)
class IIDRademacher:
    d: int = 1


@dataclass(frozen=True)
class BlockRademacher:
    """n^-alpha times one shared sign on the cube [n]_0^d, zero elsewhere."""

    n: int
    alpha: float
    d: int = 2

    def __post_init__(self):
        if self.n < 1 or not self.alpha > 0:
            raise ValueError("block field needs n >= 1 and alpha > 0")

    @property
    def magnitude(self) -> float:
        return float(self.n) ** (-float(self.alpha))


@dataclass(frozen=True, eq=False)
class MovingAverage:
    """X_t = sum_{|s|_inf <= w} a_s eps_{t-s}, with sum a_s^2 = 1."""

    w: int
    d: int = 1
    kernel: np.ndarray | None = None

    def __post_init__(self):
        if self.w < 0:
            raise ValueError("moving average radius must be >= 0")
        shape = (2 * self.w + 1,) * self.d
        k = np.ones(shape) if self.kernel is None else np.asarray(self.kernel, float)
        if k.shape != shape:
            raise ValueError(f"kernel shape {k.shape} != {shape}")
        k = k / math.sqrt(float((k ** 2).sum()))
        object.__setattr__(self, "kernel", k)

    def taps(self):
        offs = np.array(list(itertools.product(range(-self.w, self.w + 1), repeat=self.d)),
                        dtype=np.int64)
        return offs, self.kernel.ravel().copy()


@dataclass(frozen=True, eq=False)
class CausalLinear:
    """X_t = sum_{0 <=cw s, |s|_inf <= L} a_s eps_{t-s}, a_s prop. to (1+|s|_inf)^-beta."""

    beta: float
    L: int
    d: int = 1
    kernel: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.L < 0 or not self.beta > 0:
            raise ValueError("causal field needs L >= 0 and beta > 0")
        offs = np.array(list(itertools.product(range(self.L + 1), repeat=self.d)))
        size = offs.max(axis=1)
        k = (1.0 + size) ** (-float(self.beta))
        k = k / math.sqrt(float((k ** 2).sum()))
        object.__setattr__(self, "kernel", k.reshape((self.L + 1,) * self.d))

    def taps(self):
        offs = np.array(list(itertools.product(range(self.L + 1), repeat=self.d)),
                        dtype=np.int64)
        return offs, self.kernel.ravel().copy()


@dataclass(frozen=True, eq=False)
class Padded:
    """``inner`` on ``window``, identically zero outside it."""

    inner: "FieldModel"
    window: Rectangle

    @property
    def d(self) -> int:
        return self.inner.d


FieldModel = Union[IIDRademacher, BlockRademacher, MovingAverage, CausalLinear, Padded]


def pad_zero(model: FieldModel, window: Rectangle) -> Padded:
    if window.d != model.d:
        raise ValueError("window dimension does not match the field")
    return Padded(model, window)


@dataclass
class SampleGrid:
    rect: Rectangle
    values: np.ndarray

    def __post_init__(self):
        if self.values.size != self.rect.cardinality:
            raise ValueError("grid size does not match the rectangle")

    @property
    def total(self) -> float:
        return float(self.values.sum())


@dataclass
class Design:
    """Field values on R as a sparse linear map of the noise signs.

    Entry (rows[j], cols[j]) of the |R| x bits matrix is vals[j]; rows follow
    ``R.array()`` order.
    """

    rect: Rectangle
    noise_sites: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @property
    def bits(self) -> int:
        return self.noise_sites.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        A = np.zeros((self.rect.cardinality, self.bits))
        np.add.at(A, (self.rows, self.cols), self.vals)
        return A

    @property
    def sum_weights(self) -> np.ndarray:
        return np.bincount(self.cols, weights=self.vals, minlength=self.bits)

    def apply(self, eps: np.ndarray) -> np.ndarray:
        """Values on R (flat) for one sign vector."""
        return np.bincount(self.rows, weights=self.vals * eps[self.cols],
                           minlength=self.rect.cardinality)


def _check(model: FieldModel, R: Rectangle) -> None:
    if model.d != R.d:
        raise ValueError(f"field has d={model.d}, rectangle has d={R.d}")


def design(model: FieldModel, R: Rectangle) -> Design:
    """Noise sites touching R and the linear map from signs to values."""
    _check(model, R)
    pts = R.array()
    return _design(model, pts, np.ones(pts.shape[0], dtype=bool), R)


def _design(model, pts, mask, R) -> Design:
    if isinstance(model, Padded):
        inside = mask & np.all(pts < np.asarray(model.window.sides), axis=1)
        return _design(model.inner, pts, inside, R)
    if isinstance(model, BlockRademacher):
        rows = np.flatnonzero(mask & np.all(pts < model.n, axis=1))
        return Design(R, np.zeros((1, R.d), dtype=np.int64), rows,
                      np.zeros(rows.size, dtype=np.int64), np.full(rows.size, model.magnitude))
    if isinstance(model, IIDRademacher):
        offs, w = np.zeros((1, R.d), dtype=np.int64), np.ones(1)
    else:
        offs, w = model.taps()
    rows = np.flatnonzero(mask)
    src = pts[rows]
    cand = (src[:, None, :] - offs[None, :, :]).reshape(-1, R.d)
    if cand.shape[0] == 0:
        empty = np.zeros(0, dtype=np.int64)
        return Design(R, np.zeros((0, R.d), dtype=np.int64), empty, empty, np.zeros(0))
    sites, inv = np.unique(cand, axis=0, return_inverse=True)
    return Design(R, sites, np.repeat(rows, offs.shape[0]), inv.ravel(),
                  np.tile(w, rows.size))


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replicate),))
    return np.random.Generator(np.random.Philox(ss))


def rademacher(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.integers(0, 2, size=size, dtype=np.int8).astype(np.float64) * 2.0 - 1.0


def sample(model: FieldModel, R: Rectangle, seed: int, replicate: int = 0) -> SampleGrid:
    """One realisation on R; a pure function of (model, R, seed, replicate)."""
    des = design(model, R)
    eps = rademacher(replicate_rng(seed, replicate), des.bits)
    return SampleGrid(R, des.apply(eps).reshape(R.sides))


def sample_sums(model: FieldModel, R: Rectangle, seed: int, replicates: int,
                start: int = 0, des: Design | None = None) -> np.ndarray:
    """S_R for replicates start, ..., start + replicates - 1."""
    des = des or design(model, R)
    w = des.sum_weights
    out = np.empty(replicates)
    for i in range(replicates):
        eps = rademacher(replicate_rng(seed, start + i), des.bits)
        out[i] = float(eps @ w)
    return out


def _lp_rademacher_bound(b: np.ndarray, p: Exponent) -> float:
    """Upper bound on ||sum_j b_j eps_j||_p."""
    l2 = float(np.sqrt((b ** 2).sum()))
    l1 = float(np.abs(b).sum())
    if p is P_INF:
        return l1
    if p == 2:
        return l2
    return min(math.sqrt(p) * l2, l1)


def wd_envelope(model: FieldModel, p=2.0) -> DecayModel:
    """A decay envelope this field provably satisfies.

    Linear fields condition through the larger noise sigma-algebra; by
    Jensen the gap at lag r is at most the L^p norm of the kernel part with
    |s|_inf >= r (causal) and vanishes once r > 2w (moving average).
    """
    p = parse_p(p)
    if isinstance(model, Padded):
        return wd_envelope(model.inner, p)
    if isinstance(model, IIDRademacher):
        return DecayModel(FiniteRange(0), 1.0, p)
    if isinstance(model, BlockRademacher):
        return DecayModel(Polynomial(1.0, model.alpha), 1.0, p)
    if isinstance(model, MovingAverage):
        m_p = _lp_rademacher_bound(model.kernel.ravel(), p)
        return DecayModel(FiniteRange(2 * model.w), m_p, p)
    if isinstance(model, CausalLinear):
        offs, a = model.taps()
        size = offs.max(axis=1)
        m_p = _lp_rademacher_bound(a, p)
        vals = [1.0]
        for r in range(1, model.L + 1):
            vals.append(min(vals[-1], _lp_rademacher_bound(a[size >= r], p) / m_p))
        return DecayModel(Tabulated(tuple(vals)), m_p, p)
    raise TypeError(f"unknown field model {model!r}")


@dataclass
class Universe:
    """Every sign pattern of the noise, with field values on R.

    ``values[j, i]`` is the field at ``sites[i]`` under outcome ``j``; all
    outcomes have probability 2^-bits.
    """

    model: FieldModel
    rect: Rectangle
    noise_sites: np.ndarray
    signs: np.ndarray
    values: np.ndarray
    sites: np.ndarray = field(repr=False)
    index: dict = field(repr=False)
    _labels: np.ndarray | None = field(default=None, init=False, repr=False)

    @property
    def bits(self) -> int:
        return self.noise_sites.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.values.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return np.full(self.n_outcomes, 1.0 / self.n_outcomes)

    def column(self, t) -> np.ndarray:
        return self.values[:, self.index[tuple(int(x) for x in t)]]

    def site_labels(self, tol: float = LABEL_TOL) -> np.ndarray:
        """Integer codes per (outcome, site): equal codes mean values within tol."""
        if self._labels is None:
            lab = np.empty(self.values.shape, dtype=np.int64)
            for i in range(self.values.shape[1]):
                col = self.values[:, i]
                order = np.argsort(col, kind="stable")
                jumps = np.diff(col[order]) > tol
                lab[order, i] = np.concatenate(([0], np.cumsum(jumps)))
            self._labels = lab
        return self._labels

    def sum_over(self, points) -> np.ndarray:
        cols = [self.index[tuple(int(x) for x in t)] for t in points]
        if not cols:
            return np.zeros(self.n_outcomes)
        return self.values[:, cols].sum(axis=1)


class UniverseTooLarge(ValueError):
    pass


def all_signs(bits: int) -> np.ndarray:
    codes = np.arange(2 ** bits, dtype=np.int64)
    shifts = np.arange(bits, dtype=np.int64)
    return (((codes[:, None] >> shifts[None, :]) & 1) * 2 - 1).astype(np.int8)


def enumerate_universe(model: FieldModel, R: Rectangle, cap: int = DEFAULT_CAP) -> Universe:
    des = design(model, R)
    if des.bits > cap:
        raise UniverseTooLarge(f"{des.bits} noise bits exceed the cap of {cap}")
    signs = all_signs(des.bits)
    values = signs.astype(np.float64) @ des.matrix.T
    sites = R.array()
    index = {tuple(int(x) for x in row): i for i, row in enumerate(sites)}
    return Universe(model, R, des.noise_sites, signs, values, sites, index)
