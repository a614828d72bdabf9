"""Exact conditional expectations and martingale checks on enumerated universes.

A sigma-algebra is represented by a set of lattice sites G; conditioning on
it groups outcomes by the field's value tuple on G. Sets are always cut down
to the universe's rectangle, so results on infinite-range models are
window-truncated diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from fieldconc.bounds import P_INF, DecayModel, parse_p
from fieldconc.fields import Universe
from fieldconc.frames import Compression, ProductSet
from fieldconc.lattice import Point, Rectangle, as_point, predecessor_mask, sort_points

TOTAL_EXPECTATION_TOL = 1e-14


@dataclass
class ConditionalTable:
    """E[Y | sigma(X_G)] as class means over a partition of the outcomes."""

    classes: np.ndarray  # class id per outcome
    means: np.ndarray  # E[Y | class]
    probs: np.ndarray  # P(class)
    mean: float  # E[Y]

    @property
    def values(self) -> np.ndarray:
        """The conditional expectation as a random variable (per outcome)."""
        return self.means[self.classes]

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    def total_expectation_gap(self) -> float:
        return abs(float(self.probs @ self.means) - self.mean)


def _site_columns(universe: Universe, G) -> list[int]:
    cols = []
    for u in G:
        key = tuple(int(x) for x in u)
        if key not in universe.index:
            raise KeyError(f"site {key} is not tabulated in this universe")
        cols.append(universe.index[key])
    return sorted(set(cols))


def _classes(universe: Universe, cols: Sequence[int]) -> np.ndarray:
    n = universe.n_outcomes
    if not cols:
        return np.zeros(n, dtype=np.int64)
    lab = universe.site_labels()
    key = np.zeros(n, dtype=np.int64)
    for c in cols:
        col = lab[:, c]
        key = key * (int(col.max()) + 1) + col
        if key.max() > 2**40:
            key = np.unique(key, return_inverse=True)[1].ravel()
    return np.unique(key, return_inverse=True)[1].ravel()


def conditional_expectation(universe: Universe, y: np.ndarray, G: Iterable) -> ConditionalTable:
    """Exact E[y | sigma(X_u : u in G)] under the uniform law on outcomes."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (universe.n_outcomes,):
        raise ValueError("target must hold one value per outcome")
    classes = _classes(universe, _site_columns(universe, G))
    counts = np.bincount(classes).astype(np.float64)
    sums = np.bincount(classes, weights=y)
    n = float(universe.n_outcomes)
    table = ConditionalTable(classes, sums / counts, counts / n, float(y.sum() / n))
    gap = table.total_expectation_gap()
    if gap > TOTAL_EXPECTATION_TOL * max(1.0, float(np.abs(y).max(initial=0.0))):
        raise ArithmeticError(f"law of total expectation off by {gap}")
    return table


def lp_norm(z: np.ndarray, p) -> float:
    """L^p norm under the uniform law; p = inf gives the max modulus."""
    p = parse_p(p)
    a = np.abs(np.asarray(z, dtype=np.float64))
    if a.size == 0:
        return 0.0
    if p is P_INF:
        return float(a.max())
    top = float(a.max())
    if top == 0.0:
        return 0.0
    # scale first so large p cannot overflow
    return top * float(np.mean((a / top) ** p)) ** (1.0 / p)


def centered_gap(universe: Universe, y: np.ndarray, G: Iterable, p) -> float:
    """||E[y | X_G] - E y||_p."""
    table = conditional_expectation(universe, y, G)
    return lp_norm(table.values - table.mean, p)


def generating_set(rect: Rectangle, t: Sequence[int], r: int, kind: str = "M") -> np.ndarray:
    """Sites of ``rect`` generating the lag-r sigma-algebra around t.

    ``kind="M"`` keeps u with max_i (t_i - u_i) >= r; ``kind="M'"`` keeps u
    with |u - t|_inf >= r.
    """
    pts = rect.array()
    diff = np.asarray(t, dtype=np.int64)[None, :] - pts
    if kind == "M":
        mask = diff.max(axis=1) >= r
    elif kind in ("M'", "Mprime"):
        mask = np.abs(diff).max(axis=1) >= r
    else:
        raise ValueError(f"unknown sigma-algebra kind {kind!r}")
    return pts[mask]


def exact_wd_coefficient(universe: Universe, t: Sequence[int], r: int, p=2.0,
                         kind: str = "M") -> float:
    """||E[X_t | M_{t,r}] - E X_t||_p with M_{t,r} cut to the universe's rectangle."""
    t = as_point(t)
    G = generating_set(universe.rect, t, r, kind)
    return centered_gap(universe, universe.column(t), G, p)


def wd_profile(universe: Universe, t: Sequence[int], lags: Iterable[int], p=2.0,
               kind: str = "M") -> list[float]:
    return [exact_wd_coefficient(universe, t, r, p, kind) for r in lags]


# -- martingale decomposition -------------------------------------------------

def top_scale(A: Iterable[Sequence[int]]) -> int:
    """Smallest K with pi_K(t) = 0 for every t in A."""
    return max((int(x).bit_length() for t in A for x in t), default=0)


class _PastCache:
    """Memoised E[X_t | X on strict scale-k predecessors of pi_k(t)]."""

    def __init__(self, universe: Universe):
        self.u = universe
        self.pts = universe.sites
        self.tables: dict[tuple[int, Point], np.ndarray] = {}

    def classes(self, k: int, base: Point) -> np.ndarray:
        key = (k, base)
        if key not in self.tables:
            mask = predecessor_mask(base, k, self.pts, strict=True)
            cols = np.flatnonzero(mask).tolist()
            self.tables[key] = _classes(self.u, cols)
        return self.tables[key]

    def cond(self, y: np.ndarray, k: int, t: Point) -> np.ndarray:
        base = tuple((x >> k) << k for x in t)
        cls = self.classes(k, base)
        means = np.bincount(cls, weights=y) / np.bincount(cls)
        return means[cls]


def _points(A) -> list[Point]:
    if isinstance(A, (ProductSet, Rectangle)):
        return [as_point(t) for t in A.points()]
    return sorted({as_point(t) for t in A})


def martingale_increments(universe: Universe, A, k: int,
                          cache: _PastCache | None = None) -> dict[Point, np.ndarray]:
    """Per-outcome increments Z_{b,k}(A) for every b in pi_k(A).

    k = 0: Z_{t,0} = X_t - E[X_t | F_0(t)].
    k >= 1: Z_{b,k} = sum over t in C_{k,b} cap A of
            E[X_t | F_{k-1}(t)] - E[X_t | F_k(t)],
    where F_j(t) is generated by X on the strict scale-j predecessors of t.
    Summed over b and k = 0..top_scale(A) this telescopes to S_A.
    """
    pts = _points(A)
    for t in pts:
        if t not in universe.index:
            raise KeyError(f"{t} lies outside the universe's rectangle")
    cache = cache or _PastCache(universe)
    out: dict[Point, np.ndarray] = {}
    for t in pts:
        x = universe.column(t)
        b = tuple((c >> k) << k for c in t)
        if k == 0:
            z = x - cache.cond(x, 0, t)
        else:
            z = cache.cond(x, k - 1, t) - cache.cond(x, k, t)
        out[b] = out[b] + z if b in out else z
    return out


def decomposition_error(universe: Universe, A) -> float:
    """max over outcomes of |sum_k sum_b Z_{b,k}(A) - S_A|."""
    pts = _points(A)
    cache = _PastCache(universe)
    total = np.zeros(universe.n_outcomes)
    for k in range(top_scale(pts) + 1):
        for z in martingale_increments(universe, pts, k, cache).values():
            total += z
    s = universe.sum_over(pts)
    return float(np.abs(total - s).max(initial=0.0))


def check_martingale(universe: Universe, A, k: int) -> float:
    """Largest |E[Z_{b,k} | F_k(b')]| over b' before b in pi_k(A).

    F_k(b') is generated by X on the weak scale-k predecessors of b'.
    """
    incs = martingale_increments(universe, A, k)
    bases = sort_points(incs)
    worst = 0.0
    for j, bp in enumerate(bases[:-1]):
        mask = predecessor_mask(bp, k, universe.sites, strict=False)
        cls = _classes(universe, np.flatnonzero(mask).tolist())
        counts = np.bincount(cls)
        for b in bases[j + 1:]:
            means = np.bincount(cls, weights=incs[b]) / counts
            worst = max(worst, float(np.abs(means).max()))
    return worst


# -- compression ----------------------------------------------------------------

def compressed_universe(universe: Universe, A: ProductSet) -> tuple[Universe, Compression]:
    """The universe of the compressed field on K(A)."""
    comp = Compression(A)
    target = comp.target
    src = comp.forward_array(target.array())
    cols = [universe.index[tuple(int(x) for x in row)] for row in src]
    sites = target.array()
    index = {tuple(int(x) for x in row): i for i, row in enumerate(sites)}
    sub = Universe(universe.model, target, universe.noise_sites, universe.signs,
                   universe.values[:, cols], sites, index)
    return sub, comp


@dataclass(frozen=True)
class CompressionCheck:
    compressed: float  # max over t in K(A) of the compressed coefficient
    envelope: float  # M_p phi_p(r) of the original field
    original: float  # max over t of the original coefficient at (t:A)

    @property
    def passed(self) -> bool:
        slack = 1e-12
        return self.compressed <= self.envelope + slack and self.compressed <= self.original + slack


def compression_wd_check(universe: Universe, A, p, r: int, model: DecayModel) -> CompressionCheck:
    """Exact lag-r coefficients of the compressed field against the envelope."""
    if not isinstance(A, ProductSet):
        A = ProductSet(tuple(tuple(f) for f in A))
    sub, comp = compressed_universe(universe, A)
    worst_c = worst_o = 0.0
    for t in sub.rect.points():
        worst_c = max(worst_c, exact_wd_coefficient(sub, t, r, p))
        worst_o = max(worst_o, exact_wd_coefficient(universe, comp.forward(t), r, p))
    return CompressionCheck(worst_c, model.envelope(r), worst_o)
