"""Exhaustive verification suites for the lattice, frame and oracle layers."""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Callable

import numpy as np

from fieldconc import _kernels
from fieldconc.bounds import DecayModel, Exponential, Polynomial, analytic_delta
from fieldconc.fields import (BlockRademacher, CausalLinear, IIDRademacher, MovingAverage,
                              enumerate_universe, pad_zero, sample, wd_envelope)
from fieldconc.frames import (Compression, DeltaSeq, ProductSet, constraint_limit,
                              frame_mask, framed_partition, lambda_member)
from fieldconc.lattice import (UNBOUNDED, Rectangle, cell_sum_of_squares, morton_key,
                               precedes, predecessors_at_scale, separation_distance)
from fieldconc.oracle import (check_martingale, compression_wd_check, decomposition_error,
                              exact_wd_coefficient)

MARTINGALE_TOL = 1e-10
DECOMPOSITION_TOL = 1e-12
SLACK = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}" + (f": {self.detail}" if self.detail else "")


def _result(name: str, bad: int, what: str = "counterexamples") -> CheckResult:
    return CheckResult(name, bad == 0, f"{bad} {what}")


# -- order ----------------------------------------------------------------------

def _index_of(W: np.ndarray, side: int) -> Callable[[np.ndarray], np.ndarray]:
    def idx(P: np.ndarray) -> np.ndarray:
        out = np.zeros(P.shape[0], dtype=np.int64)
        for i in range(W.shape[1]):
            out = out * side + P[:, i]
        return out
    return idx


def order_suite(side: int = 8, dims=(1, 2, 3), samples: int = 2000, seed: int = 0) -> list[CheckResult]:
    out = []
    rng = random.Random(seed)
    levels = side.bit_length()
    for d in dims:
        W = Rectangle.cube(side, d).array()
        n = W.shape[0]
        idx = _index_of(W, side)
        M = _kernels.compare_matrix(W).astype(np.int64)
        off = ~np.eye(n, dtype=bool)
        out.append(_result(f"order d={d} totality", int(np.count_nonzero(M[off] == 0))
                           + int(np.count_nonzero(np.diag(M)))))
        out.append(_result(f"order d={d} antisymmetry", int(np.count_nonzero(M != -M.T))))
        L = (M < 0).astype(np.int32)
        out.append(_result(f"order d={d} transitivity (all triples)",
                           int(np.count_nonzero((L @ L > 0) & (L == 0)))))

        pairs = [(tuple(W[rng.randrange(n)]), tuple(W[rng.randrange(n)])) for _ in range(samples)]
        mismatch = sum(int(precedes(a, b)) != M[idx(np.array([a]))[0], idx(np.array([b]))[0]]
                       for a, b in pairs)
        mismatch += sum((morton_key(a) > morton_key(b)) - (morton_key(a) < morton_key(b))
                        != int(precedes(a, b)) for a, b in pairs)
        out.append(_result(f"order d={d} scalar/kernel/morton agreement", mismatch))

        proj = [(W >> k) << k for k in range(levels + 1)]
        bad0 = 0
        for k, l in itertools.product(range(levels + 1), repeat=2):
            if l >= k:
                bad0 += int(np.count_nonzero((proj[k] >> l) << l != proj[l]))
                bad0 += int(np.count_nonzero((proj[l] >> k) << k != proj[l]))
        out.append(_result(f"order d={d} projection composition", bad0))

        cw = np.all(W[:, None, :] <= W[None, :, :], axis=2)
        lex = np.zeros((n, n), dtype=bool)
        # rows of W are lexicographically sorted, so lex <= is index order
        lex[np.triu_indices(n)] = True
        out.append(_result(f"order d={d} cw implies lex and order",
                           int(np.count_nonzero(cw & ~lex)) + int(np.count_nonzero(cw & (M > 0)))))

        bad2 = 0
        for k, l in itertools.product(range(levels + 1), repeat=2):
            if k >= l:
                bad2 += int(np.count_nonzero(_kernels.compare_many(proj[k], proj[l]) > 0))
        out.append(_result(f"order d={d} coarser projection precedes", bad2))

        bad3 = bad4 = bad5 = bad6 = 0
        strict_prev = weak_prev = None
        for k in range(levels + 1):
            pk = proj[k]
            Mk = M[np.ix_(idx(pk), idx(pk))]
            bad3 += int(np.count_nonzero((M < 0) & (Mk > 0)))
            strict = Mk < 0  # strict[u, t]: u in Pi_k^<(t)
            weak = Mk <= 0
            # (iv): every t in a cell projects onto its base and shares its sets
            bases = idx(pk)
            bad4 += int(np.count_nonzero(idx(pk[bases]) != bases))
            bad4 += int(np.count_nonzero(strict != strict[:, bases]))
            bad4 += int(np.count_nonzero(weak != weak[:, bases]))
            # (v): strict set is {u : u before pi_k(t)}; weak set adds the cell
            bad5 += int(np.count_nonzero(strict != (M[:, bases] < 0)))
            same_cell = bases[:, None] == bases[None, :]
            bad5 += int(np.count_nonzero(weak != (strict | same_cell)))
            if k > 0:
                bad6 += int(np.count_nonzero(strict & ~strict_prev))
                bad6 += int(np.count_nonzero(strict_prev & ~weak_prev))
                bad6 += int(np.count_nonzero(weak_prev & ~weak))
            strict_prev, weak_prev = strict, weak
            window = Rectangle.cube(side, d)
            for j in rng.sample(range(n), min(8, n)):
                t = tuple(int(x) for x in W[j])
                lib = predecessors_at_scale(t, k, window)
                ref = {tuple(int(x) for x in W[u]) for u in np.flatnonzero(strict[:, j])}
                bad5 += int(lib != ref)
        out.append(_result(f"order d={d} projection monotone", bad3))
        out.append(_result(f"order d={d} cells share predecessor sets", bad4))
        out.append(_result(f"order d={d} predecessor characterisations", bad5))
        out.append(_result(f"order d={d} nesting", bad6))
    return out


# -- separation -----------------------------------------------------------------

def separation_closed_form(t, k: int):
    side = 1 << k
    vals = [x % side + 1 for x in t if x >= side]
    return min(vals) if vals else UNBOUNDED


def separation_suite(max_coord: int = 31, max_k: int = 3, dims=(1, 2)) -> list[CheckResult]:
    out = []
    for d in dims:
        bad = mismatch = checked = 0
        for t in itertools.product(range(max_coord + 1), repeat=d):
            for k in range(max_k + 1):
                dist = separation_distance(t, k)
                mismatch += dist != separation_closed_form(t, k)
                for delta in range(1 << k):
                    if any(lambda_member(x, k, delta) for x in t):
                        continue
                    checked += 1
                    bad += not dist >= delta + 1
        out.append(_result(f"separation d={d} distance >= delta+1 ({checked} cases)", bad))
        out.append(_result(f"separation d={d} exhaustive search matches closed form", mismatch))
    return out


# -- cells ------------------------------------------------------------------------

def brute_cell_sum(R: Rectangle, k: int) -> int:
    """Sum over cells of |C cap R|^2 by enumerating every point of R."""
    bases = R.array() >> k
    code = np.zeros(bases.shape[0], dtype=np.int64)
    for i, n in enumerate(R.sides):
        code = code * ((n >> k) + 1) + bases[:, i]
    cnt = np.bincount(code)
    return int((cnt.astype(np.int64) ** 2).sum())


def cells_suite(cases: int = 200, seed: int = 0) -> list[CheckResult]:
    rng = random.Random(seed)
    bad_eq = bad_bound = bad_meet = 0
    for _ in range(cases):
        d = rng.randint(1, 3)
        R = Rectangle(tuple(rng.randint(1, 100) for _ in range(d)))
        k = rng.randint(0, 7)
        s, b = cell_sum_of_squares(R, k)
        bad_eq += s != brute_cell_sum(R, k)
        bad_bound += s > b
        meet = math.prod(min(1 << k, n) for n in R.sides)
        bad_meet += b != R.cardinality * meet
    return [_result(f"cells product formula equals brute force ({cases} cases)", bad_eq),
            _result("cells sum <= |R| |R cap C_k0|", bad_bound),
            _result("cells bound equals |R| prod min(2^k, N_i)", bad_meet)]


# -- frames -----------------------------------------------------------------------

def feasible_deltas(d: int, m: int, seed: int = 0, count: int = 40) -> list[DeltaSeq]:
    """Budget-saturating and random feasible width sequences of length m."""
    limit = constraint_limit(d)
    seqs = [DeltaSeq.zeros(m)]
    for k in range(1, m + 1):
        # constant v from scale k on; v sum_{j>=k} 2^-j < v 2^{1-k}
        v = math.floor(limit * 2 ** (k - 1))
        if v:
            seqs.append(DeltaSeq((0,) * (k - 1) + (min(v, 2 ** k),) * (m - k + 1)))
    for n in (2 ** m, 2 ** m + 3):
        R = Rectangle.cube(n, d)
        for phi in (Polynomial(1, 0.25), Polynomial(1, 1.0), Polynomial(1, 3.0),
                    Exponential(1, 1, 1)):
            seqs.append(analytic_delta(R, DecayModel(phi)))
    rng = random.Random(seed)
    while len(seqs) < count:
        ds, prev = [], 0
        for k in range(1, m + 1):
            prev = min(2 ** k, prev + rng.choice([0, 0, 0, 1, 2 ** max(0, k - 6)]))
            ds.append(prev)
        value = DeltaSeq(tuple(ds)).constraint_value(m)
        if value > limit:
            # uniform rescaling then flooring keeps the sequence nondecreasing
            ds = [math.floor(x * limit / value) for x in ds]
        seqs.append(DeltaSeq(tuple(ds)))
    return [s for s in seqs if s.constraint_value(m) <= limit]


def frames_suite(max_n: int = 2**12, seed: int = 0) -> list[CheckResult]:
    rng = random.Random(seed)
    out = []
    m = max_n.bit_length() - 1
    # axis counts |Lambda^c|, |Lambda| for every N <= max_n at once
    bad_axis = bad_strip = 0
    for d in (1, 2, 3):
        for delta in feasible_deltas(d, m, seed):
            mask = frame_mask(max_n, delta)
            inside = np.cumsum(mask)
            N = np.arange(1, max_n + 1)
            bad_axis += int(np.count_nonzero(inside * 4 * d * d > N))
            for _ in range(20):
                sides = [rng.randint(1, max_n) for _ in range(d)]
                lam = [int(inside[n - 1]) for n in sides]
                card = math.prod(sides)
                for i in range(d):
                    strip = math.prod(n - c for n, c in zip(sides[:i], lam[:i])) * lam[i] \
                        * math.prod(sides[i + 1:])
                    bad_strip += strip * 4 * d * d > card
    out.append(_result(f"frames |Lambda cap [N]| <= N/(4d^2) for N <= {max_n}", bad_axis))
    out.append(_result("frames strip bound |R cap Delta_i| <= |R|/(4d^2)", bad_strip))

    bad_part = bad_count = 0
    for _ in range(60):
        d = rng.randint(1, 3)
        R = Rectangle(tuple(rng.randint(1, 40 if d < 3 else 12) for _ in range(d)))
        m = max(1, R.max_scale)
        delta = DeltaSeq(tuple(sorted(rng.randint(0, 2 ** k) for k in range(1, m + 1))))
        delta = DeltaSeq(tuple(min(x, 2 ** k) for k, x in enumerate(delta.deltas, 1)))
        part = framed_partition(R, delta)
        seen: dict = {}
        for j, piece in enumerate(part.parts()):
            for t in piece.points():
                if t in seen or t not in R:
                    bad_part += 1
                seen[t] = j
        bad_part += len(seen) != R.cardinality
        lam = [frame_mask(n, delta) for n in R.sides]
        for t in R.points():
            in_framed = not any(lam[i][x] for i, x in enumerate(t))
            bad_count += in_framed != (t in part.framed)
            if not in_framed:
                first = min(i for i, x in enumerate(t) if lam[i][x])
                bad_count += t not in part.strips[first]
    out.append(_result("frames partition disjoint and exhaustive", bad_part))
    out.append(_result("frames membership matches definition", bad_count))
    return out


# -- compression ------------------------------------------------------------------

def _small_product_sets(rng: random.Random, count: int) -> list[ProductSet]:
    sets = [ProductSet(((0, 1, 3), (2,))), ProductSet(((0, 1, 3, 4, 6),))]
    while len(sets) < count:
        d = rng.randint(1, 2)
        fs = tuple(tuple(sorted(rng.sample(range(9), rng.randint(1, 4)))) for _ in range(d))
        sets.append(ProductSet(fs))
    return sets


def compression_suite(seed: int = 0) -> list[CheckResult]:
    rng = random.Random(seed)
    bad_mono = bad_key = bad_bij = 0
    for A in _small_product_sets(rng, 40):
        comp = Compression(A)
        K = list(comp.target.points())
        img = [comp.forward(t) for t in K]
        bad_bij += len(set(img)) != len(A) or any(x not in A for x in img)
        bad_bij += any(comp.inverse(y) != t for t, y in zip(K, img))
        for t, u in itertools.product(K, repeat=2):
            ft, fu = comp.forward(t), comp.forward(u)
            if all(a <= b for a, b in zip(t, u)):
                bad_mono += not all(a <= b for a, b in zip(ft, fu))
            rhs = max(a - b for a, b in zip(t, u))
            # only nonnegative lags enter the sigma-algebras; below 0 gaps can shrink
            if rhs >= 0:
                bad_key += max(a - b for a, b in zip(ft, fu)) < rhs
    out = [_result("compression bijective onto A", bad_bij),
           _result("compression coordinatewise monotone", bad_mono),
           _result("compression sup_i gap never shrinks (nonnegative lags)", bad_key)]

    bad_sum = 0
    models = [IIDRademacher(2), MovingAverage(1, 2), CausalLinear(2.0, 3, 2), BlockRademacher(5, 1.0, 2)]
    for j, model in enumerate(models):
        R = Rectangle((12, 12))
        for rep in range(5):
            grid = sample(model, R, seed=seed + j, replicate=rep)
            A = ProductSet(tuple(tuple(sorted(rng.sample(range(12), rng.randint(1, 12))))
                                 for _ in range(2)))
            comp = Compression(A)
            direct = sum(grid.values[t] for t in A.points())
            compressed = comp.compress_values(grid.values)
            bad_sum += float(compressed.sum()) != float(direct) and \
                abs(float(compressed.sum()) - float(direct)) > 1e-12
    out.append(_result("compression preserves sums on sampled realisations", bad_sum))

    worst = []
    bad_wd = 0
    configs = [
        (IIDRademacher(2), Rectangle((4, 4)), ProductSet(((0, 1, 3), (2,)))),
        (IIDRademacher(2), Rectangle((4, 4)), ProductSet(((0, 2), (1, 3)))),
        (MovingAverage(1, 1), Rectangle((8,)), ProductSet(((0, 1, 3, 4, 6),))),
        (MovingAverage(1, 1), Rectangle((8,)), ProductSet(((0, 2, 5, 7),))),
        (MovingAverage(2, 1), Rectangle((8,)), ProductSet(((0, 1, 4, 7),))),
        (CausalLinear(2.0, 3, 1), Rectangle((10,)), ProductSet(((1, 2, 5, 6, 9),))),
        (BlockRademacher(4, 1.0, 2), Rectangle((6, 6)), ProductSet(((0, 3, 5), (1, 2, 4)))),
        (MovingAverage(1, 2), Rectangle((2, 2)), ProductSet(((0, 1), (1,)))),
        (MovingAverage(1, 2), Rectangle((2, 2)), ProductSet(((0, 1), (0, 1)))),
    ]
    for model, R, A in configs:
        u = enumerate_universe(model, R)
        for p in (2.0, 4.0):
            env = wd_envelope(model, p)
            for r in range(0, 5):
                res = compression_wd_check(u, A, p, r, env)
                bad_wd += not res.passed
                worst.append(res.compressed - res.envelope)
    out.append(CheckResult("compression preserves the WD envelope (tiny universes)", bad_wd == 0,
                           f"{bad_wd} failures, max compressed-envelope gap {max(worst):.3g}"))
    return out


# -- martingale -------------------------------------------------------------------

def martingale_suite() -> list[CheckResult]:
    out = []
    configs = [
        ("iid [4]^2", IIDRademacher(2), Rectangle((4, 4)), range(3)),
        ("moving average w=1 [8]", MovingAverage(1, 1), Rectangle((8,)), range(4)),
        ("causal beta=2 L=2 [8]", CausalLinear(2.0, 2, 1), Rectangle((8,)), range(4)),
        ("padded moving average [3x3] in [4]^2", pad_zero(MovingAverage(1, 2), Rectangle((2, 2))),
         Rectangle((4, 4)), range(3)),
    ]
    for name, model, R, ks in configs:
        u = enumerate_universe(model, R)
        viol = {k: check_martingale(u, R, k) for k in ks}
        worst = max(viol.values())
        detail = ", ".join(f"k={k}: {v:.2e}" for k, v in viol.items())
        out.append(CheckResult(f"martingale {name} ({u.n_outcomes} outcomes)",
                               worst <= MARTINGALE_TOL, detail))
        err = decomposition_error(u, R)
        out.append(CheckResult(f"decomposition {name}", err <= DECOMPOSITION_TOL, f"max error {err:.2e}"))
    return out


# -- weak dependence ------------------------------------------------------------

def wd_suite() -> list[CheckResult]:
    out = []
    bad_zero = bad_mono = bad_prime = bad_env = 0
    configs = [(MovingAverage(0, 1), Rectangle((8,))), (MovingAverage(1, 1), Rectangle((8,))),
               (MovingAverage(2, 1), Rectangle((8,))), (MovingAverage(1, 2), Rectangle((2, 2))),
               (IIDRademacher(2), Rectangle((3, 3))), (CausalLinear(2.0, 3, 1), Rectangle((10,))),
               (CausalLinear(1.0, 1, 2), Rectangle((3, 3))),
               (pad_zero(MovingAverage(1, 1), Rectangle((5,))), Rectangle((8,))),
               (BlockRademacher(4, 1.0, 2), Rectangle((6, 6)))]
    for model, R in configs:
        u = enumerate_universe(model, R)
        for p in (2.0, 4.0, "inf"):
            env = wd_envelope(model, p)
            for t in R.points():
                lags = range(0, max(R.sides) + 1)
                coef = [exact_wd_coefficient(u, t, r, p) for r in lags]
                prime = [exact_wd_coefficient(u, t, r, p, kind="M'") for r in lags]
                bad_mono += sum(b > a + SLACK for a, b in zip(coef, coef[1:]))
                bad_prime += sum(a > b + SLACK for a, b in zip(coef, prime))
                bad_env += sum(c > env.envelope(r) + SLACK for r, c in zip(lags, coef))
                if isinstance(model, MovingAverage):
                    bad_zero += sum(c > SLACK for r, c in zip(lags, coef) if r >= 2 * model.w + 1)
    out.append(_result("wd moving average coefficient vanishes for r >= 2w+1", bad_zero))
    out.append(_result("wd coefficient nonincreasing in r", bad_mono))
    out.append(_result("wd M-coefficient <= M'-coefficient", bad_prime))
    out.append(_result("wd exact coefficient <= declared envelope", bad_env))

    bad_block = 0
    for n, alpha in ((4, 1.0), (3, 0.5), (5, 2.0)):
        model = BlockRademacher(n, alpha, 2)
        u = enumerate_universe(model, Rectangle((n + 1, n + 1)))
        env = wd_envelope(model, 2.0)
        bad_block += env.m_p != 1.0
        for t in u.rect.points():
            for r in range(0, n + 2):
                c = exact_wd_coefficient(u, t, r, 2.0)
                bad_block += c > min(1.0, r ** -alpha if r else 1.0) + SLACK
    out.append(_result("wd block coefficient <= min(1, r^-alpha) with M_p = 1", bad_block))
    return out


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "order": order_suite,
    "separation": separation_suite,
    "cells": cells_suite,
    "frames": frames_suite,
    "compression": compression_suite,
    "martingale": martingale_suite,
    "wd": wd_suite,
}


def run_suite(name: str) -> list[CheckResult]:
    if name == "all":
        return [r for fn in SUITES.values() for r in fn()]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    return SUITES[name]()
