"""Seeded Monte Carlo estimates of ||S_R||_p and sub-Gaussian diagnostics.

Replicate j always uses the same random stream whatever the thread count,
and per-replicate sums are assembled in index order before any reduction,
so results are bit-identical regardless of scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from fieldconc.bounds import DecayModel, analytic_delta, psi
from fieldconc.fields import FieldModel, design, sample_sums
from fieldconc.lattice import Rectangle

N_BATCHES = 8
MAX_P = 64.0
MIN_REPLICATES = 16
_CHUNK = 256


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    se: float
    replicates: int
    seed: int
    p: float


def simulate_sums(model: FieldModel, R: Rectangle, replicates: int, seed: int,
                  threads: int = 1) -> np.ndarray:
    """S_R for replicates 0..replicates-1, in replicate order."""
    if threads < 1:
        raise ValueError("threads must be >= 1")
    des = design(model, R)
    starts = list(range(0, replicates, _CHUNK))

    def run(start: int) -> np.ndarray:
        return sample_sums(model, R, seed, min(_CHUNK, replicates - start), start, des)

    if threads == 1 or len(starts) == 1:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, starts))
    return np.concatenate(parts) if parts else np.zeros(0)


def lp_from_sums(sums: np.ndarray, p: float) -> tuple[float, float]:
    """(estimate, standard error) of ||S||_p from i.i.d. draws of S.

    The error comes from 8 batch means of |S|^p, mapped to the norm scale
    by the delta method.
    """
    a = np.abs(np.asarray(sums, dtype=np.float64))
    top = float(a.max(initial=0.0))
    if top == 0.0:
        return 0.0, 0.0
    w = (a / top) ** p
    mu = float(np.mean(w))
    batches = np.array([np.mean(b) for b in np.array_split(w, N_BATCHES)])
    se_mu = float(np.std(batches, ddof=1)) / math.sqrt(N_BATCHES)
    est = top * mu ** (1.0 / p)
    se = top * mu ** (1.0 / p - 1.0) * se_mu / p
    return est, se


def _check_p(p) -> float:
    p = float(p)
    if not 2.0 <= p <= MAX_P:
        raise ValueError(f"Monte Carlo p must lie in [2, {MAX_P:g}], got {p}")
    return p


def estimate_lp_norm(model: FieldModel, R: Rectangle, p, replicates: int, seed: int,
                     threads: int = 1) -> McEstimate:
    p = _check_p(p)
    if replicates < MIN_REPLICATES:
        raise ValueError(f"need at least {MIN_REPLICATES} replicates")
    sums = simulate_sums(model, R, replicates, seed, threads)
    est, se = lp_from_sums(sums, p)
    return McEstimate(est, se, replicates, int(seed), p)


@dataclass(frozen=True)
class SgDiagnostic:
    lambdas: np.ndarray
    excess: np.ndarray  # log E exp(lambda S) - lambda^2 c^2 / 2
    se: np.ndarray  # standard error of the log-mgf estimate

    @property
    def max_excess(self) -> float:
        return float(self.excess.max(initial=-math.inf))

    def within(self, n_se: float = 3.0) -> bool:
        return bool(np.all(self.excess <= n_se * self.se))


def sg_from_sums(sums: np.ndarray, c: float, lambdas: Sequence[float]) -> SgDiagnostic:
    s = np.asarray(sums, dtype=np.float64)
    lam = np.asarray(list(lambdas), dtype=np.float64)
    excess = np.zeros(lam.shape)
    se = np.zeros(lam.shape)
    for i, l in enumerate(lam):
        if l == 0.0:
            continue
        x = l * s
        top = float(x.max())
        e = np.exp(x - top)
        m = float(np.mean(e))
        excess[i] = top + math.log(m) - 0.5 * l * l * c * c
        se[i] = float(np.std(e, ddof=1)) / (math.sqrt(s.size) * m)
    return SgDiagnostic(lam, excess, se)


def sg_diagnostic(model: FieldModel, R: Rectangle, c: float, lambda_grid: Sequence[float],
                  replicates: int, seed: int, threads: int = 1) -> SgDiagnostic:
    """Empirical check of E exp(lambda S) <= exp(lambda^2 c^2 / 2) over a grid."""
    if not c > 0:
        raise ValueError("c must be positive")
    if replicates < 2:
        raise ValueError("need at least 2 replicates")
    return sg_from_sums(simulate_sums(model, R, replicates, seed, threads), c, lambda_grid)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residuals: np.ndarray
    x: np.ndarray
    y: np.ndarray


def fit_loglog(N: Sequence[float], values: Sequence[float]) -> RateFit:
    """Least-squares line through (log N, log value)."""
    x = np.log(np.asarray(N, dtype=np.float64))
    y = np.log(np.asarray(values, dtype=np.float64))
    if np.unique(x).size < 4:
        raise ValueError("rate regression needs at least 4 distinct sizes")
    slope, intercept = np.polyfit(x, y, 1)
    return RateFit(float(slope), float(intercept), y - (slope * x + intercept), x, y)


def rate_regression(family: Callable[[int], FieldModel], n_list: Sequence[int], p, d: int,
                    replicates: int, seed: int, threads: int = 1) -> RateFit:
    """Slope of log ||N^-1 S_{[n]^d}||_p estimates against log N."""
    N, vals = [], []
    for n in n_list:
        R = Rectangle.cube(n, d)
        est = estimate_lp_norm(family(n), R, p, replicates, seed, threads)
        N.append(R.cardinality)
        vals.append(est.estimate / R.cardinality)
    return fit_loglog(N, vals)


def bound_regression(model: DecayModel, n_list: Sequence[int], d: int,
                     normalized: bool = True) -> RateFit:
    """Slope of log psi(analytic delta) / M_p against log N (divided by N
    when ``normalized``)."""
    N, vals = [], []
    for n in n_list:
        R = Rectangle.cube(n, d)
        v = psi(analytic_delta(R, model), R, model) / model.m_p
        N.append(R.cardinality)
        vals.append(v / R.cardinality if normalized else v)
    return fit_loglog(N, vals)
