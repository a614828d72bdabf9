"""Moment and sub-Gaussian bounds for rectangle sums under projective
weak dependence.

The central quantity is

    psi = 2 M sqrt(|R|) (2 + sum_{k=1}^{m(R)+1} phi(delta_{k-1} + 1) sqrt(|C_k cap R|))

with |C_k cap R| = prod_i min(2^k, N_i). The L^p bound is 4 sqrt(p) psi and
the sub-Gaussian bound is 10 psi.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from fieldconc.frames import DeltaSeq, constraint_limit
from fieldconc.lattice import Rectangle


class _PInf(enum.Enum):
    INF = "inf"

    def __repr__(self):
        return "P_INF"


#: the p = infinity (sub-Gaussian) case
P_INF = _PInf.INF

Exponent = Union[float, _PInf]


def parse_p(p) -> Exponent:
    """Accept 2, 4.5, "inf", "∞" or P_INF; reject p < 2."""
    if p is P_INF:
        return P_INF
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "∞"):
            return P_INF
        p = float(p)
    p = float(p)
    if math.isinf(p):
        return P_INF
    if not p >= 2:
        raise ValueError(f"p must lie in [2, inf], got {p}")
    return p


class ConstraintViolation(ValueError):
    """Frame widths exceed the budget sum delta_k 2^-k <= 1/(4 d^2)."""


@dataclass(frozen=True)
class Polynomial:
    c: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("polynomial decay needs c >= 1")
        if not self.alpha > 0:
            raise ValueError("polynomial decay needs alpha > 0")

    def __call__(self, r: float) -> float:
        if r <= 0:
            return 1.0
        return min(1.0, self.c * float(r) ** (-float(self.alpha)))


@dataclass(frozen=True)
class Exponential:
    c: float = 1.0
    gamma: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        if self.c < 1 or not self.gamma > 0 or not self.eta > 0:
            raise ValueError("exponential decay needs c >= 1, gamma > 0, eta > 0")

    def __call__(self, r: float) -> float:
        if r <= 0:
            return 1.0
        return min(1.0, self.c * math.exp(-self.gamma * float(r) ** self.eta))


@dataclass(frozen=True)
class FiniteRange:
    """phi(r) = 1 for r <= w and 0 beyond."""

    w: int = 0

    def __post_init__(self):
        if self.w < 0:
            raise ValueError("finite range needs w >= 0")

    def __call__(self, r: float) -> float:
        return 1.0 if r <= self.w else 0.0


@dataclass(frozen=True)
class Tabulated:
    """phi(r) = values[r] for r < len(values), 0 afterwards."""

    values: tuple[float, ...]

    def __post_init__(self):
        vs = tuple(float(v) for v in self.values)
        if not vs or vs[0] != 1.0:
            raise ValueError("tabulated decay must start at phi(0) = 1")
        if any(b > a for a, b in zip(vs, vs[1:])) or vs[-1] < 0:
            raise ValueError("tabulated decay must be nonincreasing and >= 0")
        object.__setattr__(self, "values", vs)

    def __call__(self, r: float) -> float:
        r = int(math.ceil(r)) if r > 0 else 0
        return self.values[r] if r < len(self.values) else 0.0


Decay = Union[Polynomial, Exponential, FiniteRange, Tabulated]


@dataclass(frozen=True)
class DecayModel:
    """Envelope r -> m_p * phi(r) for the conditional-expectation gap at lag r."""

    phi: Decay
    m_p: float = 1.0
    p: Exponent = 2.0

    def __post_init__(self):
        if not self.m_p > 0:
            raise ValueError("m_p must be positive")
        object.__setattr__(self, "p", parse_p(self.p))

    def envelope(self, r: float) -> float:
        return self.m_p * self.phi(r)


@dataclass
class BoundReport:
    psi: float
    delta_used: DeltaSeq
    constraint: Fraction
    p: Exponent
    lp_bound: float | None = None
    sg_bound: float | None = None
    corollary_rate: float | None = None
    constant: float | None = None
    regime: str | None = None
    extras: dict = field(default_factory=dict)

    @property
    def bound(self) -> float:
        return self.sg_bound if self.p is P_INF else self.lp_bound


def _cell_meet(R: Rectangle, k: int) -> int:
    return math.prod(min(1 << k, n) for n in R.sides)


def psi(delta: DeltaSeq, R: Rectangle, model: DecayModel) -> float:
    if not isinstance(delta, DeltaSeq):
        delta = DeltaSeq(tuple(delta))
    total = 0.0
    for k in range(1, R.max_scale + 2):
        total += model.phi(delta[k - 1] + 1) * math.sqrt(_cell_meet(R, k))
    return 2.0 * model.m_p * math.sqrt(R.cardinality) * (2.0 + total)


def delta_constraint(delta: DeltaSeq, m: int, d: int) -> tuple[Fraction, bool]:
    """Exact budget sum_{k<=m} delta_k 2^-k and whether it is <= 1/(4 d^2)."""
    value = delta.constraint_value(m)
    return value, value <= constraint_limit(d)


def theorem_bound(R: Rectangle, model: DecayModel, delta: DeltaSeq) -> BoundReport:
    value, ok = delta_constraint(delta, R.max_scale, R.d)
    if not ok:
        raise ConstraintViolation(
            f"sum delta_k 2^-k = {value} exceeds {constraint_limit(R.d)}")
    value_psi = psi(delta, R, model)
    report = BoundReport(psi=value_psi, delta_used=delta, constraint=value, p=model.p)
    if model.p is P_INF:
        report.sg_bound = 10.0 * value_psi
    else:
        report.lp_bound = 4.0 * math.sqrt(model.p) * value_psi
    return report


def _rho(d: int, alpha: float) -> float:
    return 2.0 ** ((d / 2 - alpha) / (1 + alpha))


def is_boundary(d: int, alpha) -> bool:
    """alpha == d/2, exactly for rational input, else by |rho - 1| < 1e-12."""
    try:
        if Fraction(alpha) == Fraction(d, 2):
            return True
    except (TypeError, ValueError):
        pass
    return abs(_rho(d, float(alpha)) - 1.0) < 1e-12


def _floor_feasible(raw: list[float], m: int, d: int) -> DeltaSeq:
    ds = [min(max(0, math.floor(x)), 2 ** k) for k, x in enumerate(raw, start=1)]
    for k in range(1, len(ds)):
        ds[k] = max(ds[k], ds[k - 1])
    # a float landing just above an integer can break the exact budget;
    # lowering the last strict rise keeps the sequence nondecreasing
    while not delta_constraint(DeltaSeq(tuple(ds)), m, d)[1]:
        k = max(i for i in range(len(ds)) if ds[i] > (ds[i - 1] if i else 0))
        ds[k] -= 1
    return DeltaSeq(tuple(ds))


def lagrange_widths(d: int, m: int, phi: Decay) -> list[float] | None:
    """Real-valued frame widths before flooring, or None for other decays.

    Polynomial decay: (2 rho)^k / (4 d^2 Z) with rho = 2^((d/2 - alpha)/(1 + alpha))
    and Z = sum_{k<=m} rho^k. Exponential decay: 2^(k/2) (sqrt 2 - 1) / (4 d^2).
    """
    if isinstance(phi, Polynomial):
        rho = 1.0 if is_boundary(d, phi.alpha) else _rho(d, float(phi.alpha))
        z = sum(rho ** k for k in range(1, m + 1))
        return [(2 * rho) ** k / (4 * d * d * z) for k in range(1, m + 1)]
    if isinstance(phi, Exponential):
        return [2 ** (k / 2) * (math.sqrt(2) - 1) / (4 * d * d) for k in range(1, m + 1)]
    return None


def analytic_delta(R: Rectangle, model: DecayModel) -> DeltaSeq:
    """Floor of the Lagrange-multiplier frame widths; zero for decays
    without a closed form."""
    d, m = R.d, R.max_scale
    if m == 0:
        return DeltaSeq(())
    raw = lagrange_widths(d, m, model.phi)
    if raw is None:
        return DeltaSeq.zeros(m)
    return _floor_feasible(raw, m, d)


def corollary_constants(d: int, alpha) -> tuple[float, str]:
    """(C_{d,alpha}, regime) -- or (C~_d, "boundary") when alpha = d/2."""
    if is_boundary(d, alpha):
        return 15.0 * (8.0 * d) ** (d / 2), "boundary"
    a = float(alpha)
    rho = _rho(d, a)
    const = 24.0 * 2.0 ** (d + a) * d ** (2 * a) * abs(1 - rho) ** (-(1 + a))
    return const, ("fast" if a > d / 2 else "slow")


def corollary_rate(n: int, d: int, model: DecayModel) -> tuple[float, float | None, str]:
    """Upper bound on ||N^-1 S_{[n]^d}|| for cubes with polynomial or exponential decay.

    Returns (rate, constant, regime). Exponential decay has no explicit
    constant, so the rate is the theorem bound with the analytic widths,
    divided by N, and the constant is None.
    """
    if n < 2:
        raise ValueError("the cube rate needs n >= 2")
    N = n ** d
    phi = model.phi
    if isinstance(phi, Polynomial):
        const, regime = corollary_constants(d, phi.alpha)
        scale = 2.5 if model.p is P_INF else math.sqrt(model.p)
        if regime == "boundary":
            rate = phi.c * const * scale * model.m_p * N ** -0.5 * math.log2(N) ** (d / 2 + 1)
        else:
            rate = phi.c * const * scale * model.m_p * N ** (-min(0.5, float(phi.alpha) / d))
        return rate, const, regime
    if isinstance(phi, Exponential):
        R = Rectangle.cube(n, d)
        rep = theorem_bound(R, model, analytic_delta(R, model))
        return rep.bound / N, None, "exponential"
    raise ValueError("the cube rate covers polynomial and exponential decay only")


def corollary_psi_cap(n: int, d: int, model: DecayModel) -> float:
    """Closed-form cap on psi(analytic delta) for polynomial decay on cubes."""
    phi = model.phi
    if not isinstance(phi, Polynomial):
        raise ValueError("needs polynomial decay")
    N = n ** d
    const, regime = corollary_constants(d, phi.alpha)
    if regime == "boundary":
        return 0.25 * phi.c * model.m_p * const * math.sqrt(N) * math.log2(N) ** (d / 2 + 1)
    return 0.25 * phi.c * model.m_p * const * N ** max(0.5, 1 - float(phi.alpha) / d)


def optimize_delta_numeric(R: Rectangle, model: DecayModel, budget: int = 50,
                           start: DeltaSeq | None = None) -> DeltaSeq:
    """Integer coordinate descent on psi over feasible frame widths.

    Starts from the analytic widths (or ``start``) and only accepts strict
    improvements, so the result is never worse than the start. Each sweep
    tries every feasible value of each coordinate, then pairwise budget
    transfers. Stops after ``budget`` sweeps or when a sweep changes nothing.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    d, m = R.d, R.max_scale
    limit = constraint_limit(d)
    cur = start if start is not None else analytic_delta(R, model)
    cur = DeltaSeq(tuple(cur[k] for k in range(1, m + 1)))
    if not delta_constraint(cur, m, d)[1]:
        raise ConstraintViolation("starting widths are infeasible")
    best = psi(cur, R, model)

    def feasible_range(seq: DeltaSeq, k: int) -> range:
        lo = seq[k - 1] if k > 1 else 0
        hi = seq[k + 1] if k < m else 2 ** k
        slack = limit - (seq.constraint_value(m) - Fraction(seq[k], 2 ** k))
        hi = min(hi, 2 ** k, math.floor(slack * 2 ** k))
        return range(lo, hi + 1)

    for _ in range(budget):
        improved = False
        for k in range(1, m + 1):
            for v in feasible_range(cur, k):
                if v == cur[k]:
                    continue
                cand = cur.replace(k, v)
                val = psi(cand, R, model)
                if val < best:
                    cur, best, improved = cand, val, True
        for j in range(1, m + 1):
            for k in range(1, m + 1):
                if j == k or cur[j] == 0:
                    continue
                try:
                    trial = cur.replace(j, cur[j] - 1)
                except ValueError:
                    continue
                rng = feasible_range(trial, k)
                if not rng:
                    continue
                try:
                    cand = trial.replace(k, rng[-1])
                except ValueError:
                    continue
                if not delta_constraint(cand, m, d)[1]:
                    continue
                val = psi(cand, R, model)
                if val < best:
                    cur, best, improved = cand, val, True
        if not improved:
            break
    return cur


def rate_exponent_comparison(d: int, alpha: float) -> tuple[float, float]:
    """Decay exponents in n of n^-d ||S_{[n]^d}||: ours min(d/2, alpha),
    the L^p projective criterion's min(d/2, alpha/2)."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return min(d / 2, alpha), min(d / 2, alpha / 2)
