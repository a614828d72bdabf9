import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fieldconc.bounds import (P_INF, ConstraintViolation, DecayModel, Exponential, FiniteRange,
                              Polynomial, Tabulated, analytic_delta, corollary_constants,
                              corollary_psi_cap, corollary_rate, delta_constraint, is_boundary,
                              lagrange_widths, optimize_delta_numeric, parse_p, psi,
                              rate_exponent_comparison, theorem_bound)
from fieldconc.frames import DeltaSeq
from fieldconc.lattice import Rectangle
from fieldconc.mc import bound_regression

ONE = Rectangle((1,))
IID = DecayModel(FiniteRange(0), 1.0, 2.0)


def test_decay_shapes():
    for phi in (Polynomial(2, 0.7), Exponential(3, 0.5, 1.5), FiniteRange(3), Tabulated((1, 0.5, 0.2))):
        vals = [phi(r) for r in range(0, 30)]
        assert vals[0] == 1.0
        assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert Polynomial(1, 2)(4) == pytest.approx(1 / 16)
    assert FiniteRange(2)(2) == 1.0 and FiniteRange(2)(3) == 0.0
    with pytest.raises(ValueError):
        Polynomial(0.5, 1)
    with pytest.raises(ValueError):
        Polynomial(1, 0)


def test_p_parsing():
    assert parse_p("inf") is P_INF and parse_p(float("inf")) is P_INF
    assert parse_p(3) == 3.0
    with pytest.raises(ValueError):
        parse_p(1.5)


def test_psi_examples():
    assert psi(DeltaSeq(()), ONE, IID) == 4.0
    assert psi(DeltaSeq(()), ONE, DecayModel(Polynomial(1, 1))) == 6.0


def test_psi_scales_with_root_cardinality_for_finite_range():
    a = psi(DeltaSeq.zeros(4), Rectangle((16,)), IID)
    b = psi(DeltaSeq.zeros(6), Rectangle((64,)), IID)
    assert b / a == pytest.approx(2.0)


def test_delta_constraint_examples():
    assert delta_constraint(DeltaSeq.zeros(5), 5, 2) == (Fraction(0), True)
    assert delta_constraint(DeltaSeq((1,)), 1, 2) == (Fraction(1, 2), False)
    assert delta_constraint(DeltaSeq((0, 0, 0, 1)), 4, 1) == (Fraction(1, 16), True)


def test_theorem_bound_examples():
    rep = theorem_bound(ONE, IID, DeltaSeq(()))
    assert rep.lp_bound == pytest.approx(4 * math.sqrt(2) * 4) and rep.sg_bound is None
    assert rep.lp_bound == pytest.approx(22.63, abs=5e-3)
    rep = theorem_bound(ONE, DecayModel(FiniteRange(0), 1.0, "inf"), DeltaSeq(()))
    assert rep.sg_bound == 40.0 and rep.lp_bound is None
    with pytest.raises(ConstraintViolation):
        theorem_bound(Rectangle((16, 16)), IID, DeltaSeq((1,)))
    with pytest.raises(ValueError):
        DecayModel(FiniteRange(0), 1.0, 1.0)


def test_bound_report_minimum():
    for n in (1, 5, 40):
        rep = theorem_bound(Rectangle((n, n)), DecayModel(Polynomial(1, 1), 2.5), DeltaSeq.zeros(8))
        assert rep.psi >= 4 * 2.5 and math.isfinite(rep.bound) and rep.bound > 0


decays = st.one_of(
    st.builds(Polynomial, st.floats(1, 5), st.floats(0.1, 4)),
    st.builds(Exponential, st.floats(1, 5), st.floats(0.1, 2), st.floats(0.2, 2)),
    st.builds(FiniteRange, st.integers(0, 10)))
sides = st.lists(st.integers(1, 300), min_size=1, max_size=3)


@settings(max_examples=150, deadline=None)
@given(decays, sides, st.floats(0.1, 10), st.integers(1, 4))
def test_psi_monotonicity(phi, ns, m_p, grow):
    R = Rectangle(tuple(ns))
    bigger = Rectangle(tuple(n + grow for n in ns))
    model = DecayModel(phi, m_p)
    delta = analytic_delta(R, model) if isinstance(phi, (Polynomial, Exponential)) else DeltaSeq(())
    base = psi(delta, R, model)
    assert psi(delta, R, DecayModel(phi, m_p * 1.5)) >= base
    assert psi(delta, bigger, model) >= base
    assert psi(delta, R, DecayModel(FiniteRange(10**6), m_p)) >= base
    # wider frames never increase psi
    wide = DeltaSeq(tuple(min(2 ** k, x + 1) for k, x in enumerate(delta, 1)))
    assert psi(wide, R, model) <= base


def test_analytic_delta_examples():
    raw = lagrange_widths(1, 3, Polynomial(1, 1))
    assert raw[0] == pytest.approx(0.196, abs=1e-3)
    assert analytic_delta(Rectangle((8,)), DecayModel(Polynomial(1, 1))).deltas == (0, 0, 0)
    m = 5
    assert lagrange_widths(2, m, Polynomial(1, 1)) == pytest.approx([2**k / (16 * m) for k in range(1, m + 1)])
    assert lagrange_widths(1, 4, Exponential())[3] == pytest.approx(0.414, abs=1e-3)
    assert analytic_delta(Rectangle((16,)), DecayModel(Exponential()))[4] == 0
    assert analytic_delta(Rectangle((64, 64)), IID) == DeltaSeq.zeros(6)


def test_boundary_detection():
    assert is_boundary(2, 1) and is_boundary(3, 1.5) and is_boundary(2, Fraction(1))
    assert not is_boundary(2, 1.0001)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("phi", [Polynomial(1, 0.3), Polynomial(2, 1.0), Polynomial(1, 1.5),
                                 Polynomial(1, 4.0), Exponential(1, 1, 1), Exponential(2, 0.3, 0.5)])
def test_analytic_delta_is_feasible(d, phi):
    for j in range(1, 26):
        R = Rectangle.cube(2**j + j % 3, d)
        delta = analytic_delta(R, DecayModel(phi))
        assert delta_constraint(delta, R.max_scale, d)[1]
        assert all(x <= 2**k for k, x in enumerate(delta, 1))
        raw = lagrange_widths(d, R.max_scale, phi)
        assert all(x <= r + 1e-9 for x, r in zip(delta, raw))


def test_corollary_constants():
    assert corollary_constants(2, 1.0) == (240.0, "boundary")
    c, regime = corollary_constants(2, 2.0)
    rho = 2 ** (-1 / 3)
    assert c == pytest.approx(24 * 2**4 * 2**4 / (1 - rho) ** 3)
    assert c == pytest.approx(6.99e5, rel=2e-3) and regime == "fast"
    assert corollary_constants(2, 0.5)[1] == "slow"


def test_corollary_rate_exponents():
    for alpha, expo in ((2.0, 0.5), (0.5, 0.25)):
        model = DecayModel(Polynomial(1, alpha))
        r1 = corollary_rate(2**4, 2, model)[0]
        r2 = corollary_rate(2**8, 2, model)[0]
        assert math.log(r2 / r1) / math.log(2**8) == pytest.approx(-expo)
    pinf = corollary_rate(16, 2, DecayModel(Polynomial(1, 2.0), 1.0, "inf"))[0]
    p2 = corollary_rate(16, 2, DecayModel(Polynomial(1, 2.0), 1.0, 2.0))[0]
    assert pinf / p2 == pytest.approx(2.5 / math.sqrt(2))
    rate, const, regime = corollary_rate(16, 2, DecayModel(Exponential()))
    assert const is None and regime == "exponential" and rate > 0
    with pytest.raises(ValueError):
        corollary_rate(1, 2, DecayModel(Polynomial(1, 1)))


def test_corollary_consistency_grid():
    for d in (1, 2, 3):
        for alpha in (0.25, 0.5, 1.0, 1.5, 2.0, 3.0):
            for c in (1.0, 3.0):
                for p in (2.0, 8.0, "inf"):
                    model = DecayModel(Polynomial(c, alpha), 1.7, p)
                    for j in range(1, 12 if d < 3 else 8):
                        n = 2**j + j % 2
                        R = Rectangle.cube(n, d)
                        assert psi(analytic_delta(R, model), R, model) <= corollary_psi_cap(n, d, model)


def test_numeric_delta_improves_on_analytic():
    model = DecayModel(Polynomial(1, 1.0))
    R = Rectangle((256, 256))
    a = analytic_delta(R, model)
    n = optimize_delta_numeric(R, model)
    assert psi(n, R, model) <= psi(a, R, model)
    assert delta_constraint(n, R.max_scale, 2)[1]
    assert optimize_delta_numeric(Rectangle((64, 64)), IID) == DeltaSeq.zeros(6)
    with pytest.raises(ValueError):
        optimize_delta_numeric(R, model, budget=0)


@settings(max_examples=40, deadline=None)
@given(st.builds(Polynomial, st.floats(1, 3), st.floats(0.2, 3)), st.integers(2, 3),
       st.integers(2, 200), st.integers(1, 6))
def test_numeric_delta_stays_feasible(phi, d, n, budget):
    R = Rectangle.cube(n, d)
    model = DecayModel(phi)
    seq = optimize_delta_numeric(R, model, budget)
    assert delta_constraint(seq, R.max_scale, d)[1]
    assert psi(seq, R, model) <= psi(analytic_delta(R, model), R, model)


def test_rate_exponent_comparison():
    assert rate_exponent_comparison(2, 1.0) == (1.0, 0.5)
    assert rate_exponent_comparison(2, 3.0) == (1.0, 1.0)
    ours, proj = rate_exponent_comparison(2, 1e-9)
    assert ours < 1e-8 and proj < 1e-8
    for alpha in np.linspace(0.05, 5, 40):
        ours, proj = rate_exponent_comparison(3, alpha)
        assert ours >= proj
    with pytest.raises(ValueError):
        rate_exponent_comparison(2, 0)


NS = [2**j for j in range(3, 11)]


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_psi_slope_over_the_stated_range(alpha):
    fit = bound_regression(DecayModel(Polynomial(1, alpha)), NS, 2, normalized=False)
    assert abs(fit.slope - (1 - min(0.5, alpha / 2))) <= 0.05


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_psi_slope_converges_for_large_cubes(alpha):
    fit = bound_regression(DecayModel(Polynomial(1, alpha)), [2**j for j in range(24, 32)], 2,
                           normalized=False)
    assert abs(fit.slope - (1 - min(0.5, alpha / 2))) <= 0.05
