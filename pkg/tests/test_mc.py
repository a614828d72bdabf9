import math

import numpy as np
import pytest

from fieldconc.bounds import DecayModel, Polynomial, analytic_delta, theorem_bound
from fieldconc.fields import BlockRademacher, CausalLinear, IIDRademacher, MovingAverage, wd_envelope
from fieldconc.lattice import Rectangle
from fieldconc.mc import (bound_regression, estimate_lp_norm, fit_loglog, lp_from_sums,
                          rate_regression, sg_diagnostic, simulate_sums)

R16 = Rectangle((16, 16))


def test_iid_l2_norm_matches_exact_value():
    est = estimate_lp_norm(IIDRademacher(2), R16, 2, 4096, seed=7)
    assert abs(est.estimate - 16.0) <= 3 * est.se
    assert est.se > 0 and est.replicates == 4096 and est.seed == 7


def test_block_sum_has_zero_variance():
    for n, alpha in ((4, 1.0), (8, 0.5), (16, 2.0)):
        R = Rectangle.cube(n, 2)
        est = estimate_lp_norm(BlockRademacher(n, alpha, 2), R, 4, 64, seed=1)
        assert est.estimate == pytest.approx(n ** (2 - alpha), rel=1e-12)
        assert est.se == 0.0


@pytest.mark.parametrize("model", [IIDRademacher(2), MovingAverage(1, 2), CausalLinear(2.0, 4, 2)])
def test_estimate_below_theorem_bound(model):
    for p in (2.0, 4.0):
        env = wd_envelope(model, p)
        bound = theorem_bound(R16, env, analytic_delta(R16, env)).bound
        est = estimate_lp_norm(model, R16, p, 512, seed=2)
        assert est.estimate - 3 * est.se <= bound


def test_estimates_do_not_depend_on_threads():
    for model in (IIDRademacher(2), MovingAverage(1, 2)):
        a = simulate_sums(model, Rectangle((12, 12)), 1000, 99, threads=1)
        b = simulate_sums(model, Rectangle((12, 12)), 1000, 99, threads=4)
        assert a.tobytes() == b.tobytes()


def test_norm_estimates_increase_with_p():
    sums = simulate_sums(MovingAverage(1, 2), R16, 2048, 5)
    vals = [lp_from_sums(sums, p)[0] for p in (2, 4, 8)]
    assert vals[0] <= vals[1] <= vals[2]


def test_argument_checks():
    with pytest.raises(ValueError):
        estimate_lp_norm(IIDRademacher(2), R16, 65, 64, 1)
    with pytest.raises(ValueError):
        estimate_lp_norm(IIDRademacher(2), R16, 1.5, 64, 1)
    with pytest.raises(ValueError):
        estimate_lp_norm(IIDRademacher(2), R16, 2, 15, 1)
    with pytest.raises(ValueError):
        fit_loglog([1, 2, 4], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_loglog([1, 1, 2, 2, 4], [1, 1, 2, 2, 3])


def test_sg_diagnostic():
    env = wd_envelope(IIDRademacher(2), "inf")
    c = theorem_bound(R16, env, analytic_delta(R16, env)).sg_bound
    grid = [0.0, 1e-3, -1e-3, 1e-2, 0.05, -0.05]
    diag = sg_diagnostic(IIDRademacher(2), R16, c, grid, 2048, seed=4)
    assert diag.excess[0] == 0.0
    assert diag.within(3.0)
    doubled = sg_diagnostic(IIDRademacher(2), R16, 2 * c, grid, 2048, seed=4)
    nz = np.array(grid) != 0
    assert np.all(doubled.excess[nz] < diag.excess[nz])


def test_sg_detects_a_too_small_constant():
    diag = sg_diagnostic(IIDRademacher(2), R16, 4.0, [0.05, 0.1], 2048, seed=4)
    assert diag.max_excess > 3 * diag.se.max()


def test_iid_rate_slope():
    fit = rate_regression(lambda n: IIDRademacher(2), [4, 8, 16, 32], 2, 2, 2048, seed=3)
    assert abs(fit.slope + 0.5) <= 0.05


def test_block_rate_slope_is_exact():
    fit = rate_regression(lambda n: BlockRademacher(n, 1.0, 2), [2, 4, 8, 16, 32], 2, 2, 16, seed=3)
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert np.abs(fit.residuals).max() <= 1e-12


def test_bound_side_slope_for_fast_decay():
    fit = bound_regression(DecayModel(Polynomial(1, 2.0)), [2**j for j in range(3, 11)], 2)
    assert abs(fit.slope + 0.5) <= 0.05
