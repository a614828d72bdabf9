import random

import numpy as np
import pytest

from fieldconc.fields import (BlockRademacher, CausalLinear, IIDRademacher, MovingAverage,
                              enumerate_universe, pad_zero, wd_envelope)
from fieldconc.frames import ProductSet
from fieldconc.lattice import Rectangle
from fieldconc.oracle import (centered_gap, check_martingale, compression_wd_check,
                              conditional_expectation, decomposition_error, exact_wd_coefficient,
                              generating_set, lp_norm, martingale_increments, top_scale)

IID44 = enumerate_universe(IIDRademacher(2), Rectangle((4, 4)))
MA8 = enumerate_universe(MovingAverage(1, 1), Rectangle((8,)))


def test_empty_conditioning_is_the_mean():
    y = MA8.column((3,)) ** 2 + MA8.column((4,))
    t = conditional_expectation(MA8, y, [])
    assert t.n_classes == 1 and t.means[0] == pytest.approx(y.mean())


def test_independent_conditioning_gives_zero():
    t = conditional_expectation(IID44, IID44.column((1, 1)), [(0, 0), (3, 2), (2, 1)])
    assert np.all(np.abs(t.values) <= 1e-15)
    assert t.n_classes == 8


def test_conditioning_on_the_target_reveals_it():
    y = MA8.column((5,))
    t = conditional_expectation(MA8, y, [(5,)])
    assert np.allclose(t.values, y)


def test_total_expectation_on_random_tables():
    rng = random.Random(0)
    sites = list(MA8.rect.points())
    for _ in range(50):
        G = rng.sample(sites, rng.randint(0, 8))
        y = MA8.values[:, rng.randrange(8)] * MA8.values[:, rng.randrange(8)]
        assert conditional_expectation(MA8, y, G).total_expectation_gap() <= 1e-14


def test_untabulated_site_is_an_error():
    with pytest.raises(KeyError):
        conditional_expectation(MA8, MA8.column((0,)), [(9,)])


def test_jensen_monotonicity_on_nested_sets():
    rng = random.Random(1)
    u = enumerate_universe(CausalLinear(1.0, 2, 1), Rectangle((9,)))
    sites = list(u.rect.points())
    for _ in range(60):
        big = rng.sample(sites, rng.randint(1, 9))
        small = rng.sample(big, rng.randint(0, len(big)))
        y = u.column(rng.choice(sites))
        for p in (2.0, 3.0, "inf"):
            assert centered_gap(u, y, small, p) <= centered_gap(u, y, big, p) + 1e-12


def test_lp_norm():
    z = np.array([3.0, -4.0])
    assert lp_norm(z, 2) == pytest.approx(np.sqrt(12.5))
    assert lp_norm(z, "inf") == 4.0
    assert lp_norm(np.zeros(4), 6) == 0.0
    assert lp_norm(np.array([1e200, -1e200]), 64) == pytest.approx(1e200)


def test_wd_examples():
    assert exact_wd_coefficient(MA8, (4,), 0) == pytest.approx(lp_norm(MA8.column((4,)), 2))
    assert exact_wd_coefficient(MA8, (4,), 3) <= 1e-12
    ub = enumerate_universe(BlockRademacher(4, 1.0, 2), Rectangle((4, 4)))
    c = exact_wd_coefficient(ub, (3, 3), 2)
    assert c == pytest.approx(0.25) and c <= 2 ** -1.0


def test_generating_sets():
    R = Rectangle((5, 5))
    M = {tuple(u) for u in generating_set(R, (2, 2), 2)}
    Mp = {tuple(u) for u in generating_set(R, (2, 2), 2, kind="M'")}
    assert M == {u for u in R.points() if max(2 - u[0], 2 - u[1]) >= 2}
    assert M <= Mp
    with pytest.raises(ValueError):
        generating_set(R, (0, 0), 1, kind="X")


@pytest.mark.parametrize("w", [0, 1, 2])
def test_moving_average_coefficients_vanish_beyond_range(w):
    u = enumerate_universe(MovingAverage(w, 1), Rectangle((9,)))
    for t in range(9):
        coef = [exact_wd_coefficient(u, (t,), r) for r in range(10)]
        assert all(b <= a + 1e-12 for a, b in zip(coef, coef[1:]))
        assert all(c <= 1e-12 for c in coef[2 * w + 1:])
        prime = [exact_wd_coefficient(u, (t,), r, kind="M'") for r in range(10)]
        assert all(a <= b + 1e-12 for a, b in zip(coef, prime))


def test_top_scale():
    assert top_scale([(0, 0)]) == 0
    assert top_scale([(1, 0)]) == 1
    assert top_scale([(3, 7)]) == 3
    assert top_scale([(8,)]) == 4


def test_iid_increments_at_scale_zero_are_the_field():
    incs = martingale_increments(IID44, Rectangle((4, 4)), 0)
    for t, z in incs.items():
        assert np.array_equal(z, IID44.column(t))


def test_single_cell_has_one_increment():
    small = enumerate_universe(MovingAverage(1, 2), Rectangle((2, 2)))
    incs = martingale_increments(small, [(0, 0), (1, 1), (0, 1)], 1)
    assert list(incs) == [(0, 0)]


@pytest.mark.parametrize("name,universe,R,ks", [
    ("iid", IID44, Rectangle((4, 4)), range(3)),
    ("ma", MA8, Rectangle((8,)), range(4)),
])
def test_martingale_property(name, universe, R, ks):
    for k in ks:
        assert check_martingale(universe, R, k) <= 1e-10
    assert decomposition_error(universe, R) <= 1e-12


def test_martingale_above_top_scale_has_no_pairs():
    assert check_martingale(MA8, Rectangle((8,)), 4) == 0.0
    assert list(martingale_increments(MA8, Rectangle((8,)), 4)) == [(0,)]


def test_decomposition_on_irregular_sets():
    u = enumerate_universe(CausalLinear(2.0, 2, 1), Rectangle((10,)))
    for A in ([(0,), (3,), (4,), (9,)], [(7,)], [(1,), (2,), (5,), (6,), (8,)]):
        assert decomposition_error(u, A) <= 1e-12
        for k in range(top_scale(A) + 1):
            assert check_martingale(u, A, k) <= 1e-10


def test_decomposition_on_padded_field():
    u = enumerate_universe(pad_zero(MovingAverage(1, 2), Rectangle((2, 3))), Rectangle((3, 4)))
    assert decomposition_error(u, Rectangle((3, 4))) <= 1e-12


def test_compression_examples():
    full = ProductSet.from_rectangle(Rectangle((8,)))
    env = wd_envelope(MovingAverage(1, 1))
    for r in range(5):
        res = compression_wd_check(MA8, full, 2.0, r, env)
        assert res.compressed == pytest.approx(res.original, abs=1e-15)
    res = compression_wd_check(IID44, ProductSet(((0, 1, 3), (2,))), 2.0, 1, wd_envelope(IIDRademacher(2)))
    assert res.compressed == 0.0 and res.passed
    res = compression_wd_check(MA8, ProductSet(((0, 1, 3, 4, 6),)), 2.0, 2, env)
    assert res.envelope == 1.0 and res.compressed <= res.envelope and res.passed
