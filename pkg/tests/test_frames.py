import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fieldconc.fields import IIDRademacher, MovingAverage, sample
from fieldconc.frames import (Compression, DeltaSeq, ProductSet, compress, constraint_limit,
                              frame_mask, framed_partition, in_frames, lambda_member)
from fieldconc.lattice import Rectangle
from fieldconc.verify import feasible_deltas


def test_lambda_member_examples():
    assert not any(lambda_member(x, 3, 0) for x in range(50))
    assert lambda_member(5, 2, 2)
    assert lambda_member(2, 1, 1) and not lambda_member(3, 1, 1)
    assert [x for x in range(10) if lambda_member(x, 1, 1)] == [2, 4, 6, 8]
    assert not lambda_member(1, 2, 4)  # no frame before the first multiple
    with pytest.raises(ValueError):
        lambda_member(3, 1, 3)


def test_delta_seq_validation():
    with pytest.raises(ValueError):
        DeltaSeq((3,))
    with pytest.raises(ValueError):
        DeltaSeq((1, 0))
    with pytest.raises(ValueError):
        DeltaSeq((-1,))
    ds = DeltaSeq((0, 1, 1))
    assert ds[0] == 0 and ds[2] == 1 and ds[9] == 0
    assert ds.constraint_value(3) == Fraction(1, 4) + Fraction(1, 8)
    assert constraint_limit(2) == Fraction(1, 16)


def test_framed_partition_example():
    R = Rectangle((4, 4))
    part = framed_partition(R, DeltaSeq((1,)))
    assert set(part.framed.points()) == set(itertools.product((0, 1, 3), repeat=2))
    assert set(part.strips[0].points()) == {(2, y) for y in range(4)}
    assert set(part.strips[1].points()) == {(x, 2) for x in (0, 1, 3)}
    assert len(part.framed) + sum(len(s) for s in part.strips) == 16


def test_zero_widths_leave_rectangle_framed():
    R = Rectangle((7, 5, 3))
    part = framed_partition(R, DeltaSeq.zeros(3))
    assert len(part.framed) == R.cardinality
    assert all(s.is_empty for s in part.strips)


deltas = st.integers(1, 5).flatmap(
    lambda m: st.lists(st.integers(0, 4), min_size=m, max_size=m)).map(
    lambda xs: DeltaSeq(tuple(min(v, 2 ** k) for k, v in enumerate(itertools.accumulate(xs), 1))))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 20), min_size=1, max_size=3), deltas)
def test_partition_is_disjoint_and_exhaustive(sides, delta):
    try:
        delta = DeltaSeq(delta.deltas)
    except ValueError:
        return
    R = Rectangle(tuple(sides))
    part = framed_partition(R, delta)
    seen = [t for piece in part.parts() for t in piece.points()]
    assert len(seen) == len(set(seen)) == R.cardinality
    assert set(seen) == set(R.points())
    for t in part.framed.points():
        assert not any(in_frames(x, delta) for x in t)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_frame_count_within_budget(d):
    for delta in feasible_deltas(d, 12, seed=d):
        assert delta.constraint_value(12) <= constraint_limit(d)
        inside = np.cumsum(frame_mask(2**12, delta))
        N = np.arange(1, 2**12 + 1)
        assert np.all(inside * 4 * d * d <= N)


def test_frame_mask_matches_scalar_membership():
    delta = DeltaSeq((1, 1, 3, 5))
    mask = frame_mask(100, delta)
    assert [bool(m) for m in mask] == [in_frames(x, delta) for x in range(100)]


def test_compression_examples():
    A = ProductSet(((0, 1, 3), (2,)))
    c = compress(A)
    assert c.target.sides == (3, 1)
    assert c.forward((2, 0)) == (3, 2)
    assert c.inverse((3, 2)) == (2, 0)
    ident = compress(ProductSet.from_rectangle(Rectangle((3, 4))))
    assert all(ident.forward(t) == t for t in Rectangle((3, 4)).points())
    with pytest.raises(ValueError):
        Compression(ProductSet(((0, 1), ())))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sets(st.integers(0, 30), min_size=1, max_size=6), min_size=1, max_size=2))
def test_compression_is_monotone_and_widens_gaps(factors):
    A = ProductSet(tuple(tuple(f) for f in factors))
    c = compress(A)
    K = list(c.target.points())
    for t, u in itertools.product(K, repeat=2):
        ft, fu = c.forward(t), c.forward(u)
        if all(a <= b for a, b in zip(t, u)):
            assert all(a <= b for a, b in zip(ft, fu))
        gap = max(a - b for a, b in zip(t, u))
        if gap >= 0:
            assert max(a - b for a, b in zip(ft, fu)) >= gap


def test_gap_inequality_needs_nonnegative_lag():
    c = compress(ProductSet(((0, 3),)))
    # both coordinates behind: the compressed gap -1 maps to a wider -3
    assert c.forward((0,))[0] - c.forward((1,))[0] == -3


@pytest.mark.parametrize("model", [IIDRademacher(2), MovingAverage(1, 2)])
def test_compression_preserves_sums(model):
    grid = sample(model, Rectangle((9, 9)), seed=11)
    A = ProductSet(((0, 2, 3, 7), (1, 4, 8)))
    c = compress(A)
    direct = sum(grid.values[t] for t in A.points())
    assert c.compress_values(grid.values).sum() == pytest.approx(direct, abs=1e-12)
    assert c.compress_values(grid.values).shape == c.target.sides
