import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from untangle.errors import DimensionMismatch, InvalidParameters
from untangle.geometry import (
    Ball,
    Hyperplane,
    LabeledDataset,
    PointCloud,
    ball_contains_cloud,
    balls_disjoint,
    dist_set_set,
)

coords = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def cloud_strategy(dim=2, max_size=12):
    return st.lists(st.tuples(*[coords] * dim), min_size=1, max_size=max_size).map(
        lambda pts: PointCloud(np.array(pts)))


def test_dist_single_pair():
    assert dist_set_set(PointCloud([[0, 0]]), PointCloud([[3, 4]])) == 5.0


def test_dist_identical_points():
    assert dist_set_set(PointCloud([[0, 0]]), PointCloud([[0, 0]])) == 0.0


def test_dist_circle_sample_to_point():
    th = 2 * np.pi * np.arange(64) / 64
    circle = PointCloud(np.column_stack([np.cos(th), np.sin(th)]))
    d = dist_set_set(circle, PointCloud([[3, 0]]))
    # brute force over the samples
    brute = min(math.dist(p, (3, 0)) for p in circle.points)
    assert d == pytest.approx(brute, abs=1e-15)
    assert abs(d - 2) <= 2 * math.sin(math.pi / 64)


def test_dist_guards_subtract_and_clamp():
    a = PointCloud([[0, 0]], guard=1.0)
    b = PointCloud([[3, 4]], guard=1.5)
    assert dist_set_set(a, b) == pytest.approx(2.5)
    assert dist_set_set(PointCloud([[0, 0]], 3), PointCloud([[3, 4]], 3)) == 0.0


def test_dist_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        dist_set_set(PointCloud([[0, 0]]), PointCloud([[0, 0, 0]]))


def test_ball_contains_center():
    assert ball_contains_cloud(Ball((0, 0), 1), PointCloud([[0, 0]]))


def test_ball_boundary_is_outside():
    assert not ball_contains_cloud(Ball((0, 0), 1), PointCloud([[1, 0]]))


def test_ball_guard_counts():
    assert not ball_contains_cloud(Ball((0, 0), 1), PointCloud([[0.5, 0]], guard=0.6))


def test_ball_contains_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        ball_contains_cloud(Ball((0, 0), 1), PointCloud([[0, 0, 0]]))


def test_balls_disjoint_examples():
    assert balls_disjoint([Ball((0, 0), 1), Ball((3, 0), 1)])
    assert not balls_disjoint([Ball((0, 0), 1), Ball((2, 0), 1)])
    assert balls_disjoint([Ball((-1, 1), 1), Ball((1, -1), 1)])
    assert balls_disjoint([])
    assert balls_disjoint([Ball((0, 0), 1)])


def test_invalid_inputs():
    with pytest.raises(InvalidParameters):
        Ball((0, 0), 0)
    with pytest.raises(InvalidParameters):
        PointCloud([[0, np.nan]])
    with pytest.raises(InvalidParameters):
        PointCloud([[0, 0]], guard=-1)
    with pytest.raises(InvalidParameters):
        Hyperplane((0, 0), 1)


def test_labeled_dataset_merge_keeps_order():
    d = LabeledDataset(((1, PointCloud([[0, 0]])), (0, PointCloud([[1, 1]])),
                        (1, PointCloud([[2, 2]]))))
    merged = d.merged()
    assert sorted(merged) == [0, 1]
    assert merged[1].points.tolist() == [[0, 0], [2, 2]]
    assert d.dim == 2


def test_ball_roundtrip_dict():
    b = Ball((1.5, -2.0, 0.25), 0.75)
    c = Ball.from_dict(b.to_dict())
    assert np.array_equal(c.center, b.center) and c.radius == b.radius


@settings(max_examples=60, deadline=None)
@given(cloud_strategy(), cloud_strategy())
def test_dist_symmetric(a, b):
    assert dist_set_set(a, b) == dist_set_set(b, a)
    assert dist_set_set(a, a) == 0.0


@settings(max_examples=60, deadline=None)
@given(cloud_strategy(), st.floats(0.1, 200), st.floats(0, 1), st.floats(0, 5), st.floats(0, 1))
def test_containment_monotone(c, r, slack, grow, shrink):
    b = Ball((0, 0), r)
    if ball_contains_cloud(b, c, slack):
        assert ball_contains_cloud(Ball((0, 0), r + grow), c, slack)
        assert ball_contains_cloud(b, c, slack * shrink)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coords, coords, st.floats(0.1, 10)), min_size=0, max_size=6),
       st.randoms(use_true_random=False))
def test_balls_disjoint_permutation_invariant(spec, rnd):
    balls = [Ball((x, y), r) for x, y, r in spec]
    shuffled = balls[:]
    rnd.shuffle(shuffled)
    assert balls_disjoint(balls) == balls_disjoint(shuffled)
