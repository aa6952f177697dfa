import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from untangle import datasets
from untangle.datasets import sample_ball
from untangle.errors import DimensionMismatch, InvalidParameters, RelocationFailed
from untangle.flows import DiffeoPipeline, jacobian_fd, make_translation
from untangle.geometry import (
    Ball,
    LabeledDataset,
    PointCloud,
    ball_contains_cloud,
    balls_disjoint,
    dist_set_set,
)
from untangle.relocation import (
    LiftSpec,
    RelocationProblem,
    apply_to_clouds,
    assign_label_subtargets,
    layout_targets,
    lift_embed,
    lift_relocate_project,
    lifted_source_balls,
    project_down,
    relocate_disjoint,
    verify_relocation,
)
from untangle.separability import certify_pairwise


def disk_swap_problem():
    sets = []
    for k, x in enumerate((-3.0, 3.0)):
        cloud = sample_ball(Ball((x, 0), 0.5), 80, seed=30 + k)
        sets.append((cloud, Ball((x, 0), 1.0)))
    return RelocationProblem(tuple(sets), (Ball((0, 6), 1.0), Ball((0, -6), 1.0)))


def three_set_problem_3d():
    centers = [(-4.0, 0.0, 0.0), (4.0, 0.0, 0.0), (0.0, 4.0, 0.0)]
    sets = []
    for k, c in enumerate(centers):
        sets.append((sample_ball(Ball(c, 0.8), 60, seed=40 + k), Ball(c, 1.0)))
    targets = (Ball((0, 0, 6), 0.7), Ball((0, -4, 0), 0.7), Ball((0, 0, -6), 0.7))
    return RelocationProblem(tuple(sets), targets)


def far_probes(dim, radius, count=100, seed=50):
    g = np.random.default_rng(seed).standard_normal((count, dim))
    return radius * g / np.linalg.norm(g, axis=1, keepdims=True)


def test_single_set_example():
    cloud = sample_ball(Ball((0, 0), 0.5), 50, seed=31)
    problem = RelocationProblem(((cloud, Ball((0, 0), 1.0)),), (Ball((5, 5), 1.0),))
    pipe = relocate_disjoint(problem)
    image = PointCloud(pipe.apply(cloud.points))
    assert ball_contains_cloud(Ball((5, 5), 1.0), image)
    probes = far_probes(2, 10.0) * np.linspace(1, 3, 100)[:, None]
    assert np.array_equal(pipe.apply(probes), probes)


def test_disk_swap():
    problem = disk_swap_problem()
    pipe = relocate_disjoint(problem)
    images = apply_to_clouds(pipe, [c for c, _ in problem.sets])
    for img, target in zip(images, problem.targets):
        assert ball_contains_cloud(target, img)
    # at the final state set 0 is nowhere near the other source ball
    assert dist_set_set(images[0], problem.sets[1][1].as_obstacle()) > 0
    report = verify_relocation(pipe, problem)
    assert report["containment"] == [True, True]
    assert report["probe_max_displacement"] == 0.0
    assert min(report["slack"]) >= 0


def test_three_sets_in_three_dimensions():
    problem = three_set_problem_3d()
    pipe = relocate_disjoint(problem)
    images = apply_to_clouds(pipe, [c for c, _ in problem.sets])
    for img, target in zip(images, problem.targets):
        assert ball_contains_cloud(target, img)


@pytest.mark.parametrize("order", list(itertools.permutations(range(3))))
def test_order_insensitive_delivery(order):
    problem = three_set_problem_3d()
    pipe = relocate_disjoint(problem, order=order)
    images = apply_to_clouds(pipe, [c for c, _ in problem.sets])
    assert all(ball_contains_cloud(t, im) for t, im in zip(problem.targets, images))


def test_relocation_pipeline_is_a_diffeomorphism():
    problem = disk_swap_problem()
    pipe = relocate_disjoint(problem)
    X = np.random.default_rng(51).uniform(-8, 8, (500, 2))
    assert np.abs(pipe.invert(pipe.apply(X)) - X).max() <= 1e-5
    pts = np.random.default_rng(52).uniform(-4, 4, (10, 2))
    for stage in pipe.stages[:8]:
        single = DiffeoPipeline((stage,))
        for x in pts:
            assert np.linalg.det(jacobian_fd(single, x)) > 0


def test_user_paths_override():
    problem = disk_swap_problem()
    paths = {0: np.array([[-3.0, 0.0], [-3.0, 3.0], [0.0, 6.0]])}
    from untangle.transport import Path
    pipe = relocate_disjoint(problem, paths={0: Path(paths[0])})
    assert verify_relocation(pipe, problem)["containment"] == [True, True]


def test_problem_validation():
    cloud = sample_ball(Ball((0, 0), 0.5), 10, seed=1)
    with pytest.raises(InvalidParameters):
        relocate_disjoint(RelocationProblem(((cloud, Ball((0, 0), 1)),), (Ball((1.5, 0), 1),)))
    with pytest.raises(InvalidParameters):
        relocate_disjoint(RelocationProblem(((cloud, Ball((0, 0), 0.4)),), (Ball((5, 0), 1),)))
    with pytest.raises(InvalidParameters):
        relocate_disjoint(RelocationProblem(((cloud, Ball((0, 0), 1)),), ()))
    line = PointCloud([[0.0], [0.1]])
    with pytest.raises(InvalidParameters):
        relocate_disjoint(RelocationProblem(((line, Ball((0,), 1)),), (Ball((5,), 1),)))
    with pytest.raises(InvalidParameters):
        relocate_disjoint(disk_swap_problem(), order=[0, 0])
    sets = disk_swap_problem().sets
    with pytest.raises(InvalidParameters):
        relocate_disjoint(RelocationProblem(sets, (Ball((0, 6), 1), Ball((0, 6.5), 1))))


def test_verification_reports_leak():
    problem = disk_swap_problem()
    bogus = DiffeoPipeline((make_translation((-3, 0), 2.0, (-3, 0), (-3, 1)),))
    with pytest.raises(RelocationFailed) as err:
        verify_relocation(bogus, problem)
    assert err.value.index == 0


# ----------------------------------------------------------------- layout

def test_layout_targets_example():
    sources = [Ball((-1, 1), 1), Ball((1, -1), 1), Ball((0, 0), 5)]
    balls = layout_targets(3, sources, 1.0)
    assert [b.center.tolist() for b in balls] == [[10, 0], [12.5, 0], [15, 0]]
    assert all(b.radius == 1.0 for b in balls)


def test_layout_single_ball():
    balls = layout_targets(1, [Ball((0, 0, 0), 2)], 0.5)
    assert len(balls) == 1 and balls_disjoint(balls + [Ball((0, 0, 0), 2)])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.floats(0.1, 3),
       st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 3)), min_size=1,
                max_size=4))
def test_layout_properties(l, radius, spec):
    sources = [Ball((x, y), r) for x, y, r in spec]
    balls = layout_targets(l, sources, radius)
    assert balls_disjoint(balls)
    assert all(balls_disjoint([b, s]) for b in balls for s in sources)
    xs = [b.center[0] for b in balls]
    for a, b in zip(xs[:-1], xs[1:]):
        mid = 0.5 * (a + b)
        assert a + radius < mid < b - radius


def test_layout_images_margin():
    balls = layout_targets(3, [Ball((0, 0), 5)], 1.0)
    clouds = [(j, sample_ball(b, 200, seed=60 + j)) for j, b in enumerate(balls)]
    cert = certify_pairwise(LabeledDataset(tuple(clouds)))
    assert cert.all_separable
    assert all(p.margin >= 0.25 for p in cert.pairs)


def test_assign_label_subtargets():
    one = LabeledDataset(((0, PointCloud([[0, 0]])), (1, PointCloud([[1, 1]]))))
    b0, b1 = Ball((10, 0), 1), Ball((13, 0), 1)
    subs = assign_label_subtargets(one, [b0, b1])
    assert np.array_equal(subs[0].center, b0.center) and subs[0].radius == 0.5
    two = LabeledDataset(((0, PointCloud([[0, 0]])), (0, PointCloud([[1, 1]]))))
    subs = assign_label_subtargets(two, {0: Ball((0, 0), 1)})
    assert [s.center.tolist() for s in subs] == [[-0.5, 0], [0.5, 0]]
    assert [s.radius for s in subs] == [0.25, 0.25] and balls_disjoint(subs)
    three = LabeledDataset(tuple((0, PointCloud([[float(i), 0]])) for i in range(3)))
    subs = assign_label_subtargets(three, {0: Ball((0, 0), 1)})
    assert np.allclose([s.center[0] for s in subs], [-2 / 3, 0, 2 / 3], atol=1e-15)
    assert all(s.radius == pytest.approx(1 / 6) for s in subs) and balls_disjoint(subs)
    with pytest.raises(InvalidParameters):
        assign_label_subtargets(one, {0: b0})


# ------------------------------------------------------------------- lift

def test_lift_hopf_heights():
    d = datasets.gen_hopf_link(64)
    spec = LiftSpec(15.0, 3.0, (0.0, 15.0))
    lifted = lift_embed(d, spec)
    assert lifted.dim == 4
    assert np.all(lifted.clouds[0].points[:, 3] == 0) and np.all(lifted.clouds[1].points[:, 3] == 15)
    balls = lifted_source_balls(d, spec)
    assert [b.radius for b in balls] == [6.0, 6.0] and balls_disjoint(balls)
    for c, b in zip(lifted.clouds, balls):
        assert ball_contains_cloud(b, c)


def test_lift_height_rule():
    with pytest.raises(InvalidParameters):
        LiftSpec(12.0, 3.0, (0.0, 12.0))
    with pytest.raises(InvalidParameters):
        LiftSpec(15.0, 3.0, (0.0, 15.0, 20.0))


def test_single_class_lift_is_inclusion():
    c = PointCloud(np.random.default_rng(2).uniform(-1, 1, (20, 2)))
    d = LabeledDataset(((0, c),))
    lifted = lift_embed(d, LiftSpec.auto(1, 2.0))
    assert np.array_equal(lifted.clouds[0].points, np.hstack([c.points, np.zeros((20, 1))]))


def test_lift_rejects_overlap_and_escape():
    c = PointCloud([[0.0, 0.0], [0.5, 0.0]])
    with pytest.raises(InvalidParameters):
        lift_embed(LabeledDataset(((0, c), (1, c))), LiftSpec.auto(2, 1.0))
    with pytest.raises(InvalidParameters):
        lift_embed(LabeledDataset(((0, c),)), LiftSpec.auto(1, 0.4))


def test_project_down_examples():
    assert project_down(PointCloud([[1, 2, 3]]), 2).points.tolist() == [[1, 2]]
    c = PointCloud(np.random.default_rng(3).normal(size=(30, 3)), guard=0.1)
    R = float(np.linalg.norm(c.points, axis=1).max()) + c.guard + 1.0
    lifted = lift_embed(LabeledDataset(((0, c),)), LiftSpec.auto(1, R))
    back = project_down(lifted.clouds[0], 3)
    assert np.array_equal(back.points, c.points) and back.guard == 0.1
    with pytest.raises(DimensionMismatch):
        project_down(PointCloud([[1, 2]]), 3)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=8, max_size=8), st.integers(1, 4))
def test_projection_is_one_lipschitz(vals, n):
    u, v = np.array(vals[:4]), np.array(vals[4:])
    pu = project_down(PointCloud([u]), n).points[0]
    pv = project_down(PointCloud([v]), n).points[0]
    assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) * (1 + 1e-12)


def test_lift_relocate_project_hopf():
    d = datasets.gen_hopf_link(128)
    targets = [Ball((20, 0, 0), 2), Ball((-20, 0, 0), 2)]
    pipe, images = lift_relocate_project(d, targets)
    assert pipe.dim == 4
    for img, t in zip(images.clouds, targets):
        assert ball_contains_cloud(t, img)
    assert certify_pairwise(images).all_separable


def test_lift_relocate_project_already_separated():
    a = sample_ball(Ball((-2, 0), 0.5), 40, seed=70)
    b = sample_ball(Ball((2, 0), 0.5), 40, seed=71)
    d = LabeledDataset(((0, a), (1, b)))
    targets = [Ball((0, 8), 1), Ball((0, -8), 1)]
    _, images = lift_relocate_project(d, targets)
    assert all(ball_contains_cloud(t, im) for t, im in zip(targets, images.clouds))


def test_lift_relocate_project_rings():
    d = datasets.gen_toy_abc(60, seed=3)
    assert not certify_pairwise(d).all_separable
    targets = layout_targets(3, [Ball((0, 0), 5)], 1.0)
    _, images = lift_relocate_project(d, targets)
    assert all(ball_contains_cloud(t, im) for t, im in zip(targets, images.clouds))
    assert certify_pairwise(images).all_separable
