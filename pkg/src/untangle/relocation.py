"""End-to-end relocation of disjoint sampled sets into target balls.

:func:`relocate_disjoint` composes two stages: every set is first compressed
towards the center of its source ball (supports stay inside the source
balls), then each compressed set is transported along an obstacle-avoiding
chain of balls into its target.  While set ``i`` travels, the obstacles are
the source balls of the sets still waiting and the targets already filled.

For sets that cannot be enclosed in disjoint balls (a ring around a disk,
linked circles) :func:`lift_relocate_project` adds one coordinate that
separates the classes by height, relocates in the lifted space and projects
back down.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidParameters, RelocationFailed
from .flows import (
    MAX_STEP,
    THETA_FACTOR,
    DiffeoPipeline,
    concat,
    make_compression,
)
from .geometry import (
    Ball,
    LabeledDataset,
    PointCloud,
    ball_contains_cloud,
    balls_disjoint,
    containment_slack,
    dist_set_set,
    dist_to_sets,
)
from .transport import make_transport, plan_path

log = logging.getLogger(__name__)

# r_bar = min(delta_i, r_i / 2) * R_BAR_SAFETY absorbs integrator error.
R_BAR_SAFETY = 0.5
# Auto lift height C = LIFT_FACTOR * R (must exceed 4 R).
LIFT_FACTOR = 5.0
PROBE_COUNT = 100


@dataclass(frozen=True)
class RelocationProblem:
    sets: tuple  # of (PointCloud, Ball)
    targets: tuple  # of Ball

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple((c, b) for c, b in self.sets))
        object.__setattr__(self, "targets", tuple(self.targets))

    @property
    def dim(self):
        return self.sets[0][1].dim

    def validate(self):
        if len(self.sets) != len(self.targets):
            raise InvalidParameters("need exactly one target per set")
        if not self.sets:
            raise InvalidParameters("nothing to relocate")
        dims = {c.dim for c, _ in self.sets} | {b.dim for _, b in self.sets}
        dims |= {t.dim for t in self.targets}
        if len(dims) != 1:
            raise DimensionMismatch(f"mixed dimensions {sorted(dims)}")
        if self.dim < 2:
            raise InvalidParameters("relocation needs dimension >= 2")
        sources = [b for _, b in self.sets]
        if not balls_disjoint(sources):
            raise InvalidParameters("source balls must be pairwise disjoint")
        if not balls_disjoint(self.targets):
            raise InvalidParameters("target balls must be pairwise disjoint")
        for i, (cloud, ball) in enumerate(self.sets):
            if not ball_contains_cloud(ball, cloud):
                raise InvalidParameters(f"set {i} is not inside its source ball")
        for j, t in enumerate(self.targets):
            for i, s in enumerate(sources):
                if not balls_disjoint([t, s]):
                    raise InvalidParameters(f"target {j} meets source ball {i}")


@dataclass(frozen=True)
class LiftSpec:
    C: float
    R: float
    heights: tuple

    def __post_init__(self):
        object.__setattr__(self, "heights", tuple(float(h) for h in self.heights))
        if not (self.R > 0 and self.C > 0):
            raise InvalidParameters("C and R must be positive")
        if not self.C > 4 * self.R:
            raise InvalidParameters(f"lift height C={self.C} must exceed 4R={4 * self.R}")
        hs = sorted(self.heights)
        for a, b in zip(hs[:-1], hs[1:]):
            if not b - a > 4 * self.R:
                raise InvalidParameters("consecutive lift heights must differ by more than 4R")

    @classmethod
    def auto(cls, count: int, R: float, C: float | None = None) -> LiftSpec:
        C = LIFT_FACTOR * R if C is None else C
        return cls(C, R, tuple(j * C for j in range(count)))


@dataclass
class _Leg:
    """Transport of one set, planned before the compressions are sized."""

    delta1: float
    pipeline: DiffeoPipeline


def _compression_for(cloud: PointCloud, source: Ball, r_bar: float, max_step):
    reach = float(np.linalg.norm(cloud.points - source.center, axis=1).max()) + cloud.guard
    if not reach < source.radius:
        raise InvalidParameters("set touches the boundary of its source ball")
    # plateau strictly contains the set, support stays inside the source
    r = min(reach * (1 + 1e-6) + 1e-9, 0.5 * (reach + source.radius))
    theta = min((1.0 + THETA_FACTOR) * r, 0.5 * (r + source.radius))
    if r_bar >= r:
        return None
    return make_compression(source.center, r, r_bar, theta, max_step=max_step)


def _probe_points(dim: int, supports: Sequence[Ball], extra: Sequence[Ball]) -> np.ndarray:
    balls = list(supports) + list(extra)
    reach = max((np.linalg.norm(b.center) + b.radius for b in balls), default=1.0)
    rng = np.random.Generator(np.random.PCG64(20240601))
    g = rng.standard_normal((PROBE_COUNT, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (5.0 * reach + 1.0)


def relocate_disjoint(problem: RelocationProblem, order: Sequence[int] | None = None,
                      max_step=MAX_STEP, verify=True, paths=None) -> DiffeoPipeline:
    """Pipeline taking every set into its own target ball.

    ``order`` permutes the processing order of the transport legs.  ``paths``
    optionally maps a set index to a user polyline from its source center to
    its target center, replacing the planned one.
    """
    problem.validate()
    m = len(problem.sets)
    order = list(range(m)) if order is None else list(order)
    if sorted(order) != list(range(m)):
        raise InvalidParameters("order must be a permutation of the set indices")
    sources = [b for _, b in problem.sets]

    legs: dict[int, _Leg] = {}
    for pos, i in enumerate(order):
        waiting = [sources[j].as_obstacle() for j in order[pos + 1:]]
        filled = [problem.targets[j].as_obstacle() for j in order[:pos]]
        obstacles = waiting + filled
        p, q = sources[i].center, problem.targets[i].center
        target_r = problem.targets[i].radius
        if paths and i in paths:
            path = paths[i]
        elif obstacles:
            clearance = 0.5 * min(dist_to_sets(PointCloud(p), obstacles),
                                  dist_to_sets(PointCloud(q), obstacles))
            path = plan_path(p, q, obstacles, clearance)
        else:
            path = plan_path(p, q, [], 1.0)
        delta1, pipe = make_transport(p, q, path, obstacles, 0.5 * target_r, max_step)
        legs[i] = _Leg(delta1, pipe)
        log.debug("set %d: %d transport stages, delta1=%.4g", i, len(pipe), delta1)

    compressions = []
    for i, (cloud, source) in enumerate(problem.sets):
        r_bar = R_BAR_SAFETY * min(legs[i].delta1, 0.5 * problem.targets[i].radius)
        flow = _compression_for(cloud, source, r_bar, max_step)
        if flow is not None:
            compressions.append(flow)
    pipeline = concat([DiffeoPipeline(tuple(compressions))] + [legs[i].pipeline for i in order])

    if verify:
        verify_relocation(pipeline, problem)
    return pipeline


def apply_to_clouds(pipeline: DiffeoPipeline, clouds: Sequence[PointCloud]) -> list[PointCloud]:
    """Images of several clouds from a single pass through the pipeline."""
    clouds = list(clouds)
    if not clouds:
        return []
    moved = pipeline.apply(np.vstack([c.points for c in clouds]))
    cuts = np.cumsum([len(c) for c in clouds])[:-1]
    return [c.with_points(m) for c, m in zip(clouds, np.split(moved, cuts))]


def verify_relocation(pipeline: DiffeoPipeline, problem: RelocationProblem,
                      images: Sequence[PointCloud] | None = None) -> dict:
    """Check containment of every image and far-field identity; raise on failure."""
    report = {"containment": [], "slack": [], "probe_max_displacement": 0.0}
    if images is None:
        images = apply_to_clouds(pipeline, [c for c, _ in problem.sets])
    for i, (image, target) in enumerate(zip(images, problem.targets)):
        ok = ball_contains_cloud(target, image)
        report["containment"].append(ok)
        report["slack"].append(containment_slack(target, image))
        if not ok:
            raise RelocationFailed(f"set {i} leaked out of its target ball", index=i)
    probes = _probe_points(problem.dim, pipeline.supports(),
                           list(problem.targets) + [b for _, b in problem.sets])
    moved = pipeline.apply(probes)
    report["probe_max_displacement"] = float(np.abs(moved - probes).max())
    if np.any(moved != probes):
        raise RelocationFailed("far-field probe points were moved")
    return report


def layout_targets(l: int, sources: Sequence[Ball], radius: float) -> list[Ball]:
    """``l`` collinear balls on the positive first axis, clear of ``sources``.

    Centers are ``p_1 + j v`` with ``v = 2.5 radius e_1``.
    """
    if l < 1:
        raise InvalidParameters("need at least one label")
    if not radius > 0:
        raise InvalidParameters("radius must be positive")
    sources = list(sources)
    if not sources:
        raise InvalidParameters("layout needs the source balls to avoid")
    dim = sources[0].dim
    extent = max(np.linalg.norm(b.center) + b.radius for b in sources)
    e1 = np.zeros(dim)
    e1[0] = 1.0
    start = extent + 5.0 * radius
    v = 2.5 * radius * e1
    while True:
        balls = [Ball(start * e1 + j * v, radius) for j in range(l)]
        if all(balls_disjoint([b, s]) for b in balls for s in sources):
            break
        start += radius
    assert balls_disjoint(balls)
    return balls


def assign_label_subtargets(classes: LabeledDataset, label_balls) -> list[Ball]:
    """Per-entry targets: ``k`` entries sharing a label get ``k`` disjoint
    sub-balls packed along a diameter of that label's ball.

    ``label_balls`` maps label -> Ball (a list is indexed by label).
    """
    labels = classes.labels
    counts = {lbl: labels.count(lbl) for lbl in set(labels)}
    seen = {lbl: 0 for lbl in counts}
    out = []
    for lbl in labels:
        try:
            B = label_balls[lbl]
        except (KeyError, IndexError):
            raise InvalidParameters(f"no label ball for label {lbl}") from None
        k, j = counts[lbl], seen[lbl]
        seen[lbl] += 1
        e1 = np.zeros(B.dim)
        e1[0] = 1.0
        offset = B.radius * (-1.0 + (2 * j + 1) / k)
        out.append(Ball(B.center + offset * e1, B.radius / (2 * k)))
    return out


def lift_embed(d: LabeledDataset, spec: LiftSpec) -> LabeledDataset:
    """Append a per-class height coordinate: ``x -> (x, heights[i])``."""
    if len(spec.heights) != len(d.classes):
        raise InvalidParameters("need one height per class entry")
    clouds = d.clouds
    for i in range(len(clouds)):
        for j in range(i + 1, len(clouds)):
            if d.labels[i] != d.labels[j] and not dist_set_set(clouds[i], clouds[j]) > 0:
                raise InvalidParameters(f"classes {i} and {j} are not disjoint")
    for c in clouds:
        if np.linalg.norm(c.points, axis=1).max() + c.guard > spec.R:
            raise InvalidParameters(f"a class leaves the bounding ball B(0, {spec.R})")
    lifted = []
    for (lbl, c), h in zip(d.classes, spec.heights):
        col = np.full((len(c), 1), h)
        lifted.append((lbl, PointCloud(np.hstack([c.points, col]), c.guard)))
    return LabeledDataset(tuple(lifted))


def lifted_source_balls(d: LabeledDataset, spec: LiftSpec) -> list[Ball]:
    n = d.dim
    return [Ball(np.r_[np.zeros(n), h], 2.0 * spec.R) for h in spec.heights]


def project_down(c: PointCloud, n: int) -> PointCloud:
    if n < 1:
        raise InvalidParameters("target dimension must be positive")
    if c.dim < n:
        raise DimensionMismatch(f"cannot project dimension {c.dim} down to {n}")
    return PointCloud(c.points[:, :n], c.guard)


def lift_relocate_project(d: LabeledDataset, final_targets: Sequence[Ball],
                          C: float | None = None, max_step=MAX_STEP):
    """Lift by class height, relocate in one dimension up, project back.

    Returns ``(pipeline_up, images)``; ``images`` lives in the original space
    and entry ``i`` is contained in ``final_targets[i]``.
    """
    final_targets = list(final_targets)
    if len(final_targets) != len(d.classes):
        raise InvalidParameters("need one final target per class entry")
    n = d.dim
    if any(t.dim != n for t in final_targets):
        raise DimensionMismatch("final targets must live in the data dimension")
    R = max(float(np.linalg.norm(c.points, axis=1).max()) + c.guard for c in d.clouds)
    R = R * (1 + 1e-6) + 1e-9
    spec = LiftSpec.auto(len(d.classes), R, C)
    lifted = lift_embed(d, spec)
    sources = lifted_source_balls(d, spec)

    # lifted targets sit below every source ball, one height band each
    rmax = max(t.radius for t in final_targets)
    lifted_targets = []
    for j, t in enumerate(final_targets):
        h = -(3.0 * R + rmax + 3.0 * rmax * j)
        lifted_targets.append(Ball(np.r_[t.center, h], t.radius))

    problem = RelocationProblem(tuple(zip(lifted.clouds, sources)), tuple(lifted_targets))
    pipeline_up = relocate_disjoint(problem, max_step=max_step, verify=False)
    up_images = apply_to_clouds(pipeline_up, lifted.clouds)
    verify_relocation(pipeline_up, problem, up_images)
    images = []
    for i, (lbl, up) in enumerate(zip(lifted.labels, up_images)):
        down = project_down(up, n)
        if not ball_contains_cloud(final_targets[i], down):
            raise RelocationFailed(f"class {i} misses its final target after projection", index=i)
        images.append((lbl, down))
    return pipeline_up, LabeledDataset(tuple(images))
