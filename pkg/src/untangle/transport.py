"""Obstacle-avoiding transport of a small ball along a polyline.

The path is covered by a chain of overlapping balls of radius ``rho`` (half
the path's clearance from the obstacles).  Each ball hosts one translation
flow moving a hop point to the next, and the composition carries a small
ball around ``p`` rigidly to ``q`` while fixing every obstacle point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParameters, PlanningFailed
from .flows import MAX_STEP, DiffeoPipeline, make_translation
from .geometry import Ball, PointCloud, as_point, as_points, dist_to_sets

# Consecutive chain centers are OVERLAP * rho apart along the path.
OVERLAP = 0.9
# delta_1 = min(delta_2, DELTA1_FACTOR * rho).
DELTA1_FACTOR = 0.05
DETOUR_DIRECTIONS = 16
MAX_DETOUR_DOUBLINGS = 30


def _obstacle_list(k) -> list[PointCloud]:
    if k is None:
        return []
    if isinstance(k, PointCloud):
        return [k]
    return list(k)


@dataclass(frozen=True)
class Path:
    """Polyline through ``waypoints``; repeated consecutive waypoints are merged."""

    waypoints: np.ndarray

    def __post_init__(self):
        w = as_points(self.waypoints)
        if w.shape[0] < 1:
            raise InvalidParameters("a path needs at least one waypoint")
        keep = np.r_[True, np.any(np.diff(w, axis=0) != 0, axis=1)]
        w = w[keep].copy()
        w.flags.writeable = False
        object.__setattr__(self, "waypoints", w)
        seg = np.linalg.norm(np.diff(w, axis=0), axis=1)
        object.__setattr__(self, "_cum", np.r_[0.0, np.cumsum(seg)])

    @property
    def dim(self) -> int:
        return self.waypoints.shape[1]

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]

    @property
    def length(self) -> float:
        return float(self._cum[-1])

    def point_at(self, s: float) -> np.ndarray:
        """Point at arc length ``s`` (clamped to the path)."""
        if self.waypoints.shape[0] == 1 or s <= 0:
            return self.waypoints[0].copy()
        if s >= self.length:
            return self.waypoints[-1].copy()
        i = int(np.searchsorted(self._cum, s, side="right")) - 1
        frac = (s - self._cum[i]) / (self._cum[i + 1] - self._cum[i])
        return self.waypoints[i] + frac * (self.waypoints[i + 1] - self.waypoints[i])

    def densify(self, spacing: float) -> np.ndarray:
        """Samples including every waypoint, consecutive samples <= spacing apart."""
        out = [self.waypoints[:1]]
        for a, b in zip(self.waypoints[:-1], self.waypoints[1:]):
            k = max(1, math.ceil(np.linalg.norm(b - a) / spacing))
            t = np.arange(1, k + 1)[:, None] / k
            out.append(a + t * (b - a))
        return np.vstack(out)

    def to_list(self) -> list:
        return self.waypoints.tolist()


@dataclass(frozen=True)
class TransportPlan:
    balls: tuple
    hops: tuple
    rho: float
    delta1: float


def safety_radius(path: Path, k) -> float:
    """Half the distance between the path and the obstacle set(s) ``k``.

    The path is re-densified until its sample spacing is at most rho/4.
    """
    obstacles = _obstacle_list(k)
    if not obstacles:
        raise InvalidParameters("safety_radius needs at least one obstacle cloud")
    spacing = max(path.length / 16, 1e-9)
    for _ in range(60):
        samples = PointCloud(path.densify(spacing))
        rho = 0.5 * dist_to_sets(samples, obstacles)
        if not rho > 0:
            raise PlanningFailed("path touches the obstacle set")
        if spacing <= rho / 4:
            return rho
        spacing = rho / 4
    raise PlanningFailed("safety radius did not stabilize")


def cover_path(path: Path, rho: float) -> TransportPlan:
    """Greedy arc-length chain of balls covering ``path``."""
    if not rho > 0:
        raise InvalidParameters("rho must be positive")
    L = path.length
    step = OVERLAP * rho
    count = int(math.floor(L / step + 1e-12)) + 1
    arcs = [j * step for j in range(count)]
    centers = [path.point_at(s) for s in arcs]
    balls = tuple(Ball(c, rho) for c in centers)
    if L == 0:
        return TransportPlan(balls, (), rho, DELTA1_FACTOR * rho)
    hop_points = [path.start.copy()]
    for a, b in zip(arcs[:-1], arcs[1:]):
        hop_points.append(path.point_at(0.5 * (a + b)))
    hop_points.append(path.end.copy())
    hops = tuple(zip(hop_points[:-1], hop_points[1:]))
    return TransportPlan(balls, hops, rho, DELTA1_FACTOR * rho)


def plan_to_pipeline(plan: TransportPlan, max_step=MAX_STEP) -> DiffeoPipeline:
    stages = tuple(
        make_translation(ball.center, ball.radius, a, b, max_step=max_step)
        for ball, (a, b) in zip(plan.balls, plan.hops)
        if np.any(a != b)
    )
    return DiffeoPipeline(stages)


def make_transport(p, q, path: Path, k, delta2: float, max_step=MAX_STEP):
    """Diffeomorphism moving B(p, delta1) into B(q, delta2) and fixing ``k``.

    Returns ``(delta1, pipeline)``.
    """
    p = as_point(p)
    q = as_point(q, p.size)
    if p.size < 2:
        raise InvalidParameters("transport needs dimension >= 2")
    if not delta2 > 0:
        raise InvalidParameters("delta2 must be positive")
    if path.dim != p.size:
        raise InvalidParameters("path dimension differs from endpoints")
    tol = 1e-9 * (1.0 + max(np.abs(p).max(), np.abs(q).max()))
    if np.abs(path.start - p).max() > tol or np.abs(path.end - q).max() > tol:
        raise InvalidParameters("path must start at p and end at q")
    obstacles = _obstacle_list(k)
    if obstacles:
        rho = safety_radius(path, obstacles)
    else:
        # nothing to avoid: a few balls keep the tube close to the path
        rho = path.length / 4.0 if path.length > 0 else delta2
    plan = cover_path(path, rho)
    pipeline = plan_to_pipeline(plan, max_step)
    for stage in pipeline.stages:
        if obstacles and dist_to_sets(stage.support().as_obstacle(), obstacles) <= 0:
            raise PlanningFailed("a transport stage touches the obstacle set")
    return min(delta2, DELTA1_FACTOR * rho), pipeline


def _path_clear(path: Path, obstacles, clearance: float) -> bool:
    if not obstacles:
        return True
    spacing = clearance / 4
    samples = PointCloud(path.densify(spacing))
    return dist_to_sets(samples, obstacles) > clearance + 0.5 * spacing


def _orthonormal_complement(v: np.ndarray) -> np.ndarray:
    n = v.size
    M = np.column_stack([v / np.linalg.norm(v), np.eye(n)])
    Q, _ = np.linalg.qr(M)
    return Q[:, 1:n].T


def detour_directions(p, q) -> list[np.ndarray]:
    comp = _orthonormal_complement(np.asarray(q, float) - np.asarray(p, float))
    if comp.shape[0] == 1:
        return [comp[0], -comp[0]]
    out = []
    for k in range(DETOUR_DIRECTIONS):
        ang = 2 * math.pi * k / DETOUR_DIRECTIONS
        out.append(math.cos(ang) * comp[0] + math.sin(ang) * comp[1])
    return out


def plan_path(p, q, obstacles, clearance: float) -> Path:
    """Straight segment if clear, else the first clearing one-bend detour.

    Detours bend at ``midpoint + r u`` for ``u`` orthogonal to ``q - p`` and
    ``r`` in 2, 4, 8, ... times ``clearance`` (smallest bend first).
    """
    p = as_point(p)
    q = as_point(q, p.size)
    if p.size < 2:
        raise InvalidParameters("path planning needs dimension >= 2")
    if not clearance > 0:
        raise InvalidParameters("clearance must be positive")
    obstacles = _obstacle_list(obstacles)
    for end in (p, q):
        if obstacles and not dist_to_sets(PointCloud(end), obstacles) > clearance:
            raise PlanningFailed(f"endpoint {end.tolist()} is within clearance of an obstacle")
    straight = Path(np.vstack([p, q]))
    if _path_clear(straight, obstacles, clearance) or np.all(p == q):
        return straight
    mid = 0.5 * (p + q)
    dirs = detour_directions(p, q)
    radius = 2.0 * clearance
    for _ in range(MAX_DETOUR_DOUBLINGS):
        for u in dirs:
            cand = Path(np.vstack([p, mid + radius * u, q]))
            if _path_clear(cand, obstacles, clearance):
                return cand
        radius *= 2.0
    raise PlanningFailed("no clearing path in the straight/one-bend candidate family")
