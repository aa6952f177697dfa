"""Points, balls, sampled compact sets and the distance predicates on them.

A compact set is stood in for by a finite sample plus a guard radius: the
true set is assumed to lie within ``guard`` of the samples, so every
distance/containment answer here is conservative by that amount.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidParameters

# Rows per block when computing pairwise distances; bounds memory at ~8 MB.
_CHUNK = 1024


def as_point(x, dim=None) -> np.ndarray:
    """Return ``x`` as a read-only 1-D float array, validating it."""
    p = np.array(x, dtype=float).reshape(-1)
    if p.size < 1:
        raise InvalidParameters("a point needs at least one coordinate")
    if not np.all(np.isfinite(p)):
        raise InvalidParameters(f"non-finite coordinates in {p!r}")
    if dim is not None and p.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {p.size}")
    p.flags.writeable = False
    return p


def as_points(xs, dim=None) -> np.ndarray:
    arr = np.array(xs, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidParameters("points must form a 2-D array (count, dim)")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {arr.shape[1]}")
    return arr


@dataclass(frozen=True)
class Ball:
    """Open ball ``{x : |x - center| < radius}``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        r = float(self.radius)
        if not (r > 0 and np.isfinite(r)):
            raise InvalidParameters(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, x) -> bool:
        return bool(np.linalg.norm(np.asarray(x, float) - self.center) < self.radius)

    def as_obstacle(self) -> PointCloud:
        """The closed ball as a one-point cloud whose guard is the radius."""
        return PointCloud(self.center.reshape(1, -1), guard=self.radius)

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "radius": self.radius}

    @classmethod
    def from_dict(cls, d) -> Ball:
        return cls(d["center"], d["radius"])


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    guard: float = 0.0

    def __post_init__(self):
        pts = as_points(self.points)
        if pts.shape[0] == 0:
            raise InvalidParameters("a point cloud must be non-empty")
        if not np.all(np.isfinite(pts)):
            raise InvalidParameters("point cloud contains non-finite coordinates")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        g = float(self.guard)
        if not g >= 0:
            raise InvalidParameters(f"guard must be non-negative, got {self.guard}")
        object.__setattr__(self, "guard", g)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def with_points(self, points) -> PointCloud:
        return PointCloud(points, self.guard)


@dataclass(frozen=True)
class LabeledDataset:
    """Labeled clouds; labels may repeat across entries."""

    classes: tuple
    source_balls: tuple | None = None

    def __post_init__(self):
        classes = tuple((int(lbl), cloud) for lbl, cloud in self.classes)
        dims = {c.dim for _, c in classes}
        if len(dims) > 1:
            raise DimensionMismatch(f"clouds have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "classes", classes)
        if self.source_balls is not None:
            balls = tuple(self.source_balls)
            if len(balls) != len(classes):
                raise InvalidParameters("source_balls must align with classes")
            object.__setattr__(self, "source_balls", balls)

    @property
    def dim(self) -> int | None:
        return self.classes[0][1].dim if self.classes else None

    @property
    def labels(self) -> list[int]:
        return [lbl for lbl, _ in self.classes]

    @property
    def clouds(self) -> list[PointCloud]:
        return [c for _, c in self.classes]

    def merged(self) -> dict[int, PointCloud]:
        """One cloud per distinct label (max guard of the merged entries)."""
        out: dict[int, PointCloud] = {}
        for lbl in sorted(set(self.labels)):
            members = [c for l, c in self.classes if l == lbl]
            out[lbl] = PointCloud(
                np.vstack([c.points for c in members]), max(c.guard for c in members)
            )
        return out


@dataclass(frozen=True)
class Hyperplane:
    """The plane ``{x : <normal, x> = offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = as_point(self.normal)
        if not np.linalg.norm(n) > 0:
            raise InvalidParameters("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def normalized(self) -> Hyperplane:
        s = float(np.linalg.norm(self.normal))
        return Hyperplane(self.normal / s, self.offset / s)

    def signed(self, points) -> np.ndarray:
        return as_points(points) @ self.normal - self.offset


def _check_dims(*dims):
    if len(set(dims)) > 1:
        raise DimensionMismatch(f"dimension mismatch: {dims}")


def min_pair_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Brute-force minimum Euclidean distance between two point arrays."""
    best = np.inf
    for i in range(0, a.shape[0], _CHUNK):
        block = a[i:i + _CHUNK]
        for j in range(0, b.shape[0], _CHUNK):
            diff = block[:, None, :] - b[None, j:j + _CHUNK, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff)
            best = min(best, float(d2.min()))
    return float(np.sqrt(best))


def dist_set_set(a: PointCloud, b: PointCloud) -> float:
    """Guard-corrected distance between two sampled sets, clamped at 0."""
    _check_dims(a.dim, b.dim)
    d = min_pair_distance(a.points, b.points) - (a.guard + b.guard)
    return max(d, 0.0)


def dist_to_sets(a: PointCloud, others: Sequence[PointCloud]) -> float:
    """Minimum of :func:`dist_set_set` over several clouds (inf if none)."""
    return min((dist_set_set(a, o) for o in others), default=np.inf)


def ball_contains_cloud(b: Ball, c: PointCloud, slack: float = 0.0) -> bool:
    if slack < 0:
        raise InvalidParameters("slack must be non-negative")
    _check_dims(b.dim, c.dim)
    dist = np.linalg.norm(c.points - b.center, axis=1)
    return bool(np.all(dist + c.guard < b.radius - slack))


def containment_slack(b: Ball, c: PointCloud) -> float:
    """Largest slack for which :func:`ball_contains_cloud` would still hold
    (negative when the cloud leaks)."""
    _check_dims(b.dim, c.dim)
    dist = np.linalg.norm(c.points - b.center, axis=1)
    return float(b.radius - (dist.max() + c.guard))


def balls_disjoint(balls: Sequence[Ball]) -> bool:
    balls = list(balls)
    if balls:
        _check_dims(*(b.dim for b in balls))
    for i in range(len(balls)):
        for j in range(i + 1, len(balls)):
            gap = np.linalg.norm(balls[i].center - balls[j].center)
            if not gap > balls[i].radius + balls[j].radius:
                return False
    return True
