"""Compactly supported vector fields and their time-t flow maps.

Three autonomous fields are provided:

* :class:`Compression` -- ``V(x) = -eta(|x - c|) (x - c)``; on the plateau
  ``|x - c| <= r`` the flow is exactly ``c + exp(-t) (x - c)``.
* :class:`Translation` -- ``V(x) = eta(|x - a|^2) d``; on the plateau the
  flow is the translation ``x + t d``.
* :class:`ChartCompression` -- the compression field pushed forward through
  an embedding ``g`` of the unit ball: ``Dg(g^-1(y)) V(g^-1(y))``.

Flows are integrated with fixed-step classical RK4.  A point where the field
vanishes is an equilibrium of the exact flow, so such rows are returned
untouched; in particular every point outside the support is fixed bitwise.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ChartInconsistency,
    ConvergenceError,
    DimensionMismatch,
    IntegrationDiverged,
    InvalidParameters,
)
from .geometry import Ball, PointCloud, as_point, as_points
from .kernels import BumpProfile

MAX_STEP = 0.05
DEFAULT_TIME_MARGIN = 0.1
# Compression support radius when none is given: theta = (1 + THETA_FACTOR) r.
THETA_FACTOR = 0.25


# Auto step counts also keep h * Lipschitz(V) <= STIFF_STEP, so that fields
# with narrow transition bands stay accurately integrated.
STIFF_STEP = 0.1
MAX_AUTO_STEPS = 1_000_000


def _steps_for(time: float, max_step: float = MAX_STEP) -> int:
    return max(1, math.ceil(time / max_step - 1e-12))


def auto_steps(field, time: float, max_step: float = MAX_STEP) -> int:
    """Step count honoring both the max step and the field's stiffness."""
    base = _steps_for(time, max_step)
    lip = getattr(field, "lipschitz", None)
    if lip is None or time == 0:
        return base
    want = time * lip() / STIFF_STEP
    if not math.isfinite(want):
        return base
    return max(base, min(MAX_AUTO_STEPS, math.ceil(want - 1e-12)))


# --------------------------------------------------------------------- charts

class Chart:
    """An embedding ``g`` of the open unit ball, with derivative and inverse.

    Subclasses implement the three array maps.  ``inverse`` must return NaN
    rows for points it knows lie outside the image of ``g``.
    """

    dim: int

    def forward(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        """Stack of derivative matrices, shape ``(count, dim, dim)``."""
        raise NotImplementedError

    def image_radius(self, r: float) -> float:
        """Upper bound on ``|g(u) - g(0)|`` over ``|u| <= r``."""
        u = _sphere_lattice(self.dim, 512) * r
        center = self.forward(np.zeros((1, self.dim)))[0]
        return 1.05 * float(np.linalg.norm(self.forward(u) - center, axis=1).max())

    def gain_bounds(self, r: float) -> tuple[float, float]:
        """Estimated ``(max |Dg|, max |Dg^-1|)`` over ``|u| <= r``."""
        u = np.vstack([np.zeros((1, self.dim)), _sphere_lattice(self.dim, 256) * r,
                       _sphere_lattice(self.dim, 256) * (0.5 * r)])
        J = self.jacobian(u)
        s = np.linalg.svd(J, compute_uv=False)
        return 1.05 * float(s[:, 0].max()), 1.05 / float(s[:, -1].min())

    def to_dict(self) -> dict:
        raise InvalidParameters(f"{type(self).__name__} is not serializable")


@dataclass(frozen=True, eq=False)
class AffineChart(Chart):
    """``g(u) = A u + b`` with ``A`` invertible."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        b = as_point(self.offset)
        if A.shape != (b.size, b.size):
            raise DimensionMismatch(f"affine chart matrix {A.shape} vs offset {b.size}")
        if abs(np.linalg.det(A)) < 1e-12:
            raise InvalidParameters("affine chart matrix is singular")
        A.flags.writeable = False
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "offset", b)
        object.__setattr__(self, "_inv", np.linalg.inv(A))

    @property
    def dim(self) -> int:
        return self.offset.size

    def forward(self, u):
        return u @ self.matrix.T + self.offset

    def inverse(self, y):
        return (y - self.offset) @ self._inv.T

    def jacobian(self, u):
        return np.broadcast_to(self.matrix, (u.shape[0],) + self.matrix.shape)

    def image_radius(self, r):
        return float(np.linalg.norm(self.matrix, 2)) * r

    def gain_bounds(self, r):
        return float(np.linalg.norm(self.matrix, 2)), float(np.linalg.norm(self._inv, 2))

    def to_dict(self):
        return {"kind": "affine", "matrix": self.matrix.tolist(),
                "offset": self.offset.tolist()}


class IdentityChart(AffineChart):
    def __init__(self, dim: int):
        super().__init__(np.eye(dim), np.zeros(dim))


def chart_from_dict(d) -> Chart:
    if d.get("kind") != "affine":
        raise InvalidParameters(f"unknown chart kind {d.get('kind')!r}")
    return AffineChart(d["matrix"], d["offset"])


# --------------------------------------------------------------------- fields

@dataclass(frozen=True)
class Compression:
    center: np.ndarray
    r: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not 0 < self.r < self.theta:
            raise InvalidParameters(f"need 0 < r < theta, got r={self.r}, theta={self.theta}")
        object.__setattr__(self, "_eta", BumpProfile(float(self.r), float(self.theta)))

    @property
    def dim(self):
        return self.center.size

    def __call__(self, X):
        d = X - self.center
        eta = self._eta(np.sqrt(np.einsum("ij,ij->i", d, d)))
        return -eta[:, None] * d

    def support(self) -> Ball:
        return Ball(self.center, self.theta)

    def lipschitz(self) -> float:
        # |D(eta(|x|) x)| <= eta + |eta'| |x|
        return 1.0 + self._eta.max_slope() * self.theta

    def to_dict(self):
        return {"variant": "compression", "center": self.center.tolist(),
                "r": self.r, "theta": self.theta}


@dataclass(frozen=True)
class Translation:
    anchor: np.ndarray
    delta_sq: float
    supp_sq: float
    displacement: np.ndarray

    def __post_init__(self):
        a = as_point(self.anchor)
        d = as_point(self.displacement, a.size)
        object.__setattr__(self, "anchor", a)
        object.__setattr__(self, "displacement", d)
        if not 0 < self.delta_sq < self.supp_sq:
            raise InvalidParameters(
                f"need 0 < delta_sq < supp_sq, got {self.delta_sq}, {self.supp_sq}")
        object.__setattr__(self, "_eta", BumpProfile(float(self.delta_sq), float(self.supp_sq)))

    @property
    def dim(self):
        return self.anchor.size

    @property
    def plateau_radius(self) -> float:
        return math.sqrt(self.delta_sq)

    def __call__(self, X):
        d = X - self.anchor
        eta = self._eta(np.einsum("ij,ij->i", d, d))
        return eta[:, None] * self.displacement

    def support(self) -> Ball:
        return Ball(self.anchor, math.sqrt(self.supp_sq))

    def lipschitz(self) -> float:
        # |D eta(|x - a|^2)| <= |eta'| 2 |x - a|
        return self._eta.max_slope() * 2.0 * math.sqrt(self.supp_sq) * float(
            np.linalg.norm(self.displacement))

    def to_dict(self):
        return {"variant": "translation", "anchor": self.anchor.tolist(),
                "delta_sq": self.delta_sq, "supp_sq": self.supp_sq,
                "displacement": self.displacement.tolist()}


@dataclass(frozen=True, eq=False)
class ChartCompression:
    chart: Chart
    inner_r: float
    cutoff_r: float

    def __post_init__(self):
        if not 0 < self.inner_r < self.cutoff_r < 1:
            raise InvalidParameters(
                f"need 0 < inner_r < cutoff_r < 1, got {self.inner_r}, {self.cutoff_r}")
        object.__setattr__(self, "_eta", BumpProfile(float(self.inner_r), float(self.cutoff_r)))

    @property
    def dim(self):
        return self.chart.dim

    def __call__(self, X):
        out = np.zeros_like(X)
        with np.errstate(invalid="ignore"):
            U = self.chart.inverse(X)
        finite = np.all(np.isfinite(U), axis=1)
        norms = np.full(X.shape[0], np.inf)
        norms[finite] = np.linalg.norm(U[finite], axis=1)
        inside = norms < 1.0
        if not inside.any():
            return out
        Ui = U[inside]
        back = self.chart.forward(Ui)
        scale = 1.0 + np.abs(X[inside]).max(axis=1)
        if np.any(np.linalg.norm(back - X[inside], axis=1) > 1e-8 * scale):
            raise ChartInconsistency("chart inverse does not invert forward map")
        V = -self._eta(norms[inside])[:, None] * Ui
        out[inside] = np.einsum("kij,kj->ki", self.chart.jacobian(Ui), V)
        return out

    def support(self) -> Ball:
        center = self.chart.forward(np.zeros((1, self.dim)))[0]
        return Ball(center, self.chart.image_radius(self.cutoff_r))

    def lipschitz(self) -> float:
        # conjugation by g scales the pulled-back bound by cond(Dg); chart
        # curvature is not included, so this is an estimate for curved charts
        up, down = self.chart.gain_bounds(self.cutoff_r)
        return up * down * (1.0 + self._eta.max_slope() * self.cutoff_r)

    def to_dict(self):
        return {"variant": "chart_compression", "chart": self.chart.to_dict(),
                "inner_r": self.inner_r, "cutoff_r": self.cutoff_r}


VectorFieldSpec = Compression | Translation | ChartCompression


def field_eval(spec, x) -> np.ndarray:
    """Field value at a single point."""
    p = as_point(x, spec.dim)
    return spec(p.reshape(1, -1))[0]


def field_from_dict(d):
    kind = d["variant"]
    if kind == "compression":
        return Compression(d["center"], d["r"], d["theta"])
    if kind == "translation":
        return Translation(d["anchor"], d["delta_sq"], d["supp_sq"], d["displacement"])
    if kind == "chart_compression":
        return ChartCompression(chart_from_dict(d["chart"]), d["inner_r"], d["cutoff_r"])
    raise InvalidParameters(f"unknown field variant {kind!r}")


# --------------------------------------------------------------------- flows

def _rk4(f, X: np.ndarray, time: float, steps: int) -> np.ndarray:
    X = np.array(X, dtype=float)
    if time == 0 or X.shape[0] == 0:
        return X
    active = np.any(f(X) != 0, axis=1)
    if not active.any():
        return X
    Y = X[active]
    h = time / steps
    # overflow is reported below as divergence, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            k1 = f(Y)
            k2 = f(Y + (0.5 * h) * k1)
            k3 = f(Y + (0.5 * h) * k2)
            k4 = f(Y + h * k3)
            Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(Y)):
                raise IntegrationDiverged("non-finite state during RK4 integration")
    X[active] = Y
    return X


@dataclass(frozen=True, eq=False)
class FlowMap:
    """Time-``time`` flow of ``field``, integrated with ``steps`` RK4 steps."""

    field: object
    time: float
    steps: int = 0

    def __post_init__(self):
        t = float(self.time)
        if not (t >= 0 and np.isfinite(t)):
            raise InvalidParameters(f"flow time must be finite and >= 0, got {self.time}")
        object.__setattr__(self, "time", t)
        minimum = _steps_for(t)
        steps = int(self.steps) if self.steps else auto_steps(self.field, t)
        if steps < minimum:
            raise InvalidParameters(
                f"{steps} steps exceed max step {MAX_STEP} for time {t}")
        object.__setattr__(self, "steps", steps)

    @property
    def dim(self) -> int:
        return self.field.dim

    def apply(self, X) -> np.ndarray:
        return _rk4(self.field, as_points(X, self.dim), self.time, self.steps)

    def invert(self, Y) -> np.ndarray:
        neg = lambda Z: -self.field(Z)
        return _rk4(neg, as_points(Y, self.dim), self.time, self.steps)

    def support(self) -> Ball:
        return self.field.support()

    def to_dict(self):
        return {**self.field.to_dict(), "time": self.time, "steps": self.steps}

    @classmethod
    def from_dict(cls, d):
        return cls(field_from_dict(d), d["time"], d["steps"])


def flow_apply(f: FlowMap, x) -> np.ndarray:
    return f.apply(as_point(x, f.dim).reshape(1, -1))[0]


def flow_invert(f: FlowMap, y) -> np.ndarray:
    return f.invert(as_point(y, f.dim).reshape(1, -1))[0]


def compression_time(r: float, delta: float, margin: float = DEFAULT_TIME_MARGIN) -> float:
    """Smallest time taking B(0, r) into B(0, delta) under x -> exp(-t) x,
    plus ``margin``."""
    if not 0 < delta < r:
        raise InvalidParameters(f"need 0 < delta < r, got delta={delta}, r={r}")
    if margin < 0:
        raise InvalidParameters("margin must be non-negative")
    return math.log(r / delta) + margin


def make_compression(center, r, delta, theta=None, margin=DEFAULT_TIME_MARGIN,
                     max_step=MAX_STEP) -> FlowMap:
    """Flow taking B(center, r) into B(center, delta), identity off B(center, theta)."""
    if theta is None:
        theta = (1.0 + THETA_FACTOR) * r
    if not 0 < delta < r < theta:
        raise InvalidParameters(f"need 0 < delta < r < theta, got {delta}, {r}, {theta}")
    t = compression_time(r, delta, margin)
    field = Compression(center, r, theta)
    return FlowMap(field, t, auto_steps(field, t, max_step))


def make_translation(anchor, r, p, q, max_step=MAX_STEP) -> FlowMap:
    """Time-1 flow carrying ``p`` to ``q`` by a translation along the segment,
    identity outside B(anchor, r)."""
    anchor = as_point(anchor)
    p = as_point(p, anchor.size)
    q = as_point(q, anchor.size)
    rho = max(np.linalg.norm(p - anchor), np.linalg.norm(q - anchor))
    if not rho < r:
        raise InvalidParameters(f"p and q must lie in B(anchor, {r}); max distance {rho}")
    delta = 0.5 * (rho + r)
    supp = 0.5 * (delta + r)
    field = Translation(anchor, delta**2, supp**2, q - p)
    return FlowMap(field, 1.0, auto_steps(field, 1.0, max_step))


def _sphere_lattice(dim: int, count: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(0x5EED))
    g = rng.standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _tracked_ball_samples(dim: int, radius: float, count: int = 256) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(0xB411))
    dirs = _sphere_lattice(dim, count)
    radii = radius * rng.random(count) ** (1.0 / dim)
    shell = dirs * radius * (1 - 1e-12)
    return np.vstack([np.zeros((1, dim)), dirs * radii[:, None], shell])


def make_chart_compression(chart: Chart, inner_r: float, target: Ball, cutoff_r=None,
                           max_doublings: int = 64, max_step=MAX_STEP) -> FlowMap:
    """Compress ``chart(B(0, inner_r))`` into ``target`` (centered at chart(0)).

    The flow time is found by doubling, starting from the time the pulled-back
    target radius suggests, until every tracked sample lands in ``target``.
    """
    if cutoff_r is None:
        cutoff_r = 0.5 * (inner_r + 1.0)
    field = ChartCompression(chart, float(inner_r), float(cutoff_r))
    dim = chart.dim
    if target.dim != dim:
        raise DimensionMismatch("target ball and chart differ in dimension")
    origin = chart.forward(np.zeros((1, dim)))[0]
    if np.linalg.norm(origin - target.center) > 1e-9 * (1 + np.linalg.norm(origin)):
        raise InvalidParameters("target ball must be centered at chart(0)")
    rim = target.center + target.radius * _sphere_lattice(dim, 256)
    with np.errstate(invalid="ignore"):
        pulled = chart.inverse(rim)
    if not np.all(np.linalg.norm(pulled, axis=1) < 1):
        raise ChartInconsistency("target ball is not inside the chart image")

    gain = float(np.linalg.norm(chart.jacobian(np.zeros((1, dim)))[0], 2))
    pull_r = min(target.radius / gain, 0.5 * inner_r)
    t = compression_time(inner_r, pull_r)
    images = chart.forward(_tracked_ball_samples(dim, inner_r))
    for _ in range(max_doublings + 1):
        flow = FlowMap(field, t, auto_steps(field, t, max_step))
        moved = flow.apply(images)
        if np.all(np.linalg.norm(moved - target.center, axis=1) < target.radius):
            return flow
        t *= 2.0
    raise ConvergenceError(f"no flow time found after {max_doublings} doublings")


# ------------------------------------------------------------------ pipeline

def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("UNTANGLE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class DiffeoPipeline:
    """Composition of flow maps, applied first-to-last."""

    stages: tuple = field(default_factory=tuple)

    def __post_init__(self):
        stages = tuple(self.stages)
        if len({s.dim for s in stages}) > 1:
            raise DimensionMismatch("pipeline stages have different dimensions")
        object.__setattr__(self, "stages", stages)

    @property
    def dim(self):
        return self.stages[0].dim if self.stages else None

    def __len__(self):
        return len(self.stages)

    def __add__(self, other: DiffeoPipeline) -> DiffeoPipeline:
        return DiffeoPipeline(self.stages + other.stages)

    def _run(self, X, inverse=False):
        X = as_points(X, self.dim)
        stages = reversed(self.stages) if inverse else self.stages
        for s in stages:
            X = s.invert(X) if inverse else s.apply(X)
        return X

    def apply(self, X, inverse=False) -> np.ndarray:
        X = as_points(X)
        if not self.stages:
            return X.copy()
        threads = _thread_count()
        if threads == 1 or X.shape[0] < 2 * threads:
            return self._run(X, inverse)
        chunks = np.array_split(X, threads)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda c: self._run(c, inverse), chunks))
        return np.vstack(parts)

    def invert(self, Y) -> np.ndarray:
        return self.apply(Y, inverse=True)

    def supports(self) -> list[Ball]:
        return [s.support() for s in self.stages]

    def to_json(self) -> str:
        return json.dumps([s.to_dict() for s in self.stages])

    @classmethod
    def from_json(cls, text: str) -> DiffeoPipeline:
        return cls(tuple(FlowMap.from_dict(d) for d in json.loads(text)))


def pipeline_apply(p: DiffeoPipeline, c: PointCloud) -> PointCloud:
    if p.stages and c.dim != p.dim:
        raise DimensionMismatch(f"cloud dim {c.dim} vs pipeline dim {p.dim}")
    return c.with_points(p.apply(c.points))


def pipeline_invert_apply(p: DiffeoPipeline, c: PointCloud) -> PointCloud:
    if p.stages and c.dim != p.dim:
        raise DimensionMismatch(f"cloud dim {c.dim} vs pipeline dim {p.dim}")
    return c.with_points(p.invert(c.points))


def jacobian_fd(m: DiffeoPipeline | FlowMap, x, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference Jacobian of a pipeline (or single flow) at ``x``."""
    if not h > 0:
        raise InvalidParameters("finite-difference step must be positive")
    x = as_point(x)
    n = x.size
    E = np.eye(n) * h
    probes = np.vstack([x + E, x - E])
    out = m.apply(probes)
    return ((out[:n] - out[n:]) / (2 * h)).T


def concat(pipelines: Sequence[DiffeoPipeline]) -> DiffeoPipeline:
    stages: tuple = ()
    for p in pipelines:
        stages += p.stages
    return DiffeoPipeline(stages)
