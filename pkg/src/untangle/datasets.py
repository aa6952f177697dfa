"""Generators for the three experiment datasets and generic ball samplers.

Randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence``; each class draws from its own spawned child stream, so a
class's samples do not depend on how many samples the other classes draw.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameters
from .geometry import Ball, LabeledDataset, PointCloud, as_point

TOY_SOURCE_EPS = 0.05
SWISS_S_RANGE = (0.0, 12.0)
SWISS_T0 = 1.5 * math.pi
SWISS_T1 = 4.5 * math.pi
SWISS_OFFSET = 15.0
UNROLL_TOL = 1e-6


def _streams(seed: int, count: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def _rejection(rng, count, lo, hi, accept) -> np.ndarray:
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    out = []
    have = 0
    while have < count:
        batch = lo + (hi - lo) * rng.random((2 * (count - have) + 16, lo.size))
        ok = batch[accept(batch)]
        out.append(ok)
        have += ok.shape[0]
    return np.vstack(out)[:count]


def in_disk_a(P):
    return (P[:, 0] + 1) ** 2 + (P[:, 1] - 1) ** 2 <= 1


def in_disk_b(P):
    return (P[:, 0] - 1) ** 2 + (P[:, 1] + 1) ** 2 <= 1


def in_annulus_c(P):
    r2 = P[:, 0] ** 2 + P[:, 1] ** 2
    return (9 <= r2) & (r2 <= 25)


def gen_toy_abc(count: int, seed: int = 0) -> LabeledDataset:
    """Disks A, B and the enclosing annulus C (labels 0, 1, 2).

    Samples are uniform and satisfy the defining inequalities exactly.  C has
    no round source ball: it cannot be enclosed disjointly from A and B.
    """
    if count < 1:
        raise InvalidParameters("count must be >= 1")
    ra, rb, rc = _streams(seed, 3)
    A = _rejection(ra, count, (-2, 0), (0, 2), in_disk_a)
    B = _rejection(rb, count, (0, -2), (2, 0), in_disk_b)
    C = _rejection(rc, count, (-5, -5), (5, 5), in_annulus_c)
    classes = ((0, PointCloud(A)), (1, PointCloud(B)), (2, PointCloud(C)))
    sources = (Ball((-1, 1), 1 + TOY_SOURCE_EPS), Ball((1, -1), 1 + TOY_SOURCE_EPS), None)
    return LabeledDataset(classes, sources)


def hopf_link_curves(theta):
    """The two circles at parameter ``theta``: L1 in the plane z=0, L2 in y=0."""
    c, s = np.cos(theta), np.sin(theta)
    z = np.zeros_like(theta)
    L1 = np.column_stack([-1 + 2 * c, 2 * s, z])
    L2 = np.column_stack([1 + 2 * c, z, 2 * s])
    return L1, L2


def gen_hopf_link(count: int) -> LabeledDataset:
    if count < 3:
        raise InvalidParameters("count must be >= 3")
    theta = 2 * math.pi * np.arange(count) / count
    L1, L2 = hopf_link_curves(theta)
    return LabeledDataset(((0, PointCloud(L1)), (1, PointCloud(L2))))


def linking_number(c1, c2) -> float:
    """Gauss linking number of two closed polygons (vertex arrays, shape (k, 3)).

    Sums the exact signed solid-angle contribution of every segment pair, so
    the result is an integer up to rounding for disjoint polygons.
    """
    P = np.asarray(c1, float)
    Q = np.asarray(c2, float)
    P0, P1 = P, np.roll(P, -1, axis=0)
    Q0, Q1 = Q, np.roll(Q, -1, axis=0)
    a = P0[:, None, :] - Q0[None, :, :]
    b = P0[:, None, :] - Q1[None, :, :]
    c = P1[:, None, :] - Q1[None, :, :]
    d = P1[:, None, :] - Q0[None, :, :]
    dot = lambda u, v: np.einsum("ijk,ijk->ij", u, v)
    triple = dot(a, np.cross(b, c))
    na, nb, nc, nd = (np.sqrt(dot(v, v)) for v in (a, b, c, d))
    d1 = na * nb * nc + dot(a, b) * nc + dot(b, c) * na + dot(c, a) * nb
    d2 = na * nd * nc + dot(a, d) * nc + dot(d, c) * na + dot(c, a) * nd
    total = np.arctan2(triple, d1) + np.arctan2(triple, d2)
    return float(total.sum() / (2 * math.pi))


def swiss_roll(s, t) -> np.ndarray:
    s = np.asarray(s, float)
    t = np.asarray(t, float)
    return np.stack([s, t * np.cos(t) + SWISS_OFFSET, t * np.sin(t) + SWISS_OFFSET], axis=-1)


@dataclass(frozen=True)
class SwissRoll:
    cloud: PointCloud
    params: np.ndarray  # (count, 2) columns s, t

    def sidecar_rows(self):
        return np.hstack([self.params, self.cloud.points])


def gen_swiss_roll(T0: float = SWISS_T0, T1: float = SWISS_T1, s_grid: int = 40,
                   t_grid: int = 40) -> SwissRoll:
    if not 0 < T0 < T1:
        raise InvalidParameters(f"need 0 < T0 < T1, got {T0}, {T1}")
    if s_grid < 1 or t_grid < 1:
        raise InvalidParameters("grid sizes must be positive")
    S, T = np.meshgrid(np.linspace(*SWISS_S_RANGE, s_grid), np.linspace(T0, T1, t_grid),
                       indexing="ij")
    params = np.column_stack([S.ravel(), T.ravel()])
    return SwissRoll(PointCloud(swiss_roll(params[:, 0], params[:, 1])), params)


class OffManifold(InvalidParameters):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def unroll_swiss(p, T0: float | None = None, T1: float | None = None,
                 tol: float = UNROLL_TOL) -> tuple[float, float]:
    """Inverse chart of the roll: ``(x, y, z) -> (s, t)``."""
    x, y, z = as_point(p, 3)
    dy, dz = y - SWISS_OFFSET, z - SWISS_OFFSET
    t = math.hypot(dy, dz)
    ang = math.atan2(dz, dy)
    diff = (ang - t) % (2 * math.pi)
    residual = min(diff, 2 * math.pi - diff)
    if residual > tol:
        raise OffManifold(f"point {list(map(float, (x, y, z)))} is off the roll "
                          f"(angle residual {residual:.3g})", residual)
    lo = SWISS_T0 if T0 is None else T0
    hi = SWISS_T1 if T1 is None else T1
    if (T0 is not None or T1 is not None) and not (lo - tol <= t <= hi + tol):
        raise OffManifold(f"radius {t} outside [{lo}, {hi}]", min(abs(t - lo), abs(t - hi)))
    return float(x), float(t)


def sample_ball(b: Ball, count: int, seed: int = 0, surface_only: bool = False) -> PointCloud:
    """Uniform samples in (rejection from the cube) or on the boundary of ``b``."""
    if count < 1:
        raise InvalidParameters("count must be >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n = b.dim
    if surface_only:
        g = rng.standard_normal((count, n))
        u = g / np.linalg.norm(g, axis=1, keepdims=True)
    else:
        u = _rejection(rng, count, -np.ones(n), np.ones(n),
                       lambda P: np.einsum("ij,ij->i", P, P) < 1)
    return PointCloud(b.center + b.radius * u)
