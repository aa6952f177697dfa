"""Hard-margin linear separability certificates.

The maximum-margin hyperplane between two finite sets is determined by the
point of minimum norm in ``conv(A) - conv(B) = conv(A - B)``: if that point
``v`` is nonzero, ``w = v / |v|`` is the optimal normal and ``|v| / 2`` the
margin; if it is zero the hulls intersect and the returned convex weights are
an explicit intersection witness.

The minimum-norm point is found with Wolfe's algorithm (Math. Programming 11,
1976), run on the Minkowski difference through its support function, so the
``|A| * |B|`` difference points are never materialized.  Wolfe's method is
finite and exact up to rounding, unlike subgradient schemes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DimensionMismatch, InvalidParameters
from .geometry import Hyperplane, LabeledDataset, PointCloud, as_points

MARGIN_EPS = 1e-9
_MAX_MAJOR = 10_000


@dataclass(frozen=True)
class HullDistance:
    """Result of the minimum-norm computation on ``conv(A) - conv(B)``."""

    distance: float
    point_a: np.ndarray  # closest point of conv(A)
    point_b: np.ndarray  # closest point of conv(B)
    weights_a: dict      # index -> convex weight
    weights_b: dict


def _affine_min_norm(S: np.ndarray):
    """Weights (summing to 1) of the min-norm point in the affine hull of rows of S."""
    k = S.shape[0]
    G = S @ S.T
    M = np.zeros((k + 1, k + 1))
    M[:k, :k] = G
    M[:k, k] = 1.0
    M[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    lam = sol[:k]
    return lam / lam.sum()


def hull_distance(a, b, tol: float = 1e-12) -> HullDistance:
    """Distance between the convex hulls of two point arrays."""
    A = as_points(a)
    B = as_points(b)
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch("point sets differ in dimension")
    scale = max(float(np.abs(A).max()), float(np.abs(B).max()), 1.0)

    def support(x):
        i = int(np.argmin(A @ x))
        j = int(np.argmax(B @ x))
        return (i, j), A[i] - B[j]

    pairs = [(0, 0)]
    S = (A[0] - B[0]).reshape(1, -1)
    lam = np.array([1.0])
    x = S[0].copy()
    for _ in range(_MAX_MAJOR):
        if x @ x <= (tol * scale) ** 2:
            break
        key, pt = support(x)
        # optimality: no difference point lies beyond the plane through x
        if x @ x - x @ pt <= tol * scale * max(np.sqrt(x @ x), tol * scale):
            break
        if key in pairs:
            break
        pairs.append(key)
        S = np.vstack([S, pt])
        lam = np.r_[lam, 0.0]
        while True:
            alpha = _affine_min_norm(S)
            if np.all(alpha > tol):
                lam = alpha
                break
            mask = alpha <= tol
            denom = lam[mask] - alpha[mask]
            ratios = np.where(denom > 0, lam[mask] / np.where(denom > 0, denom, 1.0), np.inf)
            theta = min(1.0, float(ratios.min()))
            lam = (1 - theta) * lam + theta * alpha
            keep = lam > tol
            keep[np.argmax(lam)] = True
            S, lam = S[keep], lam[keep] / lam[keep].sum()
            pairs = [p for p, k in zip(pairs, keep) if k]
        x = lam @ S
        if len(pairs) > A.shape[1] + 1:
            # numerically redundant corral; keep the affinely useful part
            keep = lam > tol
            S, lam = S[keep], lam[keep] / lam[keep].sum()
            pairs = [p for p, k in zip(pairs, keep) if k]

    wa: dict = {}
    wb: dict = {}
    for (i, j), w in zip(pairs, lam):
        wa[i] = wa.get(i, 0.0) + float(w)
        wb[j] = wb.get(j, 0.0) + float(w)
    pa = sum(w * A[i] for i, w in wa.items())
    pb = sum(w * B[j] for j, w in wb.items())
    return HullDistance(float(np.linalg.norm(x)), pa, pb, wa, wb)


def margin_of(h: Hyperplane, a: PointCloud, b: PointCloud) -> float:
    """Half the gap between the two classes along ``h`` (A on the positive side);
    negative when ``h`` does not separate them."""
    h = h.normalized()
    return 0.5 * (float(h.signed(a.points).min()) - float(h.signed(b.points).max()))


def separate_pair(a: PointCloud, b: PointCloud):
    """Maximum-margin hyperplane with A on the positive side.

    Returns ``(Hyperplane, margin)`` with a unit normal, or ``None`` when the
    best margin does not exceed ``MARGIN_EPS``.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimension mismatch: {a.dim} vs {b.dim}")
    hd = hull_distance(a.points, b.points)
    if not hd.distance > 2 * MARGIN_EPS:
        return None
    w = hd.point_a - hd.point_b
    w = w / np.linalg.norm(w)
    # offset and margin re-derived from the data, not from the solver state
    hi = float((a.points @ w).min())
    lo = float((b.points @ w).max())
    margin = 0.5 * (hi - lo)
    if not margin > MARGIN_EPS:
        return None
    return Hyperplane(w, 0.5 * (hi + lo)), margin


@dataclass(frozen=True)
class PairCertificate:
    label_a: int
    label_b: int
    hyperplane: Hyperplane | None
    margin: float

    @property
    def separable(self) -> bool:
        return self.hyperplane is not None

    def to_dict(self):
        return {
            "labelA": self.label_a,
            "labelB": self.label_b,
            "separable": self.separable,
            "normal": None if self.hyperplane is None else self.hyperplane.normal.tolist(),
            "offset": None if self.hyperplane is None else self.hyperplane.offset,
            "margin": self.margin,
        }


@dataclass(frozen=True)
class SeparationCertificate:
    pairs: tuple = field(default_factory=tuple)

    @property
    def all_separable(self) -> bool:
        return all(p.separable for p in self.pairs)

    def to_dict(self):
        return {"allSeparable": self.all_separable, "pairs": [p.to_dict() for p in self.pairs]}


def certify_pairwise(d: LabeledDataset) -> SeparationCertificate:
    merged = d.merged()
    if len(merged) < 2:
        raise InvalidParameters("certification needs at least two distinct labels")
    pairs = []
    for la, lb in combinations(sorted(merged), 2):
        res = separate_pair(merged[la], merged[lb])
        if res is None:
            pairs.append(PairCertificate(la, lb, None, 0.0))
        else:
            pairs.append(PairCertificate(la, lb, res[0], res[1]))
    return SeparationCertificate(tuple(pairs))


def verify_certificate(cert: SeparationCertificate, d: LabeledDataset) -> bool:
    """Independent point-by-point re-check of every recorded hyperplane."""
    merged = d.merged()
    for p in cert.pairs:
        if not p.separable:
            continue
        h = p.hyperplane
        if abs(np.linalg.norm(h.normal) - 1) > 1e-12:
            return False
        tol = 1e-9 * (1 + p.margin)
        if np.any(h.signed(merged[p.label_a].points) < p.margin - tol):
            return False
        if np.any(h.signed(merged[p.label_b].points) > -p.margin + tol):
            return False
    return True
