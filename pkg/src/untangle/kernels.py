"""Smooth two-threshold cutoff profiles.

The profile is the standard C-infinity gluing of ``f(t) = exp(-1/t)``,
taken on the transition band rescaled to unit length::

    tau = (s - inner) / (outer - inner)
    eta(s) = f(1 - tau) / (f(1 - tau) + f(tau))

which equals 1 on ``s <= inner``, 0 on ``s >= outer`` and decreases strictly
in between.  Rescaling makes the shape independent of the band width (the
unscaled gluing steepens like ``1/width**2`` on narrow bands, which makes
the flows stiff).  It is evaluated in the equivalent logistic form
``1 / (1 + exp(1/u - 1/v))`` with ``u = 1 - tau``, ``v = tau``, which cannot
overflow.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameters

# Below this (rescaled) distance from a junction the profile is snapped to its
# plateau value.
JUNCTION_EPS = 1e-12
# Largest |d eta / d tau| of the rescaled profile (attained at tau = 1/2).
MAX_SLOPE = 2.0


@dataclass(frozen=True)
class BumpProfile:
    inner: float
    outer: float

    def __post_init__(self):
        if not (0 <= self.inner < self.outer and np.isfinite(self.outer)):
            raise InvalidParameters(
                f"need 0 <= inner < outer, got inner={self.inner}, outer={self.outer}"
            )

    def __call__(self, s):
        return bump_eval(self, s)

    @property
    def width(self) -> float:
        return self.outer - self.inner

    def derivative(self, s):
        return bump_derivative(self, s)

    def max_slope(self) -> float:
        """Bound on |d eta / ds|."""
        return MAX_SLOPE / self.width


def _parts(p: BumpProfile, s):
    s = np.asarray(s, dtype=float)
    v = (s - p.inner) / (p.outer - p.inner)
    inside = (v > JUNCTION_EPS) & (v < 1.0 - JUNCTION_EPS)
    vv = v[inside]
    uu = 1.0 - vv
    z = np.minimum(np.maximum(1.0 / uu - 1.0 / vv, -700.0), 700.0)
    eta = 1.0 / (1.0 + np.exp(z))
    return v, inside, uu, vv, eta, z


def bump_eval(p: BumpProfile, s):
    """Profile value in [0, 1]; scalar in, float out; array in, array out."""
    v, inside, _, _, eta, _ = _parts(p, s)
    out = np.where(v <= JUNCTION_EPS, 1.0, 0.0)
    out[inside] = eta
    return float(out) if out.ndim == 0 else out


def bump_derivative(p: BumpProfile, s):
    """Exact derivative d(eta)/ds; zero off the open transition band."""
    v, inside, uu, vv, eta, z = _parts(p, s)
    one_minus = 1.0 / (1.0 + np.exp(-z))
    out = np.zeros_like(v)
    out[inside] = -eta * one_minus * (1.0 / uu**2 + 1.0 / vv**2) / (p.outer - p.inner)
    return float(out) if out.ndim == 0 else out
