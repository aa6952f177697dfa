import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from untangle.errors import InvalidParameters
from untangle.kernels import BumpProfile, bump_derivative, bump_eval

P = BumpProfile(1.0, 2.0)


def f(t):
    return np.exp(-1.0 / t) if t > 0 else 0.0


def reference_eta(p, s):
    """Direct quotient f(1-tau) / (f(1-tau) + f(tau)) on the rescaled band."""
    tau = (s - p.inner) / (p.outer - p.inner)
    return f(1 - tau) / (f(1 - tau) + f(tau))


def test_plateau_support_midpoint():
    assert bump_eval(P, 0.5) == 1.0
    assert bump_eval(P, 3.0) == 0.0
    assert bump_eval(P, 1.5) == pytest.approx(0.5, abs=1e-15)


def test_matches_textbook_form():
    for p in (P, BumpProfile(0.5, 4.0), BumpProfile(0.0, 0.2)):
        for s in np.linspace(p.inner, p.outer, 52)[1:-1]:
            assert bump_eval(p, s) == pytest.approx(reference_eta(p, s), rel=1e-12, abs=1e-300)


def test_unit_band_is_the_unscaled_gluing():
    # on a band of width 1, f(b-s) / (f(b-s) + f(s-a)) exactly
    for s in np.linspace(1.01, 1.99, 25):
        direct = f(2 - s) / (f(2 - s) + f(s - 1))
        assert bump_eval(P, s) == pytest.approx(direct, rel=1e-12)


def test_shape_independent_of_band_width():
    for inner, outer in ((0.0, 1e-3), (5.0, 5.01), (100.0, 300.0)):
        q = BumpProfile(inner, outer)
        tau = np.linspace(0, 1, 101)
        assert np.allclose(bump_eval(q, inner + tau * (outer - inner)), bump_eval(BumpProfile(0, 1), tau),
                           atol=1e-12)
        assert np.abs(bump_derivative(q, inner + tau * (outer - inner))).max() <= q.max_slope() * (1 + 1e-9)


def test_derivative_examples():
    assert bump_derivative(P, 0.5) == 0.0
    assert bump_derivative(P, 2.5) == 0.0
    h = 1e-5
    fd = (bump_eval(P, 1.5 + h) - bump_eval(P, 1.5 - h)) / (2 * h)
    assert bump_derivative(P, 1.5) == pytest.approx(fd, abs=1e-6)


def test_derivative_grid_against_finite_differences():
    s = np.linspace(0, 2 * P.outer, 1000)
    h = 1e-5
    fd = (bump_eval(P, s + h) - bump_eval(P, s - h)) / (2 * h)
    assert np.max(np.abs(bump_derivative(P, s) - fd)) <= 1e-6


def test_junction_derivatives_vanish():
    for s in (P.inner, P.outer):
        assert abs(bump_derivative(P, s)) <= 1e-9


def test_vectorized_and_scalar_types():
    out = bump_eval(P, np.array([0.0, 1.5, 3.0]))
    assert out.shape == (3,)
    assert isinstance(bump_eval(P, 1.2), float)


def test_invalid_profile():
    with pytest.raises(InvalidParameters):
        BumpProfile(2.0, 1.0)
    with pytest.raises(InvalidParameters):
        BumpProfile(-1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 10), st.floats(0.01, 10), st.floats(-5, 30), st.floats(-5, 30))
def test_range_monotone_sign(inner, width, s1, s2):
    p = BumpProfile(inner, inner + width)
    a, b = sorted((s1, s2))
    va, vb = bump_eval(p, a), bump_eval(p, b)
    assert 0.0 <= vb <= va <= 1.0
    assert bump_derivative(p, a) <= 0.0
