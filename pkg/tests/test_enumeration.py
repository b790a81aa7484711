import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from danzer.enumeration import (EnumerationLimitError, ball_count_estimate, inflate,
                                integer_points_in_box, integer_points_in_ellipsoid)


def brute_force(center, shape):
    lo = np.floor(center - np.abs(shape).sum(axis=1)) - 1
    hi = np.ceil(center + np.abs(shape).sum(axis=1)) + 1
    z = integer_points_in_box(lo, hi)
    w = np.linalg.solve(shape, (z - center).T)
    return z[np.einsum("ij,ij->j", w, w) <= 1.0]


def as_set(rows):
    return {tuple(r) for r in np.asarray(rows).tolist()}


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 3))
def test_matches_brute_force(seed, d):
    rng = np.random.default_rng(seed)
    shape = rng.normal(size=(d, d)) * rng.uniform(0.3, 4)
    if abs(np.linalg.det(shape)) < 1e-3:
        shape += np.eye(d)
    center = rng.uniform(-5, 5, d)
    got = integer_points_in_ellipsoid(center, shape, pad=0.0)
    exact = brute_force(center, shape)
    # padding may only add points sitting on the boundary to rounding accuracy
    assert as_set(exact) <= as_set(got)
    extra = as_set(got) - as_set(exact)
    for z in extra:
        w = np.linalg.solve(shape, np.array(z) - center)
        assert np.linalg.norm(w) <= 1 + 1e-9


def test_lexicographic_order():
    z = integer_points_in_ellipsoid([0.0, 0.0], 2.5 * np.eye(2))
    assert z.tolist() == sorted(z.tolist())
    assert len(z) == 21


def test_needle_is_fast():
    u = np.array([1.0, 1.0]) / np.sqrt(2)
    shape = 1e6 * np.outer(u, u) + 1e-3 * (np.eye(2) - np.outer(u, u))
    z = integer_points_in_ellipsoid([0.0, 0.0], shape)
    assert len(z) >= 1_400_000
    assert np.all(z[:, 0] == z[:, 1])


def test_limit():
    with pytest.raises(EnumerationLimitError):
        integer_points_in_ellipsoid([0, 0], 1e4 * np.eye(2), limit=1000)


def test_empty_box():
    assert integer_points_in_box([0.2, 0.2], [0.8, 5]).shape == (0, 2)


@given(seed=st.integers(0, 2**32 - 1), radius=st.floats(0.01, 3))
def test_inflate_contains_minkowski_sum(seed, radius):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(2, 2)) + 2 * np.eye(2)
    big = inflate(m, radius)
    th = np.linspace(0, 2 * np.pi, 64)
    u = np.c_[np.cos(th), np.sin(th)]
    pts = (u @ m.T)[:, None, :] + radius * u[None, :, :]
    w = np.linalg.solve(big, pts.reshape(-1, 2).T)
    assert np.all(np.einsum("ij,ij->j", w, w) <= 1 + 1e-9)


def test_ball_count_estimate():
    assert ball_count_estimate(2, 1.0) == pytest.approx(np.pi)
