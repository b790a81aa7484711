import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from danzer.chabauty import (WindowedSet, act, cf_distance, danzer_param_check, diagonal_flow,
                             in_hausdorff_regime, line_build, projection, random_rotation,
                             shear, translation)
from danzer.geometry import UnimodularAffine
from danzer.pointset import WindowError, explicit_list_oracle, jittered_grid_oracle, \
    lattice_oracle

W = 100.0


def closed_form(f1, f2):
    """max over points of min(distance to the other set, 1/|x|), capped at 1."""
    best = 0.0
    for a, b in ((f1, f2), (f2, f1)):
        for x in a.points:
            dx = np.min(np.linalg.norm(b.points - x, axis=1)) if len(b) else math.inf
            nx = np.linalg.norm(x)
            best = max(best, min(dx, 1 / nx if nx > 0 else math.inf))
    return min(1.0, best)


def random_set(rng, k=20, d=2, spread=3.0):
    return WindowedSet(rng.normal(scale=spread, size=(rng.integers(0, k + 1), d)), W, d)


def test_windowed_set_clips_and_dedupes():
    f = WindowedSet([[0, 0], [0, 1e-13], [5, 0], [0.5, 0.5]], 2.0)
    assert len(f) == 2
    assert f.window == 2.0
    assert WindowedSet.empty(3, 1.0).is_empty
    with pytest.raises(ValueError):
        WindowedSet([], 1.0)


def test_windowed_set_file_roundtrip(tmp_path):
    f = WindowedSet([[0.25, -1.0], [3.0, 2.0]], 10.0)
    path = tmp_path / "f.txt"
    f.write(path)
    g = WindowedSet.read(path)
    assert g.window == 10.0
    np.testing.assert_array_equal(g.points, f.points)
    (tmp_path / "bad.txt").write_text("0 0\n")
    with pytest.raises(ValueError, match="header"):
        WindowedSet.read(tmp_path / "bad.txt")


@given(a=st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       b=st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_shear_group_law(a, b):
    np.testing.assert_allclose((shear(a) @ shear(b)).linear, shear(np.add(a, b)).linear,
                               atol=1e-10)


@given(s=st.floats(-2, 2), t=st.floats(-2, 2), d=st.integers(2, 4))
def test_diagonal_flow_group_law(s, t, d):
    np.testing.assert_allclose((diagonal_flow(s, d) @ diagonal_flow(t, d)).linear,
                               diagonal_flow(s + t, d).linear, rtol=1e-10)
    assert np.linalg.det(diagonal_flow(t, d).linear) == pytest.approx(1.0)


def test_shear_fixes_axis_and_projection():
    u = shear([2.0, -1.0])
    axis = np.array([[3.0, 0, 0], [-1.5, 0, 0]])
    np.testing.assert_array_equal(u.apply(axis), axis)
    p = projection(3, 3)
    x = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(p @ u.apply(x), p @ x)
    np.testing.assert_array_equal(projection(2, 3) @ x, [0, 2, 0])


def test_act():
    f = WindowedSet([[1.0, 0.0], [0.0, 2.0]], 10.0)
    assert np.array_equal(act(UnimodularAffine.identity(2), f).points, f.points)
    g = act(translation([1.0, 1.0]), f)
    assert g.window == pytest.approx(10 - math.sqrt(2))
    np.testing.assert_allclose(g.points, [[2.0, 1.0], [1.0, 3.0]])
    h = act(diagonal_flow(math.log(2), 2), f)
    assert h.window == pytest.approx(5.0)
    assert act(translation([3, 0]), WindowedSet.empty(2, 10.0)).is_empty
    with pytest.raises(WindowError):
        act(translation([20, 0]), f)


def test_cf_distance_reference_values():
    origin = WindowedSet([[0.0, 0.0]], W)
    assert cf_distance(origin, WindowedSet.empty(2, W)) == 1.0
    for delta in (0.1, 0.5, 0.9):
        assert abs(cf_distance(origin, WindowedSet([[delta, 0.0]], W)) - delta) <= 1e-9
    assert cf_distance(WindowedSet.empty(2, W), WindowedSet.empty(2, W)) == 0.0
    far = WindowedSet([[50.0, 0.0]], W)
    assert cf_distance(far, WindowedSet.empty(2, W)) == pytest.approx(1 / 50)


def test_cf_distance_far_points_are_ignored():
    # a point at distance 4 from the origin only matters above eps = 1/4
    f = WindowedSet([[4.0, 0.0], [0.0, 0.0]], W)
    g = WindowedSet([[0.0, 0.0]], W)
    assert cf_distance(f, g) == pytest.approx(0.25)


def test_cf_distance_matches_closed_form():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = random_set(rng), random_set(rng)
        assert cf_distance(a, b) == pytest.approx(closed_form(a, b), abs=1e-12)


def test_cf_distance_identity_and_symmetry():
    rng = np.random.default_rng(1)
    sets = [random_set(rng) for _ in range(50)]
    assert all(cf_distance(f, f) == 0.0 for f in sets)
    assert all(cf_distance(a, b) == cf_distance(b, a) for a, b in zip(sets, sets[1:]))


def test_cf_distance_triangle():
    rng = np.random.default_rng(2)
    worst = -1.0
    for _ in range(100):
        a, b, c = (random_set(rng) for _ in range(3))
        worst = max(worst, cf_distance(a, c) - cf_distance(a, b) - cf_distance(b, c))
    assert worst <= 2e-9


def test_cf_distance_window_check():
    with pytest.raises(WindowError):
        cf_distance(WindowedSet([[0.0, 0.0]], 5.0), WindowedSet([[0.01, 0.0]], 5.0))
    with pytest.raises(WindowError):
        cf_distance(WindowedSet([[0.0, 0.0]], 5.0), WindowedSet([[0.0, 0.0]], 6.0))


def test_cf_distance_translation():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(60):
        a = random_set(rng, k=10)
        if a.is_empty:
            continue
        b = WindowedSet(a.points + rng.normal(scale=0.05, size=a.points.shape), W)
        g = translation(rng.uniform(-1, 1, 2))
        ga, gb = act(g, a), act(g, b)
        if not (in_hausdorff_regime(a, b) and in_hausdorff_regime(ga, gb)):
            continue
        try:
            d0 = cf_distance(a, b)
        except WindowError:
            continue
        assert abs(cf_distance(ga, gb) - d0) <= 1e-9
        checked += 1
    assert checked >= 20


def test_cf_distance_not_translation_invariant_in_general():
    # the 1/|x| cut-off depends on where the origin is
    f, e = WindowedSet([[2.0, 0.0]], W), WindowedSet.empty(2, W)
    g = translation([3.0, 0.0])
    assert cf_distance(f, e) == pytest.approx(0.5)
    assert cf_distance(act(g, f), act(g, e)) == pytest.approx(0.2)


@pytest.mark.parametrize("d,delta", [(2, 1e-3), (3, 2e-3)])
def test_line_build_hits_all_targets(d, delta):
    oracle = jittered_grid_oracle(delta, 0.3, seed=5, dim=d)
    res = line_build(oracle, 5 * delta, 0.1, 10, 1e-2)
    assert not res.failures
    assert len(res.targets) == 21
    assert res.residuals.max() <= 1e-2
    assert (res.verify() >= 1).all()
    assert res.complete


def test_line_build_single_target():
    oracle = jittered_grid_oracle(1e-3, 0.3, seed=5)
    res = line_build(oracle, 5e-3, 0.1, 0, 1e-2)
    assert res.residuals[0] <= 1e-2
    ws = res.windowed_set(0.05)
    assert np.min(np.linalg.norm(ws.points, axis=1)) <= 1e-2


def test_line_build_flow_time_makes_projection_small():
    oracle = jittered_grid_oracle(1e-3, 0.3, seed=5)
    res = line_build(oracle, 5e-3, 0.1, 1, 1e-2)
    # projected radius r e^-t is eta/2
    assert 5e-3 * math.exp(-res.flow_time) == pytest.approx(1e-2 / 2)


def test_line_build_further_shear_moves_targets_little():
    oracle = jittered_grid_oracle(1e-3, 0.3, seed=6)
    res = line_build(oracle, 5e-3, 0.1, 3, 1e-2)
    a = np.array([0.7])
    moved = shear(a).apply(res.images)
    shift = np.linalg.norm(moved - res.images, axis=1)
    off_axis = np.linalg.norm(res.images[:, 1:], axis=1)
    assert np.all(shift <= np.linalg.norm(a) * off_axis + 1e-15)
    assert np.all(shift <= 1e-2 * np.linalg.norm(a))


def test_line_build_reports_failures():
    oracle = explicit_list_oracle([[0.0, 0.001]])
    res = line_build(oracle, 0.01, 0.1, 2, 1e-2)
    assert res.failures
    assert not res.complete


def test_param_check_empty_fails_first_trial():
    res = danzer_param_check(WindowedSet.empty(2, 50.0), 1.0, 10, seed=0)
    assert not res.passed and res.failed_trial == 1


def test_param_check_dense_grid_passes():
    grid = jittered_grid_oracle(0.1, 0.3, seed=0, window=60.0)
    res = danzer_param_check(grid, 1.0, 300, seed=1, log_range=2.0)
    assert res.passed and res.trials == 300


def test_param_check_z2_fails_with_thin_ellipsoids():
    z2 = lattice_oracle(np.eye(2), window=1e4)
    res = danzer_param_check(z2, 1.0, 500, seed=2, log_range=6.0, rotations=False)
    assert not res.passed
    assert z2.count_in(res.counterexample) == 0
    assert res.counterexample.volume == pytest.approx(math.pi)


def test_param_check_window_too_small():
    with pytest.raises(WindowError):
        danzer_param_check(WindowedSet.empty(2, 5.0), 1.0, 3, seed=0, log_range=3.0)


def test_random_rotation_is_proper():
    rng = np.random.default_rng(0)
    for d in (2, 3, 4):
        q = random_rotation(rng, d)
        np.testing.assert_allclose(q @ q.T, np.eye(d), atol=1e-12)
        assert np.linalg.det(q) == pytest.approx(1.0)
