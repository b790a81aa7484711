import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from danzer.enumeration import integer_points_in_box
from danzer.geometry import Ellipsoid
from danzer.pointset import (AlignedBox, WindowError, count_in, explicit_list_oracle,
                             in_ellipsoid, jittered_grid_oracle, lattice_oracle,
                             oracle_from_config, poisson_oracle, query, read_points,
                             ring_lattice_Z_sqrt2, write_points)

Z2 = np.eye(2)


def test_lattice_queries():
    z2 = lattice_oracle(Z2)
    assert query(z2, Ellipsoid.ball([0, 0], 1.5)).tolist() == [-1.0, -1.0]
    assert query(z2, Ellipsoid.ball([0.5, 0.5], 0.4)) is None
    assert count_in(z2, Ellipsoid.ball([0, 0], 1.0)) == 5
    assert count_in(z2, AlignedBox.centered([0.5, 0.5], [0.5, 0.5])) == 0
    assert count_in(z2, AlignedBox([0, 0], [1, 1])) == 4


def test_lattice_membership_and_coords():
    lat = lattice_oracle([[2.0, 0.0], [1.0, 1.0]], offset=[0.5, 0.0])
    p = lat.points_from_coords([[1, 2], [-3, 4]])
    assert lat.contains(p).all()
    assert not lat.contains([[0.0, 0.0]])[0]
    np.testing.assert_allclose(lat.coords(p), [[1, 2], [-3, 4]])


def test_closed_membership_on_boundary():
    z2 = lattice_oracle(Z2)
    # (1, 0) lies exactly on the boundary of the unit ball
    assert count_in(z2, Ellipsoid.ball([0, 0], 1.0)) == 5
    e = Ellipsoid([0, 0], np.diag([8.0, (math.pi / 16) / (8 * math.pi)]))
    assert count_in(z2, e) == 17


def test_in_ellipsoid_resolves_near_ties():
    e = Ellipsoid([0.0, 0.0], np.diag([3.0, 1.0 / 3.0]))
    assert in_ellipsoid(e, [[3.0, 0.0], [0.0, 1.0 / 3.0]]).all()
    assert not in_ellipsoid(e, [[3.0 + 1e-15, 0.0]])[0]


def test_window_is_enforced():
    z2 = lattice_oracle(Z2, window=5.0)
    with pytest.raises(WindowError):
        z2.points_in(Ellipsoid.ball([4.5, 0], 1.0))
    assert z2.count_in(Ellipsoid.ball([3.0, 0], 1.0)) == 5


def test_ring_lattice_shape():
    ring = ring_lattice_Z_sqrt2()
    pts = ring.points_in(Ellipsoid.ball([0, 0], 5.0))
    a = (pts[:, 0] + pts[:, 1]) / 2
    b = (pts[:, 0] - pts[:, 1]) / (2 * math.sqrt(2))
    np.testing.assert_allclose(a, np.round(a), atol=1e-9)
    np.testing.assert_allclose(b, np.round(b), atol=1e-9)
    assert abs(np.linalg.det(ring.basis)) == pytest.approx(2 * math.sqrt(2))
    assert ring.to_config()["kind"] == "ring_lattice"


def test_ring_lattice_boxes_bounded():
    ring = ring_lattice_Z_sqrt2(scale=0.4)
    rng = np.random.default_rng(4)
    counts = []
    for _ in range(500):
        a = math.exp(rng.uniform(-3, 3))
        c = rng.uniform(-20, 20, 2)
        counts.append(ring.count_in(AlignedBox.centered(c, [a, 1 / a])))
    assert min(counts) >= 1 and max(counts) <= 16


def test_jittered_grid_is_deterministic():
    a = jittered_grid_oracle(0.1, 0.4, seed=3)
    b = jittered_grid_oracle(0.1, 0.4, seed=3)
    c = jittered_grid_oracle(0.1, 0.4, seed=4)
    region = Ellipsoid.ball([0.3, -0.2], 0.5)
    pa, pb, pc = a.points_in(region), b.points_in(region), c.points_in(region)
    np.testing.assert_array_equal(pa, pb)
    assert not np.array_equal(pa, pc)
    assert a.contains(pa).all()
    assert not a.contains(pa + 1e-6).any()


def test_jittered_grid_one_point_per_cell():
    g = jittered_grid_oracle(0.5, 0.45, seed=9)
    pts = g.points_in(AlignedBox([-3, -3], [3, 3]))
    cells = g.cells_of(pts)
    assert len({tuple(c) for c in cells.tolist()}) == len(pts)
    offset = pts / 0.5 - (cells + 0.5)
    assert np.all(np.abs(offset) <= 0.45)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 3]))
def test_jittered_grid_never_empty_on_fat_ellipsoids(seed, d):
    spacing = 0.1
    g = jittered_grid_oracle(spacing, 0.5, seed=seed % 1000, dim=d)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    axes = spacing * math.sqrt(d) * rng.uniform(1.0, 5.0, d)
    assert g.query(Ellipsoid(rng.uniform(-10, 10, d), q * axes)) is not None


def test_emptiness_matches_brute_force():
    """count_in agrees with a box scan on 100 random ellipsoids."""
    g = jittered_grid_oracle(0.2, 0.4, seed=1)
    rng = np.random.default_rng(2)
    for _ in range(100):
        a = rng.normal(size=(2, 2)) * rng.uniform(0.05, 0.6)
        e = Ellipsoid(rng.uniform(-2, 2, 2), a)
        lo, hi = e.bounding_box()
        cells = integer_points_in_box(np.floor(lo / 0.2) - 2, np.ceil(hi / 0.2) + 2)
        pts = g.points_of_cells(cells)
        expected = int(np.count_nonzero(e.gauge(pts) <= 1.0))
        assert g.count_in(e) == expected


def test_explicit_list_and_empty():
    o = explicit_list_oracle([[0, 0], [1, 1], [1, 1]])
    assert o.count_in(Ellipsoid.ball([1, 1], 0.1)) == 1
    empty = explicit_list_oracle([], dim=2)
    assert empty.query(Ellipsoid.ball([0, 0], 10)) is None


def test_poisson_needs_window():
    p = poisson_oracle(5.0, window=3.0, seed=1)
    assert np.all(np.linalg.norm(p.points, axis=1) <= 3.0)
    with pytest.raises(WindowError):
        p.count_in(Ellipsoid.ball([0, 0], 4.0))
    with pytest.raises(ValueError):
        poisson_oracle(5.0, window=None, seed=1)


def test_points_file_roundtrip(tmp_path):
    pts = np.array([[0.1, -2.5], [1e-17, 3.0]])
    path = tmp_path / "pts.txt"
    write_points(path, pts, header="# two points")
    np.testing.assert_array_equal(read_points(path), pts)
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\n3 x\n")
    with pytest.raises(ValueError, match="bad.txt:2"):
        read_points(bad)


@pytest.mark.parametrize("oracle", [
    lattice_oracle([[1.0, 0.5], [0.0, 1.0]], offset=[0.1, 0.2], window=30.0),
    ring_lattice_Z_sqrt2(scale=0.4),
    jittered_grid_oracle(0.3, 0.2, seed=5),
    explicit_list_oracle([[0.0, 1.0], [2.0, 3.0]]),
])
def test_config_roundtrip(oracle):
    again = oracle_from_config(oracle.to_config())
    region = Ellipsoid.ball([0.5, 0.5], 3.0)
    np.testing.assert_array_equal(again.points_in(region), oracle.points_in(region))
    assert again.to_config() == oracle.to_config()


def test_config_errors_name_the_field(tmp_path):
    with pytest.raises(ValueError, match="net.spacing"):
        oracle_from_config({"kind": "jittered_grid", "seed": 1})
    with pytest.raises(ValueError, match="net.kind"):
        oracle_from_config({"kind": "penrose"})
    (tmp_path / "p.txt").write_text("0 0\n1 1\n")
    o = oracle_from_config({"kind": "explicit_list", "path": "p.txt"}, base_dir=tmp_path)
    assert o.count_in(Ellipsoid.ball([0, 0], 2)) == 2
