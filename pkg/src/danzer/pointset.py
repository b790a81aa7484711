"""Point sets presented as region oracles.

Every oracle answers three questions about a closed region (an ellipsoid or
an aligned box): which of its points lie inside, the lexicographically
smallest such point, and how many there are.  Lattices and jittered grids are
procedural and unbounded; Poisson samples and explicit lists are stored.

Membership in an ellipsoid is decided in two passes: a float64 gauge, and
for points whose gauge lies within the rounding band of 1, a 50-digit
recomputation.  Answers are therefore exact for the float-valued points and
float-valued region that were given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import mpmath
import numpy as np

from .enumeration import inflate, integer_points_in_box, integer_points_in_ellipsoid
from .geometry import Ellipsoid, unit_ball_volume

MP_DPS = 50
_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)


class WindowError(ValueError):
    """Query region reaches outside the window where the set is defined."""


@dataclass(frozen=True, eq=False)
class AlignedBox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).reshape(-1)
        hi = np.array(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape or not np.all(lo < hi):
            raise ValueError("box needs lo < hi in every coordinate")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def centered(cls, center, sides) -> "AlignedBox":
        c = np.asarray(center, dtype=float)
        h = np.asarray(sides, dtype=float) / 2
        return cls(c - h, c + h)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((p >= self.lo) & (p <= self.hi), axis=1)

    def enclosing_ellipsoid(self) -> Ellipsoid:
        half = (self.hi - self.lo) / 2
        return Ellipsoid((self.hi + self.lo) / 2, np.diag(half * math.sqrt(self.dim)))

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


def _region_radius(region) -> float:
    """Largest distance from the origin to a point of the region."""
    if isinstance(region, AlignedBox):
        corner = np.maximum(np.abs(region.lo), np.abs(region.hi))
        return float(np.linalg.norm(corner))
    return float(np.linalg.norm(region.center) + region.semi_axes()[0])


def _exact_gauge_le_one(e: Ellipsoid, points: np.ndarray) -> np.ndarray:
    with mpmath.workdps(MP_DPS):
        a = mpmath.matrix(e.shape.tolist())
        out = np.zeros(len(points), dtype=bool)
        for i, p in enumerate(points):
            rhs = mpmath.matrix([mpmath.mpf(float(x)) - mpmath.mpf(float(c))
                                 for x, c in zip(p, e.center)])
            w = mpmath.lu_solve(a, rhs)
            out[i] = sum(wi * wi for wi in w) <= 1
    return out


def in_ellipsoid(e: Ellipsoid, points) -> np.ndarray:
    """Closed membership, exact for the given float data."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if len(p) == 0:
        return np.zeros(0, dtype=bool)
    g = e.gauge(p)
    scale = np.linalg.cond(e.shape) + np.linalg.norm(np.linalg.inv(e.shape), 2) * (
        np.linalg.norm(p, axis=1) + np.linalg.norm(e.center))
    band = 1e3 * np.finfo(float).eps * scale + 1e-14
    inside = g <= 1.0
    unsure = np.abs(g - 1.0) <= band
    if np.any(unsure):
        inside[unsure] = _exact_gauge_le_one(e, p[unsure])
    return inside


def _in_region(region, points) -> np.ndarray:
    if isinstance(region, AlignedBox):
        return region.contains(points)
    return in_ellipsoid(region, points)


def _lex_sorted(p: np.ndarray) -> np.ndarray:
    if len(p) <= 1:
        return p
    return p[np.lexsort(p.T[::-1])]


class NetOracle:
    """Base class; subclasses provide ``candidates`` and ``contains``."""

    kind = "abstract"

    def __init__(self, dim: int, window: float | None = None):
        self.dim = int(dim)
        if window is not None and not window > 0:
            raise ValueError("window radius must be positive")
        self.window = None if window is None else float(window)

    def check_window(self, region) -> None:
        if region.dim != self.dim:
            raise ValueError(f"region has dimension {region.dim}, oracle has {self.dim}")
        if self.window is not None:
            rad = _region_radius(region)
            if rad > self.window:
                raise WindowError(
                    f"region reaches radius {rad:.6g} beyond window {self.window:.6g}")

    def candidates(self, region) -> np.ndarray:
        """Superset of the set's points in ``region`` (float rows)."""
        raise NotImplementedError

    def contains(self, points) -> np.ndarray:
        """Kind-specific membership predicate for the set itself."""
        raise NotImplementedError

    def points_in(self, region) -> np.ndarray:
        self.check_window(region)
        cand = self.candidates(region)
        if len(cand) == 0:
            return cand.reshape(0, self.dim)
        return _lex_sorted(cand[_in_region(region, cand)])

    def query(self, region) -> np.ndarray | None:
        """Lexicographically smallest point in ``region``; None when empty."""
        pts = self.points_in(region)
        return pts[0] if len(pts) else None

    def count_in(self, region) -> int:
        return int(len(self.points_in(region)))

    def to_config(self) -> dict:
        raise NotImplementedError


class LatticeOracle(NetOracle):
    """{basis @ z + offset : z in Z^d}."""

    kind = "lattice"

    def __init__(self, basis, offset=None, window: float | None = None):
        b = np.array(basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("basis must be square")
        if abs(np.linalg.det(b)) < 1e-300 or np.linalg.matrix_rank(b) < b.shape[0]:
            raise ValueError("lattice basis is singular")
        super().__init__(b.shape[0], window)
        self.basis = b
        self.offset = np.zeros(self.dim) if offset is None else np.array(offset, dtype=float)
        self._inv = np.linalg.inv(b)

    def points_from_coords(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) @ self.basis.T + self.offset

    def coords(self, points) -> np.ndarray:
        return (np.atleast_2d(np.asarray(points, dtype=float)) - self.offset) @ self._inv.T

    def contains(self, points) -> np.ndarray:
        z = self.coords(points)
        return np.all(np.abs(z - np.round(z)) <= 1e-9 * np.maximum(1.0, np.abs(z)), axis=1)

    def candidates(self, region) -> np.ndarray:
        e = region.enclosing_ellipsoid() if isinstance(region, AlignedBox) else region
        center = self._inv @ (e.center - self.offset)
        shape = self._inv @ e.shape
        z = integer_points_in_ellipsoid(center, shape)
        return self.points_from_coords(z)

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "basis": self.basis.tolist(), "offset": self.offset.tolist()}
        if self.window is not None:
            cfg["window"] = self.window
        return cfg


class RingLatticeOracle(LatticeOracle):
    """Geometric embedding of Z[sqrt 2]: {scale * (a + b sqrt2, a - b sqrt2)}."""

    kind = "ring_lattice"

    def __init__(self, scale: float = 1.0, window: float | None = None):
        r2 = math.sqrt(2.0)
        super().__init__(scale * np.array([[1.0, r2], [1.0, -r2]]), window=window)
        self.scale = float(scale)

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "discriminant": 8, "scale": self.scale}
        if self.window is not None:
            cfg["window"] = self.window
        return cfg


def lattice_oracle(basis, offset=None, window=None) -> LatticeOracle:
    return LatticeOracle(basis, offset, window)


def ring_lattice_Z_sqrt2(scale: float = 1.0, window=None) -> RingLatticeOracle:
    return RingLatticeOracle(scale, window)


def splitmix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finaliser on uint64 arrays (wrapping arithmetic)."""
    z = (np.asarray(x, dtype=np.uint64) + np.uint64(0x9E3779B97F4A7C15)) & _M64
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _M64
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _M64
    return z ^ (z >> np.uint64(31))


def cell_uniforms(cells: np.ndarray, seed: int) -> np.ndarray:
    """Per-cell, per-axis uniforms in [0, 1).

    key = seed; for each coordinate c: key = splitmix64(key XOR (c mod 2^64));
    axis k uses the top 53 bits of splitmix64(key + k + 1).
    """
    cells = np.atleast_2d(np.asarray(cells, dtype=np.int64))
    with np.errstate(over="ignore"):
        key = np.full(len(cells), np.uint64(seed & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
        for k in range(cells.shape[1]):
            key = splitmix64(key ^ cells[:, k].astype(np.uint64))
        out = np.empty(cells.shape)
        for k in range(cells.shape[1]):
            h = splitmix64(key + np.uint64(k + 1))
            out[:, k] = (h >> np.uint64(11)).astype(float) * 2.0 ** -53
    return out


class JitteredGridOracle(NetOracle):
    """One point per cube cell of side ``spacing``:
    ``spacing * (cell + 1/2) + jitter * spacing * (2U - 1)``, U from ``cell_uniforms``.
    """

    kind = "jittered_grid"

    def __init__(self, spacing: float, jitter: float, seed: int, dim: int = 2,
                 window: float | None = None):
        if not spacing > 0:
            raise ValueError("spacing must be positive")
        if not 0.0 <= jitter <= 0.5:
            raise ValueError("jitter must lie in [0, 1/2]")
        super().__init__(dim, window)
        self.spacing = float(spacing)
        self.jitter = float(jitter)
        self.seed = int(seed)

    def points_of_cells(self, cells) -> np.ndarray:
        cells = np.atleast_2d(np.asarray(cells, dtype=np.int64))
        base = self.spacing * (cells + 0.5)
        if self.jitter == 0.0:
            return base
        return base + self.jitter * self.spacing * (2.0 * cell_uniforms(cells, self.seed) - 1.0)

    def cells_of(self, points) -> np.ndarray:
        return np.floor(np.atleast_2d(np.asarray(points, dtype=float)) / self.spacing).astype(np.int64)

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if len(p) == 0:
            return np.zeros(0, dtype=bool)
        # a point sits in its own closed cell, possibly on a shared face
        base = np.floor(p / self.spacing).astype(np.int64)
        ok = np.zeros(len(p), dtype=bool)
        for shift in np.ndindex(*(2,) * self.dim):
            cells = base - np.array(shift)
            ok |= np.all(self.points_of_cells(cells) == p, axis=1)
        return ok

    def candidates(self, region) -> np.ndarray:
        s = self.spacing
        if isinstance(region, AlignedBox):
            cells = integer_points_in_box(region.lo / s - 1, region.hi / s)
        else:
            reach = self.jitter * math.sqrt(self.dim)
            shape = inflate(region.shape / s, reach)
            cells = integer_points_in_ellipsoid(region.center / s - 0.5, shape)
        return self.points_of_cells(cells)

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "spacing": self.spacing, "jitter": self.jitter,
               "seed": self.seed, "dim": self.dim}
        if self.window is not None:
            cfg["window"] = self.window
        return cfg


class StoredPointsOracle(NetOracle):
    kind = "explicit_list"

    def __init__(self, points, dim: int | None = None, window: float | None = None):
        p = np.asarray(points, dtype=float)
        if p.size == 0:
            if dim is None:
                raise ValueError("empty point list needs an explicit dimension")
            p = p.reshape(0, dim)
        p = np.atleast_2d(p)
        super().__init__(p.shape[1] if dim is None else dim, window)
        if p.shape[1] != self.dim:
            raise ValueError("points have the wrong dimension")
        self.points = _lex_sorted(np.unique(p, axis=0)) if len(p) else p
        self._keys = {tuple(row) for row in self.points.tolist()}

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.array([tuple(row) in self._keys for row in p.tolist()], dtype=bool)

    def candidates(self, region) -> np.ndarray:
        if len(self.points) == 0:
            return self.points
        if isinstance(region, AlignedBox):
            lo, hi = region.lo, region.hi
        else:
            lo, hi = region.bounding_box()
            span = hi - lo
            lo, hi = lo - 1e-9 * span, hi + 1e-9 * span
        mask = np.all((self.points >= lo) & (self.points <= hi), axis=1)
        return self.points[mask]

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "dim": self.dim, "points": self.points.tolist()}
        if self.window is not None:
            cfg["window"] = self.window
        return cfg


class PoissonOracle(StoredPointsOracle):
    """Homogeneous Poisson process restricted to the ball of radius ``window``."""

    kind = "poisson"

    def __init__(self, intensity: float, window: float, seed: int, dim: int = 2):
        if not intensity > 0:
            raise ValueError("intensity must be positive")
        if window is None or not window > 0:
            raise ValueError("poisson nets need a window radius")
        rng = np.random.default_rng(seed)
        n = rng.poisson(intensity * unit_ball_volume(dim) * window ** dim)
        z = rng.standard_normal((n, dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        pts = z * (window * rng.random(n) ** (1.0 / dim))[:, None]
        super().__init__(pts, dim=dim, window=window)
        self.intensity = float(intensity)
        self.seed = int(seed)

    def to_config(self) -> dict:
        return {"kind": self.kind, "intensity": self.intensity, "window": self.window,
                "seed": self.seed, "dim": self.dim}


def jittered_grid_oracle(spacing: float, jitter: float, seed: int, dim: int = 2,
                         window=None) -> JitteredGridOracle:
    return JitteredGridOracle(spacing, jitter, seed, dim, window)


def explicit_list_oracle(points, dim=None, window=None) -> StoredPointsOracle:
    return StoredPointsOracle(points, dim, window)


def poisson_oracle(intensity, window, seed, dim=2) -> PoissonOracle:
    return PoissonOracle(intensity, window, seed, dim)


def query(oracle: NetOracle, region):
    return oracle.query(region)


def count_in(oracle: NetOracle, region) -> int:
    return oracle.count_in(region)


def read_points(path, dim: int | None = None) -> np.ndarray:
    """One point per line, whitespace-separated decimals; '#' starts a comment."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([float(t) for t in line.split()])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        if len(rows[-1]) != len(rows[0]):
            raise ValueError(f"{path}:{lineno}: expected {len(rows[0])} coordinates")
    if not rows:
        return np.zeros((0, dim or 0))
    return np.array(rows)


def write_points(path, points, header: str | None = None) -> None:
    lines = [] if header is None else [header]
    lines += [" ".join(repr(float(x)) for x in row) for row in np.atleast_2d(points)]
    Path(path).write_text("\n".join(lines) + "\n")


def oracle_from_config(cfg: dict, base_dir=None) -> NetOracle:
    """Build an oracle from its config mapping (inverse of ``to_config``)."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    window = cfg.pop("window", None)
    try:
        if kind == "lattice":
            return LatticeOracle(cfg.pop("basis"), cfg.pop("offset", None), window)
        if kind == "ring_lattice":
            disc = cfg.pop("discriminant", 8)
            if disc != 8:
                raise ValueError("only the Z[sqrt 2] ring (discriminant 8) is available")
            return RingLatticeOracle(cfg.pop("scale", 1.0), window)
        if kind == "jittered_grid":
            return JitteredGridOracle(cfg.pop("spacing"), cfg.pop("jitter", 0.5),
                                      cfg.pop("seed"), cfg.pop("dim", 2), window)
        if kind == "poisson":
            return PoissonOracle(cfg.pop("intensity"), window, cfg.pop("seed"), cfg.pop("dim", 2))
        if kind == "explicit_list":
            dim = cfg.pop("dim", None)
            if "path" in cfg:
                path = Path(cfg.pop("path"))
                if base_dir is not None and not path.is_absolute():
                    path = Path(base_dir) / path
                pts = read_points(path, dim)
            else:
                pts = cfg.pop("points", [])
            return StoredPointsOracle(pts, dim, window)
    except KeyError as exc:
        raise ValueError(f"net.{exc.args[0]}: missing required field for kind {kind!r}") from None
    raise ValueError(f"net.kind: unknown kind {kind!r}")
