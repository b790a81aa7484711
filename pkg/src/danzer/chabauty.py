"""Closed subsets of R^d seen through a finite window.

A closed set is approximated by the finitely many of its points inside a
ball B_R; the approximation says nothing about the set outside B_R.  This
module provides the Chabauty-Fell distance between such approximations, the
affine action on them, and the finite line-building procedure that pushes
points of a Danzer set onto the x_1-axis with shears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Ellipsoid, UnimodularAffine, operator_norm
from .pointset import NetOracle, WindowError, _region_radius, in_ellipsoid, read_points

DEDUP_TOL = 1e-12
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


# ---------------------------------------------------------------- windowed sets


class WindowedSet:
    """Finite point set, faithful inside the closed ball of radius ``window``."""

    __slots__ = ("points", "window", "dim")

    def __init__(self, points, window: float, dim: int | None = None):
        p = np.asarray(points, dtype=float)
        if p.size == 0:
            if dim is None:
                raise ValueError("dimension is required for an empty set")
            p = np.zeros((0, dim))
        p = np.atleast_2d(p)
        if not window > 0 or not math.isfinite(window):
            raise ValueError(f"window radius must be positive and finite, got {window!r}")
        if dim is not None and p.shape[1] != dim:
            raise ValueError(f"points have dimension {p.shape[1]}, expected {dim}")
        p = p[np.linalg.norm(p, axis=1) <= window]
        p = _dedupe(p)
        p.setflags(write=False)
        self.points = p
        self.window = float(window)
        self.dim = p.shape[1]

    @classmethod
    def empty(cls, dim: int, window: float) -> "WindowedSet":
        return cls(np.zeros((0, dim)), window, dim)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"WindowedSet({len(self.points)} points, window={self.window:g}, dim={self.dim})"

    def count_in(self, region) -> int:
        if _region_radius(region) > self.window:
            raise WindowError(f"region leaves the window of radius {self.window:g}")
        if self.is_empty:
            return 0
        return int(np.count_nonzero(in_ellipsoid(region, self.points)))

    def to_text(self) -> str:
        lines = [f"# window {self.window!r} dim {self.dim}"]
        lines += [" ".join(repr(float(x)) for x in row) for row in self.points]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def read(cls, path) -> "WindowedSet":
        first = Path(path).read_text().split("\n", 1)[0].split()
        if len(first) < 5 or first[:2] != ["#", "window"] or first[3] != "dim":
            raise ValueError(f"{path}:1: expected header '# window <R> dim <d>'")
        window, dim = float(first[2]), int(first[4])
        return cls(read_points(path, dim), window, dim)


def _dedupe(p: np.ndarray) -> np.ndarray:
    if len(p) < 2:
        return p
    pairs = cKDTree(p).query_pairs(DEDUP_TOL, output_type="ndarray")
    if len(pairs) == 0:
        return p
    drop = np.zeros(len(p), dtype=bool)
    for i, j in sorted(map(tuple, pairs)):
        if not drop[i]:
            drop[j] = True
    return p[~drop]


# --------------------------------------------------------------- group elements


def shear(a) -> UnimodularAffine:
    """u(a): x_1 -> x_1 + a_2 x_2 + ... + a_d x_d, other coordinates fixed."""
    a = np.asarray(a, dtype=float).reshape(-1)
    m = np.eye(a.size + 1)
    m[0, 1:] = a
    return UnimodularAffine.linear_map(m)


def diagonal_flow(t: float, d: int) -> UnimodularAffine:
    """g_t = diag(e^((d-1)t), e^-t, ..., e^-t)."""
    diag = np.full(d, math.exp(-t))
    diag[0] = math.exp((d - 1) * t)
    return UnimodularAffine.linear_map(np.diag(diag))


def translation(v) -> UnimodularAffine:
    return UnimodularAffine.translate(v)


def projection(k: int, d: int) -> np.ndarray:
    """Orthogonal projection onto span(e_2, ..., e_k)."""
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    p = np.zeros((d, d))
    idx = np.arange(1, k)
    p[idx, idx] = 1.0
    return p


def act(g: UnimodularAffine, f: WindowedSet) -> WindowedSet:
    """Image g.F, on the largest centered ball where it is still faithful.

    g maps B_R onto an ellipsoid containing B_(R/|L^-1| - |t|).
    """
    if g.dim != f.dim:
        raise ValueError("dimension mismatch")
    radius = f.window / operator_norm(np.linalg.inv(g.linear)) - float(
        np.linalg.norm(g.translation))
    if not radius > 0:
        raise WindowError("image of the window contains no ball around the origin")
    if f.is_empty:
        return WindowedSet.empty(f.dim, radius)
    return WindowedSet(g.apply(f.points), radius, f.dim)


# -------------------------------------------------------------- the metric


def _nearest(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    if len(src) == 0:
        return np.zeros(0)
    if len(dst) == 0:
        return np.full(len(src), np.inf)
    return cKDTree(dst).query(src)[0]


def _fails_above(c: float, inv_norms, dists) -> bool:
    """True if containment fails for eps slightly larger than c.

    For such eps a point counts when |x| < 1/c and fails when d_x > c; the
    failing eps for x form [0, min(d_x, 1/|x|)), so this is monotone in c.
    """
    return bool(np.any((c < inv_norms) & (dists > c)))


def cf_distance(f1: WindowedSet, f2: WindowedSet) -> float:
    """Chabauty-Fell distance, capped at 1.

    The infimum of eps in (0, 1] such that each set's points inside B_(1/eps)
    lie within closed distance eps of the other set (1 if there is none).
    The infimum is one of finitely many breakpoints (a nearest-neighbour
    distance or a reciprocal norm), so bisection over the sorted breakpoints
    finds it exactly.
    """
    if f1.dim != f2.dim:
        raise ValueError("dimension mismatch")
    p = np.vstack([f1.points, f2.points])
    with np.errstate(divide="ignore"):
        inv = 1.0 / np.linalg.norm(p, axis=1)
    dists = np.concatenate([_nearest(f1.points, f2.points), _nearest(f2.points, f1.points)])
    cands = np.concatenate([[0.0, 1.0], dists, inv])
    cands = np.unique(cands[(cands >= 0) & (cands <= 1.0)])
    # smallest breakpoint above which containment holds; 1 if none below
    lo, hi = -1, len(cands) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _fails_above(cands[mid], inv, dists):
            lo = mid
        else:
            hi = mid
    dist = float(cands[hi])
    _check_faithful(dist, f1, f2)
    return dist


def in_hausdorff_regime(f1: WindowedSet, f2: WindowedSet) -> bool:
    """True if every point x of either set has d(x, other) * |x| <= 1.

    Then the distance is the plain Hausdorff distance capped at 1, which is
    translation invariant; outside this regime the 1/|x| cut-off depends on
    the origin.
    """
    for a, b in ((f1, f2), (f2, f1)):
        if np.any(_nearest(a.points, b.points) * np.linalg.norm(a.points, axis=1) > 1.0):
            return False
    return True


def _check_faithful(dist: float, f1: WindowedSet, f2: WindowedSet) -> None:
    rmin = min(f1.window, f2.window)
    if dist == 0.0:
        if f1.window != f2.window:
            raise WindowError("distance 0 is only meaningful for equal windows")
        return
    if dist < 1.0 and 1.0 / dist + dist > rmin:
        raise WindowError(
            f"distance {dist:.6g} needs windows of radius {1.0 / dist + dist:.6g}, "
            f"have {rmin:.6g}")


# ------------------------------------------------------------- line building


@dataclass(eq=False)
class LineBuildResult:
    oracle: NetOracle
    spacing: float
    half_count: int
    eta: float
    flow_time: float
    targets: np.ndarray
    elements: list[UnimodularAffine] = field(default_factory=list)
    shear_vector: np.ndarray | None = None
    hits: np.ndarray | None = None
    failures: list[dict] = field(default_factory=list)

    @property
    def total(self) -> UnimodularAffine:
        return shear(self.shear_vector)

    @property
    def images(self) -> np.ndarray:
        return self.total.apply(self.hits)

    @property
    def residuals(self) -> np.ndarray:
        """Distance from each target to the point assigned to it (inf if missing)."""
        out = np.full(len(self.targets), np.inf)
        img = self.images
        for i, row in enumerate(img):
            if np.all(np.isfinite(row)):
                out[i] = np.linalg.norm(row - self.targets[i])
        return out

    @property
    def complete(self) -> bool:
        return not self.failures and bool(np.all(self.residuals <= self.eta))

    def verify(self) -> np.ndarray:
        """Independent count of points of u.S in the closed eta-ball of each target."""
        inv = self.total.inverse()
        d = self.targets.shape[1]
        return np.array([self.oracle.count_in(inv.act(Ellipsoid(t, self.eta * np.eye(d))))
                         for t in self.targets])

    def windowed_set(self, radius: float) -> WindowedSet:
        """u.S inside the ball of radius ``radius``."""
        d = self.targets.shape[1]
        region = self.total.inverse().act(Ellipsoid(np.zeros(d), radius * np.eye(d)))
        return WindowedSet(self.total.apply(self.oracle.points_in(region)), radius, d)

    def to_dict(self) -> dict:
        return {
            "spacing": self.spacing,
            "half_count": self.half_count,
            "eta": self.eta,
            "flow_time": self.flow_time,
            "targets": self.targets.tolist(),
            "shear": self.shear_vector.tolist(),
            "elements": [g.to_dict() for g in self.elements],
            "hits": [[None if not math.isfinite(x) else x for x in row]
                     for row in self.hits.tolist()],
            "residuals": [None if not math.isfinite(x) else x for x in self.residuals],
            "failures": self.failures,
        }


def _target_order(n: int) -> list[int]:
    order = [0]
    for j in range(1, n + 1):
        order += [j, -j]
    return order


def _offset_direction(step: int, d: int) -> np.ndarray:
    v = np.zeros(d)
    if d == 2:
        v[1] = 1.0 if step % 2 == 0 else -1.0
    else:
        th = step * GOLDEN_ANGLE
        v[1], v[2] = math.cos(th), math.sin(th)
    return v


def line_build(oracle: NetOracle, r: float, spacing: float, half_count: int,
               eta: float) -> LineBuildResult:
    """Shear points of the set onto (j*spacing, 0, ..., 0) for |j| <= half_count.

    For each target a translate B' of g_t.B_r is placed with its long axis
    through the target and its projection off the x_1-axis a disc of
    radius eta/2 centred eta/4 from the axis, so |P x| <= 3 eta/4.  Any point p in B' can be slid along
    its horizontal line onto the target's x_1 coordinate by a shear; among
    the candidates we take the one whose shear disturbs the points already
    placed the least.  Shears commute, so the result is a single u(a).
    """
    d = oracle.dim
    if d < 2:
        raise ValueError("line building needs d >= 2")
    if not eta > 0 or not r > 0 or not spacing > 0:
        raise ValueError("r, spacing and eta must be positive")
    t = math.log(2.0 * r / eta)
    flow = diagonal_flow(t, d)
    base_shape = r * flow.linear
    targets = np.zeros((2 * half_count + 1, d))
    targets[:, 0] = spacing * np.arange(-half_count, half_count + 1)
    res = LineBuildResult(oracle, spacing, half_count, eta, t, targets)
    a_total = np.zeros(d - 1)
    hits = np.full(targets.shape, np.nan)
    placed: list[int] = []

    for step, j in enumerate(_target_order(half_count)):
        idx = j + half_count
        target = targets[idx]
        center = target + 0.25 * eta * _offset_direction(step, d)
        u_inv = shear(-a_total)
        region = u_inv.act(Ellipsoid(center, base_shape))
        pts = oracle.points_in(region)
        if len(pts) == 0:
            res.failures.append({"target": int(j), "reason": "empty probe",
                                 "region": region.to_dict()})
            continue
        q = shear(a_total).apply(pts)
        pq = q[:, 1:]
        pn2 = np.einsum("ij,ij->i", pq, pq)
        delta = target[0] - q[:, 0]
        da = (delta / pn2)[:, None] * pq
        # residual of earlier points under the extra shear, and of the new point
        worst = np.zeros(len(q))
        for i in placed:
            prev = shear(a_total).apply(hits[i])
            moved_x = prev[0] + da @ prev[1:]
            off = prev - targets[i]
            err = np.sqrt((moved_x - targets[i][0]) ** 2 + off[1:] @ off[1:])
            worst = np.maximum(worst, err)
        new_err = np.linalg.norm(pq, axis=1)
        worst = np.maximum(worst, new_err)
        best = int(np.lexsort((np.linalg.norm(da, axis=1), worst))[0])
        a_total = a_total + da[best]
        res.elements.append(shear(da[best]))
        hits[idx] = pts[best]
        placed.append(idx)

    res.shear_vector = a_total
    res.hits = hits
    return res


# ------------------------------------------------------ Danzer parameter check


@dataclass(eq=False)
class ParamCheckResult:
    passed: bool
    trials: int
    counterexample: Ellipsoid | None = None
    failed_trial: int | None = None

    def to_dict(self) -> dict:
        return {"passed": self.passed, "trials": self.trials,
                "failed_trial": self.failed_trial,
                "counterexample": None if self.counterexample is None
                else self.counterexample.to_dict()}


def random_rotation(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_log_diagonal(rng: np.random.Generator, d: int, bound: float) -> np.ndarray:
    """Uniform on {x in [-bound, bound]^d : sum x = 0} by rejection."""
    while True:
        x = rng.uniform(-bound, bound, d - 1)
        last = -x.sum()
        if abs(last) <= bound:
            return np.append(x, last)


def danzer_param_check(f, r: float, trials: int, seed: int, log_range: float = 3.0,
                       rotations: bool = True, window: float | None = None
                       ) -> ParamCheckResult:
    """Monte Carlo test that f meets g.B_r for random volume-preserving g.

    ``f`` is a WindowedSet or a NetOracle.  Each g is a rotation (optional),
    a diagonal with log-entries in [-log_range, log_range] summing to 0, and
    a translation keeping g.B_r inside the window.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if isinstance(f, WindowedSet):
        d, win = f.dim, f.window if window is None else window
        count = f.count_in
    else:
        d, win = f.dim, f.window if window is None else window
        count = f.count_in
        if win is None:
            raise WindowError("a window radius is needed to place random translates")
    reach = r * math.exp(log_range)
    room = win - reach
    if not room > 0:
        raise WindowError(f"window {win:g} cannot hold probes of radius {reach:g}")
    rng = np.random.default_rng(seed)
    for trial in range(1, trials + 1):
        rot = random_rotation(rng, d) if rotations else np.eye(d)
        diag = np.exp(random_log_diagonal(rng, d, log_range))
        z = rng.standard_normal(d)
        z *= room * rng.random() ** (1.0 / d) / np.linalg.norm(z)
        region = Ellipsoid(z, r * rot * diag)
        if count(region) == 0:
            return ParamCheckResult(False, trial, region, trial)
    return ParamCheckResult(True, trials)
