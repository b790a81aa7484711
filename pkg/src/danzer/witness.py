"""Growing a fixed-volume convex set around many points of a Danzer candidate.

Two constructions are provided.  ``grow_witness`` follows a precomputed
radius schedule eps_1 < ... < eps_n = 1/4 and composes volume-preserving
linear maps h_k so that after step k every collected point sits in the ball
of radius eps_k; the preimage of that last ball is an ellipsoid of the
prescribed volume holding n points, with an explicit diameter bound.
``grow_witness_proof2`` is the simpler induction with affine maps that only
controls volumes; it cross-checks the first.

Both work in rescaled "working" coordinates where the volume parameter is
the volume of the ball of diameter 1/2.  Maps and point images are carried
in mpmath; query regions are handed to the oracle as float ellipsoids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from . import _precise as hp
from .geometry import Ellipsoid, UnimodularAffine, unit_ball_volume
from .pointset import NetOracle, in_ellipsoid

FORMAT_VERSION = "1.0"
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
LOG4 = math.log(4.0)
# (d/(d-1))^(n-1) above this is refused; for d = 2 it allows n <= 40
MAX_SCHEDULE_EXPONENT = 2.0 ** 39
CONTAINMENT_TOL = 1e-9
NORM_TOL = 1e-6


class ScheduleRangeError(ValueError):
    pass


# ----------------------------------------------------------------- schedule


@dataclass(frozen=True)
class Schedule:
    d: int
    n: int
    log_eps: tuple[float, ...]
    m: tuple[float, ...]

    @property
    def eps(self) -> tuple[float, ...]:
        """Radii as floats; entries below the double range read 0.0."""
        return tuple(4.0 ** -_eps_exponent(self.d, self.n, k) for k in range(1, self.n + 1))

    @property
    def log_eps1(self) -> float:
        return self.log_eps[0]

    def log_norm_bound(self, k: int) -> float:
        """log of eps_1^(-m_k), the bound on the accumulated inverse norm."""
        return -self.m[k - 1] * self.log_eps[0]

    def to_dict(self) -> dict:
        return {"d": self.d, "n": self.n, "eps": list(self.eps),
                "log_eps": list(self.log_eps), "m": list(self.m)}


def _eps_exponent(d: int, n: int, k: int) -> float:
    # eps_k = 4^-((d/(d-1))^(n-k)); exact at k = n
    return (d / (d - 1)) ** (n - k)


def _check_range(d: int, n: int) -> None:
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
    if int(n) != n or n < 1:
        raise ValueError(f"target count must be an integer >= 1, got {n!r}")
    if (d / (d - 1)) ** (n - 1) > MAX_SCHEDULE_EXPONENT:
        raise ScheduleRangeError(f"n = {n} is out of range for d = {d}")


def make_schedule(d: int, n: int) -> Schedule:
    _check_range(d, n)
    log_eps = tuple(-LOG4 * _eps_exponent(d, n, k) for k in range(1, n + 1))
    q = 1.0 - 1.0 / d
    m = tuple(d * (1.0 - q ** k) for k in range(1, n + 1))
    return Schedule(d, n, log_eps, m)


def _log_growth_exponent(d: int, n: int) -> float:
    """log of 4^(d^n / (d-1)^(n-1))."""
    return LOG4 * float(Fraction(d ** n, (d - 1) ** (n - 1)))


def ball_diameter_for_volume(d: int, s: float) -> float:
    return 2.0 * (s / unit_ball_volume(d)) ** (1.0 / d)


def log_diameter_bound(d: int, s: float, n: int) -> float:
    _check_range(d, n)
    if not s > 0:
        raise ValueError("volume must be positive")
    return math.log(ball_diameter_for_volume(d, s)) + _log_growth_exponent(d, n)


def _exp_or_inf(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def diameter_bound(d: int, s: float, n: int) -> float:
    """C_{d,s} * 4^(d^n/(d-1)^(n-1)), C_{d,s} the diameter of a volume-s ball."""
    return _exp_or_inf(log_diameter_bound(d, s, n))


def log_alpha(d: int, n: int) -> float:
    return log_diameter_bound(d, 1.0, n)


def alpha(d: int, n: int) -> float:
    """Half-edge of the cube in which n points can be forced into a unit-volume set."""
    return _exp_or_inf(log_alpha(d, n))


def count_for_epsilon(d: int, eps: float) -> int:
    """Largest n with alpha(d, n) <= eps^(-1/d) / 2; 0 when none exists."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    target = -math.log(eps) / d - math.log(2.0)
    n = 0
    while True:
        try:
            if log_alpha(d, n + 1) > target:
                return n
        except ScheduleRangeError:
            return n
        n += 1


def proof2_volume_target(d: int, eps: float) -> float:
    """The predecessor volume (eps/beta_d)^(d/(d-1)) * beta_d."""
    b = unit_ball_volume(d)
    return b ** (-1.0 / (d - 1)) * eps ** (d / (d - 1.0))


# ------------------------------------------------------------------ outcomes


@dataclass(frozen=True, eq=False)
class Concentration:
    count: int
    region: Ellipsoid

    kind = "concentration"


@dataclass(frozen=True, eq=False)
class Gap:
    """An ellipsoid of the stipulated volume that contains no point of the set."""

    region: Ellipsoid
    step: int

    kind = "gap"


@dataclass(frozen=True, eq=False)
class StepRecord:
    k: int
    radius: float
    log_radius: float
    point: np.ndarray
    image: np.ndarray
    map: UnimodularAffine
    probe_center: np.ndarray
    probe_radius: float
    probe_region: Ellipsoid
    attempts: int
    candidates: int
    log_inverse_norm: float
    log_norm_bound: float | None
    max_image_ratio: float

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "radius": self.radius,
            "log_radius": self.log_radius,
            "point": self.point.tolist(),
            "image": self.image.tolist(),
            "map": self.map.to_dict(),
            "probe": {"center": self.probe_center.tolist(), "radius": self.probe_radius,
                      "region": self.probe_region.to_dict()},
            "attempts": self.attempts,
            "candidates": self.candidates,
            "log_inverse_norm": self.log_inverse_norm,
            "log_norm_bound": self.log_norm_bound,
            "max_image_ratio": self.max_image_ratio,
        }


@dataclass(eq=False)
class WitnessTrace:
    method: str
    d: int
    n: int
    s: float
    scale: float
    schedule: Schedule | None
    steps: list[StepRecord] = field(default_factory=list)
    accumulated: UnimodularAffine | None = None
    result_set: Ellipsoid | None = None
    collected_points: np.ndarray | None = None
    outcome: Concentration | Gap | None = None
    checks: dict = field(default_factory=dict)

    @property
    def concentrated(self) -> bool:
        return isinstance(self.outcome, Concentration)

    def to_dict(self) -> dict:
        out = {
            "format_version": FORMAT_VERSION,
            "method": self.method,
            "d": self.d,
            "n": self.n,
            "s": self.s,
            "scale": self.scale,
            "schedule": None if self.schedule is None else self.schedule.to_dict(),
            "steps": [st.to_dict() for st in self.steps],
            "accumulated": None if self.accumulated is None else self.accumulated.to_dict(),
            "result_set": None if self.result_set is None else self.result_set.to_dict(),
            "collected_points": [] if self.collected_points is None
            else self.collected_points.tolist(),
            "checks": self.checks,
        }
        if isinstance(self.outcome, Concentration):
            out["outcome"] = {"type": "concentration", "count": self.outcome.count,
                              "region": self.outcome.region.to_dict()}
        elif isinstance(self.outcome, Gap):
            out["outcome"] = {"type": "gap", "step": self.outcome.step,
                              "certificate": self.outcome.region.to_dict(),
                              "volume": self.outcome.region.volume}
        return out


# ------------------------------------------------------------------ helpers


def _working_scale(d: int, s: float) -> float:
    """Dilation taking volume s to the volume of the ball of diameter 1/2."""
    if not s > 0:
        raise ValueError("volume parameter must be positive")
    return (unit_ball_volume(d) / 4.0 ** d / s) ** (1.0 / d)


def _unimodular(lin: np.ndarray) -> UnimodularAffine:
    det = np.linalg.det(lin)
    return UnimodularAffine(lin / abs(det) ** (1.0 / lin.shape[0]), np.zeros(lin.shape[0]))


def _probe_directions(policy: str, k: int, inv_map: np.ndarray, budget: int):
    """Unit probe directions in working coordinates, first choice first."""
    d = inv_map.shape[0]
    if policy == "golden":
        for j in range(budget + 1):
            th = (k + j) * GOLDEN_ANGLE
            v = np.zeros(d)
            v[0], v[1] = math.cos(th), math.sin(th)
            yield v
        return
    if policy != "adaptive":
        raise ValueError(f"unknown direction policy {policy!r}")
    # right singular vectors of the inverse map: the last one is shrunk most
    _, _, vt = np.linalg.svd(inv_map)
    a, b = vt[-1], vt[-2]
    for j in range(budget + 1):
        th = (j // 2) * GOLDEN_ANGLE / 4.0
        v = math.cos(th) * a + math.sin(th) * b
        yield v if j % 2 == 0 else -v


def _float_band(lin_norm: float, pts: np.ndarray, scale: float) -> float:
    return 1e-12 + 1e3 * np.finfo(float).eps * lin_norm * scale * (
        1.0 + float(np.max(np.linalg.norm(pts, axis=1))))


def _probe(oracle: NetOracle, h_f: np.ndarray, hinv_f: np.ndarray, h_mp, scale: float,
           center: np.ndarray, radius: float, offset=None):
    """Points y of the set with ``|h (scale*y - offset) - center| <= radius`` (exact).

    Returns (float region in original coordinates, points, working
    coordinates ``scale*y``, their images under h).
    """
    d = oracle.dim
    off = np.zeros(d) if offset is None else hp.to_np(offset)
    region = Ellipsoid((hinv_f @ center + off) / scale, hinv_f * (radius / scale))
    oracle.check_window(region)
    cand = oracle.candidates(region)
    if len(cand) == 0:
        return region, cand.reshape(0, d), [], []
    w = (scale * cand - off) @ h_f.T
    band = _float_band(np.linalg.norm(h_f, 2), cand, scale)
    near = np.linalg.norm(w - center, axis=1) <= radius * (1.0 + 1e-9) + band
    pts, raws, images = [], [], []
    c_mp = hp.mpvec(center)
    sc = mpmath.mpf(scale)
    for y in cand[near]:
        yw = sc * hp.mpvec(y)
        img = h_mp * (yw if offset is None else yw - offset)
        if hp.norm(img - c_mp) <= radius:
            pts.append(y)
            raws.append(yw)
            images.append(img)
    pts = np.array(pts).reshape(-1, d)
    if len(pts) > 1:
        order = np.lexsort(pts.T[::-1])
        pts = pts[order]
        raws = [raws[i] for i in order]
        images = [images[i] for i in order]
    return region, pts, raws, images


def _check_distinct(h, raws, new_img) -> None:
    # compared after h, where everything collected has size O(1)
    for w in raws:
        if hp.norm(h * w - new_img) <= 1e-12:
            raise AssertionError("oracle returned a point already collected")


# ------------------------------------------------------------ schedule-driven growth


def grow_witness(oracle: NetOracle, s: float, n: int, direction: str = "adaptive",
                 selection: str = "min_growth", retries: int = 8) -> WitnessTrace:
    """Find a volume-s ellipsoid through the origin holding >= n points of the set.

    ``direction`` picks probe balls ("adaptive": along the direction the
    accumulated inverse map shrinks most; "golden": fixed golden-angle
    sequence).  ``selection`` picks the point inside a probe ("min_growth":
    the one keeping the accumulated inverse norm smallest; "lexicographic").
    Each step tries up to ``retries`` further directions before giving up
    with a Gap certificate.
    """
    if selection not in ("min_growth", "lexicographic"):
        raise ValueError(f"unknown selection policy {selection!r}")
    d = oracle.dim
    sched = make_schedule(d, n)
    scale = _working_scale(d, s)
    trace = WitnessTrace("schedule", d, n, s, scale, sched)

    with mpmath.workdps(hp.DPS):
        eps_mp = [mpmath.power(4, -mpmath.power(mpmath.mpf(d) / (d - 1), n - k))
                  for k in range(1, n + 1)]
        ident = mpmath.eye(d)
        h = ident.copy()
        hinv = ident.copy()
        points: list[np.ndarray] = []
        raw: list = []

        # step 1: any point in the ball of radius 1/2
        region, pts, raws, imgs = _probe(oracle, np.eye(d), np.eye(d), h, scale,
                                         np.zeros(d), 0.5)
        if len(pts) == 0:
            cert = Ellipsoid(np.zeros(d), np.eye(d) / (4.0 * scale))
            trace.outcome = Gap(cert, 1)
            trace.checks["certificate_count"] = oracle.count_in(cert)
            return trace
        if selection == "min_growth":
            i = min(range(len(pts)), key=lambda j: (float(hp.norm(imgs[j])), j))
        else:
            i = 0
        y, w = pts[i], imgs[i]
        wn = hp.norm(w)
        if wn <= eps_mp[0]:
            h1 = ident.copy()
            h1inv = ident.copy()
        else:
            u = w / wn
            ratio = wn / eps_mp[0]
            h1 = hp.axis_stretch(u, 1 / ratio, mpmath.root(ratio, d - 1))
            h1inv = hp.axis_stretch(u, ratio, 1 / mpmath.root(ratio, d - 1))
        h = h1 * h
        hinv = hinv * h1inv
        points.append(y)
        raw.append(raws[i])
        trace.steps.append(_record(1, sched, eps_mp, y, h, hinv, h1, np.zeros(d), 0.5,
                                   region, 1, len(pts), raw))

        for k in range(2, n + 1):
            eprev, ek = eps_mp[k - 2], eps_mp[k - 1]
            h_f, hinv_f = hp.to_np(h), hp.to_np(hinv)
            found = None
            attempts = 0
            for v in _probe_directions(direction, k, hinv_f, retries):
                attempts += 1
                center = (float(eprev) + 0.25) * v
                region, pts, raws, imgs = _probe(oracle, h_f, hinv_f, h, scale, center, 0.25)
                if len(pts):
                    found = (center, region, pts, raws, imgs)
                    break
            if found is None:
                cert = region
                trace.outcome = Gap(cert, k)
                trace.checks["certificate_count"] = oracle.count_in(cert)
                trace.collected_points = np.array(points)
                return trace
            center, region, pts, raws, imgs = found
            if selection == "min_growth":
                def growth(j):
                    img = hp.to_np(imgs[j])
                    u = img / np.linalg.norm(img)
                    p = np.outer(u, u)
                    step_inv = p / float(ek) + (np.eye(d) - p) * float(eprev / ek)
                    return (np.linalg.norm(hinv_f @ step_inv, 2), j)
                i = min(range(len(pts)), key=growth)
            else:
                i = 0
            y, w = pts[i], imgs[i]
            _check_distinct(h, raw, w)
            u = w / hp.norm(w)
            hk = hp.axis_stretch(u, ek, ek / eprev)
            hkinv = hp.axis_stretch(u, 1 / ek, eprev / ek)
            h = hk * h
            hinv = hinv * hkinv
            points.append(y)
            raw.append(raws[i])
            trace.steps.append(_record(k, sched, eps_mp, y, h, hinv, hk, center, 0.25,
                                       region, attempts, len(pts), raw))

        # K_n = h^-1 (ball of radius eps_n), back in original units
        shape = hp.principal_shape(hinv * (eps_mp[-1] / scale))
        k_n = Ellipsoid(np.zeros(d), shape)
        trace.result_set = k_n
        trace.accumulated = _unimodular(hp.to_np(h))
        trace.collected_points = np.array(points)
        log_norm = float(mpmath.log(hp.opnorm(hinv)))

    recount = oracle.count_in(k_n)
    log_diam = math.log(2.0 * 0.25 / scale) + log_norm
    trace.checks.update({
        "recount": recount,
        "collected_inside": bool(np.all(in_ellipsoid(k_n, trace.collected_points))),
        "volume_rel_err": abs(k_n.volume - s) / s,
        "log_diameter": log_diam,
        "log_diameter_bound": log_diameter_bound(d, s, n),
        "containment_ok": all(st.max_image_ratio <= 1.0 + CONTAINMENT_TOL for st in trace.steps),
        "norm_ok": all(st.log_inverse_norm <= st.log_norm_bound + math.log1p(NORM_TOL)
                       for st in trace.steps),
    })
    trace.outcome = Concentration(recount, k_n)
    return trace


def _record(k, sched, eps_mp, y, h, hinv, hk, center, radius, region, attempts, ncand,
            raw) -> StepRecord:
    """``raw`` holds the collected points in working coordinates (before any h)."""
    ek = eps_mp[k - 1]
    ratios = [hp.norm(h * w) / ek for w in raw]
    return StepRecord(
        k=k,
        radius=float(ek),
        log_radius=sched.log_eps[k - 1],
        point=np.asarray(y, dtype=float),
        image=hp.to_np(h * raw[-1]),
        map=_unimodular(hp.to_np(hk)),
        probe_center=np.asarray(center, dtype=float),
        probe_radius=radius,
        probe_region=region,
        attempts=attempts,
        candidates=ncand,
        log_inverse_norm=float(mpmath.log(hp.opnorm(hinv))),
        log_norm_bound=sched.log_norm_bound(k),
        max_image_ratio=float(max(ratios)),
    )


# ------------------------------------------------------- volume-only induction


def proof2_volume_chain(d: int, eps_w: float, n: int) -> list[float]:
    """Strict volume budgets V_1 .. V_n in working units, V_n = eps_w.

    An ellipsoid of volume below V_k normalizes to a ball B_r with
    ``beta_d r^(d-1) < V_(k+1)``, so one more point can be added while
    staying under the next budget.
    """
    chain = [eps_w]
    for _ in range(n - 1):
        chain.append(proof2_volume_target(d, chain[-1]))
    chain.reverse()
    if not chain[0] > 1e-290:
        raise ScheduleRangeError(f"volume budget underflows for n = {n}")
    return chain


def grow_witness_proof2(oracle: NetOracle, s: float, eps: float, n: int,
                        direction: str = "adaptive", retries: int = 8) -> WitnessTrace:
    """Collect n points in an ellipsoid of volume < eps by adding one point at a time.

    ``s`` is the volume at which the set is assumed to meet every ellipsoid;
    ``eps`` is in the same units.  Each step maps the current ellipsoid to a
    ball B_r, finds a point p in a ball of diameter 1/2 disjoint from B_r and
    replaces the ellipsoid with the cover of B_r and the segment towards p.
    """
    d = oracle.dim
    if int(n) != n or n < 1:
        raise ValueError(f"target count must be an integer >= 1, got {n!r}")
    scale = _working_scale(d, s)
    beta = unit_ball_volume(d)
    eps_w = eps * scale ** d
    eps0 = beta / 2.0 ** (d - 1)
    if not 0 < eps_w < eps0:
        raise ValueError(f"eps = {eps!r} is not below the admissible bound "
                         f"{eps0 / scale ** d!r} for s = {s!r}")
    budgets = proof2_volume_chain(d, eps_w, n)
    trace = WitnessTrace("proof2", d, n, s, scale, None)
    trace.checks["eps"] = eps
    trace.checks["volume_budgets"] = [v / scale ** d for v in budgets]

    with mpmath.workdps(hp.DPS):
        ident = mpmath.eye(d)
        region, pts, raws, imgs = _probe(oracle, np.eye(d), np.eye(d), ident, scale,
                                         np.zeros(d), 0.5)
        if len(pts) == 0:
            cert = Ellipsoid(np.zeros(d), np.eye(d) / (4.0 * scale))
            trace.outcome = Gap(cert, 1)
            trace.checks["certificate_count"] = oracle.count_in(cert)
            return trace
        i = min(range(len(pts)), key=lambda j: (float(hp.norm(imgs[j])), j))
        center = raws[i]
        rho = mpmath.root(mpmath.mpf(budgets[0]) / 2 / beta, d)
        shape = rho * ident
        points = [pts[i]]
        raw = [raws[i]]
        trace.steps.append(StepRecord(
            k=1, radius=float(rho), log_radius=float(mpmath.log(rho)), point=pts[i],
            image=np.zeros(d), map=UnimodularAffine.identity(d),
            probe_center=np.zeros(d), probe_radius=0.5, probe_region=region, attempts=1,
            candidates=len(pts), log_inverse_norm=0.0, log_norm_bound=None,
            max_image_ratio=0.0))

        for k in range(2, n + 1):
            u_, sig, _ = hp.svd(shape)
            r = mpmath.exp(sum(mpmath.log(x) for x in sig) / d)
            if not (beta * r ** (d - 1) < budgets[k - 1] and r < mpmath.mpf(1) / 2):
                raise AssertionError(f"normalized radius {float(r)!r} too large at step {k}")
            lin = u_ * mpmath.diag([r / x for x in sig]) * u_.T
            lin_inv = u_ * mpmath.diag([x / r for x in sig]) * u_.T
            lin_f, lin_inv_f = hp.to_np(lin), hp.to_np(lin_inv)
            found = None
            attempts = 0
            for v in _probe_directions(direction, k, lin_inv_f, retries):
                attempts += 1
                pc = (float(r) + 0.25) * v
                region, pts, raws, imgs = _probe(oracle, lin_f, lin_inv_f, lin, scale, pc,
                                                 0.25, offset=center)
                if len(pts):
                    found = (pc, region, pts, raws, imgs)
                    break
            if found is None:
                trace.outcome = Gap(region, k)
                trace.checks["certificate_count"] = oracle.count_in(region)
                trace.collected_points = np.array(points)
                return trace
            pc, region, pts, raws, imgs = found
            i = 0
            p = imgs[i]
            _check_distinct(lin, [w - center for w in raw], p)
            u = p / hp.norm(p)
            # cover of B_r and the unit segment along p: keeps p strictly inside
            cover = hp.axis_stretch(u, 1, r)
            shape = lin_inv * cover
            cover_inv = hp.axis_stretch(u, 1, 1 / r)
            points.append(pts[i])
            raw.append(raws[i])
            gauges = [hp.norm(cover_inv * (lin * (w - center))) for w in raw]
            trace.steps.append(StepRecord(
                k=k, radius=float(r), log_radius=float(mpmath.log(r)), point=pts[i],
                image=hp.to_np(p), map=_unimodular(lin_f), probe_center=pc,
                probe_radius=0.25, probe_region=region, attempts=attempts,
                candidates=len(pts), log_inverse_norm=float(mpmath.log(hp.opnorm(lin_inv))),
                log_norm_bound=None, max_image_ratio=float(max(gauges))))

        result = Ellipsoid(hp.to_np(center) / scale, hp.principal_shape(shape / scale))
        log_vol_w = mpmath.log(beta) + mpmath.log(abs(mpmath.det(shape)))

    trace.result_set = result
    trace.collected_points = np.array(points)
    recount = oracle.count_in(result)
    trace.checks.update({
        "recount": recount,
        "collected_inside": bool(np.all(in_ellipsoid(result, trace.collected_points))),
        "volume": result.volume,
        "log_volume": float(log_vol_w) - d * math.log(scale),
        "volume_below_eps": float(log_vol_w) < math.log(eps_w),
        "containment_ok": all(st.max_image_ratio < 1.0 for st in trace.steps),
    })
    trace.outcome = Concentration(recount, result)
    return trace


# --------------------------------------------------------------- net stress


@dataclass(eq=False)
class StressResult:
    eps: float
    n: int
    trace: WitnessTrace

    @property
    def outcome(self):
        return self.trace.outcome

    @property
    def count(self) -> int:
        """Points certified by the construction (at least n on Concentration)."""
        if isinstance(self.outcome, Concentration):
            return len(self.trace.collected_points)
        return 0

    @property
    def recount(self) -> int:
        o = self.outcome
        return o.count if isinstance(o, Concentration) else 0

    @property
    def region(self) -> Ellipsoid:
        return self.outcome.region

    def in_unit_cube(self) -> bool:
        lo, hi = self.region.bounding_box()
        return bool(np.all(lo >= -0.5) and np.all(hi <= 0.5))

    def to_dict(self) -> dict:
        return {"format_version": FORMAT_VERSION, "eps": self.eps, "n": self.n,
                "count": self.count, "recount": self.recount,
                "in_unit_cube": self.in_unit_cube(), "trace": self.trace.to_dict()}


def net_stress(net: NetOracle, eps: float, d: int | None = None, **opts) -> StressResult:
    """Force count_for_epsilon(d, eps) points of ``net`` into one volume-eps ellipsoid.

    Rescaling by eps^(-1/d) turns this into a unit-volume growth inside the
    cube of half-edge alpha(d, n) <= eps^(-1/d)/2, so everything happens in
    [-1/2, 1/2]^d.  The growth is run directly in the original units.
    """
    d = net.dim if d is None else d
    if d != net.dim:
        raise ValueError(f"net has dimension {net.dim}, expected {d}")
    n = count_for_epsilon(d, eps)
    if n < 1:
        raise ScheduleRangeError(f"no target count n >= 1 is admissible for eps = {eps!r}")
    trace = grow_witness(net, eps, n, **opts)
    res = StressResult(eps, n, trace)
    if not res.in_unit_cube():
        raise AssertionError("stress region leaves the unit cube")
    return res
