"""Experiment drivers behind the command line.

Every driver takes an ExperimentConfig and returns an ExperimentResult
holding a JSON-compatible document, an optional table for CSV output and the
exit status (0 concentration / success, 2 gap, 1 error).  Concentration and
Gap outcomes are re-checked here with plain count_in queries before they are
reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chabauty import WindowedSet, act, cf_distance, in_hausdorff_regime, line_build, translation
from .config import ConfigError, ExperimentConfig, derive_seed
from .geometry import Ellipsoid, unit_ball_volume
from .pointset import (AlignedBox, NetOracle, WindowError, jittered_grid_oracle,
                       lattice_oracle, oracle_from_config)
from .witness import (FORMAT_VERSION, Concentration, Gap, ScheduleRangeError,
                      count_for_epsilon, diameter_bound, grow_witness, grow_witness_proof2,
                      log_diameter_bound, make_schedule, net_stress, alpha)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GAP = 2


@dataclass
class ExperimentResult:
    status: int
    document: dict
    header: list[str] | None = None
    rows: list[list] = field(default_factory=list)
    attachments: dict[str, dict] = field(default_factory=dict)


def build_oracle(cfg: ExperimentConfig, label: str = "net") -> NetOracle:
    try:
        oracle = oracle_from_config(cfg.net_config(label), cfg.base_dir)
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith("net.") else f"net: {msg}") from None
    if oracle.dim != cfg.d:
        raise ConfigError(f"d: net has dimension {oracle.dim}, config says {cfg.d}")
    return oracle


def _growth_opts(cfg: ExperimentConfig, selection: bool = True) -> dict:
    opts = {"direction": cfg.param("direction", "adaptive"), "retries": cfg.param("retries", 8)}
    if selection:
        opts["selection"] = cfg.param("selection", "min_growth")
    return opts


def _verified(oracle: NetOracle, outcome, n: int, collected) -> dict:
    """Independent re-check of an outcome; raises if it does not hold."""
    if isinstance(outcome, Concentration):
        count = oracle.count_in(outcome.region)
        inside = bool(np.all(oracle.contains(collected)))
        if count < n or count != outcome.count or not inside:
            raise AssertionError(f"concentration failed re-verification: count {count}")
        return {"recount": count, "collected_are_members": inside}
    count = oracle.count_in(outcome.region)
    if count != 0:
        raise AssertionError(f"gap certificate holds {count} points")
    return {"certificate_count": 0}


def _status(outcome) -> int:
    return EXIT_OK if isinstance(outcome, Concentration) else EXIT_GAP


def _step_table(trace) -> tuple[list[str], list[list]]:
    header = ["k", "radius", "log_radius", "point", "attempts", "candidates",
              "log_inverse_norm", "log_norm_bound", "max_image_ratio"]
    rows = [[st.k, st.radius, st.log_radius, " ".join(repr(float(x)) for x in st.point),
             st.attempts, st.candidates, st.log_inverse_norm,
             "" if st.log_norm_bound is None else st.log_norm_bound, st.max_image_ratio]
            for st in trace.steps]
    return header, rows


# ------------------------------------------------------------------ witness


def run_witness_cmd(cfg: ExperimentConfig) -> ExperimentResult:
    oracle = build_oracle(cfg)
    n = cfg.param("n")
    trace = grow_witness(oracle, cfg.param("s"), n, **_growth_opts(cfg))
    doc = trace.to_dict()
    doc["net"] = oracle.to_config()
    doc["verification"] = _verified(oracle, trace.outcome, n, _collected(trace))
    header, rows = _step_table(trace)
    return ExperimentResult(_status(trace.outcome), doc, header, rows)


def _collected(trace):
    if trace.collected_points is None:
        return np.zeros((0, trace.d))
    return trace.collected_points


def run_proof2_cmd(cfg: ExperimentConfig) -> ExperimentResult:
    oracle = build_oracle(cfg)
    n = cfg.param("n")
    trace = grow_witness_proof2(oracle, cfg.param("s"), cfg.param("eps"), n,
                                **_growth_opts(cfg, selection=False))
    doc = trace.to_dict()
    doc["net"] = oracle.to_config()
    doc["verification"] = _verified(oracle, trace.outcome, n, _collected(trace))
    header, rows = _step_table(trace)
    return ExperimentResult(_status(trace.outcome), doc, header, rows)


# ------------------------------------------------------------------- stress


def run_stress_cmd(cfg: ExperimentConfig) -> ExperimentResult:
    oracle = build_oracle(cfg)
    res = net_stress(oracle, cfg.param("eps"), cfg.d, **_growth_opts(cfg))
    doc = res.to_dict()
    doc["net"] = oracle.to_config()
    doc["verification"] = _verified(oracle, res.outcome, res.n, _collected(res.trace))
    header, rows = _step_table(res.trace)
    return ExperimentResult(_status(res.outcome), doc, header, rows)


SWEEP_HEADER = ["eps", "n_theory", "n_selected", "count_found", "recount", "diam",
                "bound", "status", "certificate"]


def sweep_net(d: int, eps: float, density: float, jitter: float, seed: int) -> NetOracle:
    """Jittered grid with about ``density`` points per volume eps, on [-1/2, 1/2]^d."""
    spacing = (eps / density) ** (1.0 / d)
    return jittered_grid_oracle(spacing, jitter, seed, d, window=0.5 * math.sqrt(d))


def run_loglog_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    eps_list = cfg.param("eps_list")
    if not eps_list:
        raise ConfigError("params.eps_list: must not be empty")
    for i, e in enumerate(eps_list):
        if isinstance(e, bool) or not isinstance(e, (int, float)) or not 0 < e < 1:
            raise ConfigError(f"params.eps_list[{i}]: expected a number in (0, 1), got {e!r}")
    density = cfg.param("density", 40.0)
    jitter = cfg.param("jitter", 0.3)
    d = cfg.d
    rows, entries, attachments = [], [], {}
    status = EXIT_OK
    for i, eps in enumerate(float(e) for e in eps_list):
        n_theory = count_for_epsilon(d, eps)
        if cfg.net is not None:
            oracle = build_oracle(cfg, f"sweep/{i}")
        else:
            oracle = sweep_net(d, eps, density, jitter, derive_seed(cfg.seed, f"sweep/{i}"))
        entry = {"eps": eps, "n_theory": n_theory, "net": oracle.to_config()}
        if n_theory == 0:
            # no admissible target; the bound is trivially met by zero points
            row = [eps, 0, 0, 0, 0, "", "", "N0", ""]
            entry.update(status="N0")
        else:
            res = net_stress(oracle, eps, d, **_growth_opts(cfg))
            entry["verification"] = _verified(oracle, res.outcome, res.n, _collected(res.trace))
            bound = diameter_bound(d, eps, res.n)
            if isinstance(res.outcome, Concentration):
                diam = res.region.diameter
                row = [eps, n_theory, res.n, res.count, res.recount, diam, bound,
                       "CONCENTRATION", ""]
                entry.update(status="CONCENTRATION", count=res.count, recount=res.recount,
                             diam=diam, bound=bound, region=res.region.to_dict())
            else:
                status = EXIT_GAP
                cert = f"gap-{i}.json"
                attachments[cert] = {"format_version": FORMAT_VERSION, "eps": eps,
                                     "certificate": res.region.to_dict(),
                                     "volume": res.region.volume}
                row = [eps, n_theory, res.n, 0, 0, "", bound, "GAP", cert]
                entry.update(status="GAP", certificate=cert)
        rows.append(row)
        entries.append(entry)
    doc = {"format_version": FORMAT_VERSION, "experiment": "sweep", "d": d, "rows": entries}
    return ExperimentResult(status, doc, SWEEP_HEADER, rows, attachments)


# -------------------------------------------------------------------- boxes


def random_aligned_boxes(rng: np.random.Generator, count: int, d: int, window: float,
                         max_aspect: float, volume: float = 1.0) -> list[AlignedBox]:
    """Boxes of the given volume, log-uniform side ratios, inside B_window."""
    half_log = 0.5 * math.log(max_aspect)
    edge = volume ** (1.0 / d)
    boxes = []
    for _ in range(count):
        logs = rng.uniform(-half_log, half_log, d)
        logs -= logs.mean()
        sides = edge * np.exp(logs)
        room = window - 0.5 * float(np.linalg.norm(sides))
        if not room > 0:
            raise ConfigError("params.window: too small for the requested boxes")
        z = rng.standard_normal(d)
        z *= room * rng.random() ** (1.0 / d) / np.linalg.norm(z)
        boxes.append(AlignedBox.centered(z, sides))
    return boxes


def run_alignedbox_cmd(cfg: ExperimentConfig) -> ExperimentResult:
    oracle = build_oracle(cfg)
    count = cfg.param("boxes", 10_000)
    window = cfg.param("window", 50.0)
    c_max = cfg.param("c_max", 16)
    rng = np.random.default_rng(derive_seed(cfg.seed, "boxes"))
    boxes = random_aligned_boxes(rng, count, cfg.d, window, cfg.param("max_aspect", 100.0),
                                 cfg.param("volume", 1.0))
    counts = np.array([oracle.count_in(b) for b in boxes])
    hist = np.bincount(counts)
    empty = [b.to_dict() for b, c in zip(boxes, counts) if c == 0]
    doc = {
        "format_version": FORMAT_VERSION,
        "experiment": "boxes",
        "net": oracle.to_config(),
        "boxes": count,
        "min_count": int(counts.min()),
        "max_count": int(counts.max()),
        "histogram": {str(k): int(v) for k, v in enumerate(hist) if v},
        "c_max": c_max,
        "exceeds_c_max": int(np.count_nonzero(counts > c_max)),
        "empty_boxes": empty[:10],
        "empty_count": len(empty),
    }
    header = ["count", "boxes"]
    rows = [[k, int(v)] for k, v in enumerate(hist) if v]
    return ExperimentResult(EXIT_GAP if empty else EXIT_OK, doc, header, rows)


def lattice_line_count(n: int, s: float) -> int:
    """Points of Z^2 in the centered ellipsoid with semi-axes (n, s/(pi n)) along e_1."""
    e = Ellipsoid(np.zeros(2), np.diag([float(n), s / (math.pi * n)]))
    return lattice_oracle(np.eye(2)).count_in(e)


# ------------------------------------------------------------------- metric


def _random_set(rng, max_points: int, d: int, spread: float, window: float) -> WindowedSet:
    k = int(rng.integers(0, max_points + 1))
    return WindowedSet(rng.normal(scale=spread, size=(k, d)), window, d)


def run_metric_cmd(cfg: ExperimentConfig) -> ExperimentResult:
    rng = np.random.default_rng(derive_seed(cfg.seed, "metric"))
    d = cfg.d
    window = cfg.param("window", 100.0)
    spread = cfg.param("spread", 3.0)
    max_points = cfg.param("max_points", 20)
    sets = [_random_set(rng, max_points, d, spread, window) for _ in range(cfg.param("sets", 50))]
    self_dist = [cf_distance(f, f) for f in sets]
    sym = [cf_distance(a, b) == cf_distance(b, a) for a, b in zip(sets, sets[1:])]
    tri = []
    for _ in range(cfg.param("triples", 100)):
        a, b, c = (_random_set(rng, max_points, d, spread, window) for _ in range(3))
        tri.append(cf_distance(a, c) - cf_distance(a, b) - cf_distance(b, c))
    origin = WindowedSet(np.zeros((1, d)), window, d)
    empty_dist = cf_distance(origin, WindowedSet.empty(d, window))
    point_err = []
    for delta in cfg.param("deltas", [0.1, 0.5, 0.9]):
        other = np.zeros((1, d))
        other[0, 0] = delta
        point_err.append(abs(cf_distance(origin, WindowedSet(other, window, d)) - delta))
    # translations preserve the distance only while the 1/|x| cut-off is inactive
    equi, skipped = [], 0
    for a in sets:
        if a.is_empty:
            continue
        b = WindowedSet(a.points + rng.normal(scale=0.05, size=a.points.shape), window, d)
        g = translation(rng.uniform(-1.0, 1.0, d))
        ga, gb = act(g, a), act(g, b)
        if not (in_hausdorff_regime(a, b) and in_hausdorff_regime(ga, gb)):
            continue
        try:
            equi.append(abs(cf_distance(ga, gb) - cf_distance(a, b)))
        except WindowError:
            skipped += 1
    props = {
        "identity": {"pass": all(x == 0.0 for x in self_dist), "worst": max(self_dist)},
        "symmetry": {"pass": all(sym), "worst": 0.0 if all(sym) else 1.0},
        "triangle": {"pass": max(tri) <= 2e-9, "worst": max(tri)},
        "empty": {"pass": empty_dist == 1.0, "worst": abs(empty_dist - 1.0)},
        "two_points": {"pass": max(point_err) <= 1e-9, "worst": max(point_err)},
        "translation": {"pass": (max(equi) if equi else 0.0) <= 1e-9,
                        "worst": max(equi) if equi else 0.0, "pairs": len(equi),
                        "skipped_small_window": skipped},
    }
    ok = all(p["pass"] for p in props.values())
    doc = {"format_version": FORMAT_VERSION, "experiment": "metric", "properties": props}
    rows = [[k, p["pass"], p["worst"]] for k, p in props.items()]
    return ExperimentResult(EXIT_OK if ok else EXIT_ERROR, doc, ["property", "pass", "worst"],
                            rows)


# ---------------------------------------------------------------- linebuild


def run_linebuild_cmd(cfg: ExperimentConfig) -> ExperimentResult:
    oracle = build_oracle(cfg)
    eta = cfg.param("eta")
    res = line_build(oracle, cfg.param("r"), cfg.param("spacing"), cfg.param("half_count"), eta)
    counts = res.verify()
    resid = res.residuals
    ok = res.complete and bool(np.all(counts >= 1))
    doc = {"format_version": FORMAT_VERSION, "experiment": "linebuild",
           "net": oracle.to_config(), "result": res.to_dict(),
           "verification": {"counts": counts.tolist(), "all_hit": bool(np.all(counts >= 1))},
           "max_residual": float(resid.max()), "pass": ok}
    rows = [[j, t[0], r, int(c)] for j, (t, r, c) in
            enumerate(zip(res.targets, resid, counts), start=-res.half_count)]
    return ExperimentResult(EXIT_OK if ok else EXIT_GAP, doc,
                            ["j", "target_x1", "residual", "verified_count"], rows)


# ----------------------------------------------------------------- schedule


def run_schedule_cmd(cfg: ExperimentConfig) -> ExperimentResult:
    d, n = cfg.d, cfg.param("n")
    s = cfg.param("s", unit_ball_volume(d) / 4.0 ** d)
    sched = make_schedule(d, n)
    doc = {"format_version": FORMAT_VERSION, "experiment": "schedule", "d": d, "n": n, "s": s,
           "schedule": sched.to_dict(),
           "log_diameter_bound": log_diameter_bound(d, s, n),
           "diameter_bound": diameter_bound(d, s, n), "alpha": alpha(d, n)}
    rows = [[k, e, le, m] for k, (e, le, m) in
            enumerate(zip(sched.eps, sched.log_eps, sched.m), start=1)]
    return ExperimentResult(EXIT_OK, doc, ["k", "eps", "log_eps", "m"], rows)


DRIVERS = {
    "witness": run_witness_cmd,
    "proof2": run_proof2_cmd,
    "stress": run_stress_cmd,
    "sweep": run_loglog_sweep,
    "boxes": run_alignedbox_cmd,
    "metric": run_metric_cmd,
    "linebuild": run_linebuild_cmd,
    "schedule": run_schedule_cmd,
}


def run(cfg: ExperimentConfig) -> ExperimentResult:
    return DRIVERS[cfg.experiment](cfg)


__all__ = ["ExperimentResult", "run", "DRIVERS", "ScheduleRangeError", "Gap"]
