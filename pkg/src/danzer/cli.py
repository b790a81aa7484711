"""``danzer`` command line.

    danzer witness --config witness.yaml --out trace.json
    danzer sweep --config sweep.yaml --format csv
    danzer schedule -d 2 -n 3

Exit status: 0 on success or Concentration, 2 on a Gap certificate, 1 on
any error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .config import EXPERIMENTS, ConfigError, ExperimentConfig
from .experiments import EXIT_ERROR, ExperimentResult, run
from .witness import FORMAT_VERSION


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _clean(obj):
    # JSON has no inf/nan; spell them out so the output stays strict
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def to_json(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True, default=_jsonable) + "\n"


def to_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["format_version"] + list(result.header))
    for row in result.rows:
        w.writerow([FORMAT_VERSION] + [_cell(x) for x in row])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (YAML or JSON)")
    common.add_argument("--seed", type=int, help="run seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")

    p = argparse.ArgumentParser(prog="danzer", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "witness": "grow a fixed-volume ellipsoid around n points of a net",
        "proof2": "the volume-only induction, as a cross-check",
        "stress": "force n(eps) net points into one volume-eps ellipsoid",
        "sweep": "stress runs over a list of eps values (CSV table)",
        "boxes": "count points of a lattice in random aligned boxes",
        "metric": "property checks for the Chabauty-Fell distance",
        "linebuild": "shear net points onto the x_1 axis",
        "schedule": "print the radius schedule and diameter bounds",
    }
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "schedule":
            sp.add_argument("-d", type=int, default=None, help="dimension")
            sp.add_argument("-n", type=int, default=None, help="target count")
            sp.add_argument("-s", type=float, default=None, help="volume parameter")
    return p


def load_config(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = ExperimentConfig.load(args.config, args.command)
    elif args.command == "schedule":
        cfg = ExperimentConfig("schedule", d=2 if args.d is None else args.d,
                               params={"n": 1 if args.n is None else args.n})
    else:
        raise ConfigError("--config: required for this command")
    if args.command == "schedule":
        if args.d is not None:
            cfg.d = args.d
        if args.n is not None:
            cfg.params["n"] = args.n
        if args.s is not None:
            cfg.params["s"] = args.s
    if args.seed is not None:
        cfg.seed = args.seed
    if args.format is not None:
        cfg.output_format = args.format
    if args.out is not None:
        cfg.output_path = str(args.out)
    cfg.validate()
    return cfg


def emit(cfg: ExperimentConfig, result: ExperimentResult, stdout=None) -> None:
    stdout = sys.stdout if stdout is None else stdout
    if cfg.output_format == "csv" and result.header is not None:
        text = to_csv(result)
    else:
        text = to_json(result.document)
    if cfg.output_path is None:
        stdout.write(text)
        for name, doc in sorted(result.attachments.items()):
            stdout.write(to_json({"attachment": name, **doc}))
        return
    out = Path(cfg.output_path)
    write_atomic(out, text)
    for name, doc in sorted(result.attachments.items()):
        write_atomic(out.with_name(f"{out.stem}.{name}"), to_json(doc))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        result = run(cfg)
        emit(cfg, result)
    except ConfigError as exc:
        print(f"danzer: config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, ArithmeticError, AssertionError, RuntimeError, OSError) as exc:
        print(f"danzer: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return result.status


if __name__ == "__main__":
    sys.exit(main())
