"""Experiment configuration: a small YAML (or JSON) document.

Example::

    experiment: witness
    seed: 7
    d: 2
    net: {kind: jittered_grid, spacing: 0.05, jitter: 0.3}
    params: {s: 0.19634954084936207, n: 4}
    output: {path: trace.json, format: json}
"""

from __future__ import annotations

import copy
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

EXPERIMENTS = ("witness", "proof2", "stress", "sweep", "boxes", "metric", "linebuild",
               "schedule")
FORMATS = ("json", "csv")
STOCHASTIC_KINDS = ("jittered_grid", "poisson")
TOP_LEVEL = ("experiment", "seed", "d", "net", "params", "output")

# expected parameter types per experiment; anything else is rejected
PARAMS: dict[str, dict[str, tuple]] = {
    "witness": {"s": (float,), "n": (int,), "retries": (int,), "direction": (str,),
                "selection": (str,)},
    "proof2": {"s": (float,), "eps": (float,), "n": (int,), "retries": (int,),
               "direction": (str,)},
    "stress": {"eps": (float,), "retries": (int,), "direction": (str,),
               "selection": (str,)},
    "sweep": {"eps_list": (list,), "density": (float,), "jitter": (float,),
              "retries": (int,), "direction": (str,), "selection": (str,)},
    "boxes": {"boxes": (int,), "window": (float,), "max_aspect": (float,),
              "volume": (float,), "c_max": (int,)},
    "metric": {"triples": (int,), "sets": (int,), "max_points": (int,), "window": (float,),
               "spread": (float,), "deltas": (list,)},
    "linebuild": {"r": (float,), "spacing": (float,), "half_count": (int,), "eta": (float,)},
    "schedule": {"n": (int,), "s": (float,)},
}
REQUIRED = {
    "witness": ("s", "n"),
    "proof2": ("s", "eps", "n"),
    "stress": ("eps",),
    "sweep": ("eps_list",),
    "linebuild": ("r", "spacing", "half_count", "eta"),
    "schedule": ("n",),
}
NEEDS_NET = ("witness", "proof2", "stress", "boxes", "linebuild")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field."""


def derive_seed(seed: int, label: str) -> int:
    """Independent 64-bit sub-seed for the component called ``label``."""
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(label.encode()),))
    return int(ss.generate_state(1, np.uint64)[0])


def _check_type(name: str, value, types: tuple):
    if float in types and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, bool) or not isinstance(value, types):
        want = " or ".join(t.__name__ for t in types)
        raise ConfigError(f"{name}: expected {want}, got {type(value).__name__} {value!r}")
    return value


@dataclass
class ExperimentConfig:
    experiment: str
    d: int = 2
    net: dict | None = None
    params: dict = field(default_factory=dict)
    seed: int | None = None
    output_path: str | None = None
    output_format: str = "json"
    base_dir: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown experiment {self.experiment!r}")
        if isinstance(self.d, bool) or not isinstance(self.d, int) or self.d < 1:
            raise ConfigError(f"d: expected a positive integer, got {self.d!r}")
        if self.seed is not None and (isinstance(self.seed, bool) or not isinstance(self.seed, int)
                                      or not 0 <= self.seed < 2 ** 64):
            raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {self.seed!r}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"output.format: expected one of {FORMATS}, "
                              f"got {self.output_format!r}")
        if not isinstance(self.params, dict):
            raise ConfigError("params: expected a mapping")
        types = PARAMS[self.experiment]
        for key, value in list(self.params.items()):
            if key not in types:
                raise ConfigError(f"params.{key}: unknown parameter for {self.experiment}")
            self.params[key] = _check_type(f"params.{key}", value, types[key])
        for key in REQUIRED.get(self.experiment, ()):
            if key not in self.params:
                raise ConfigError(f"params.{key}: missing required parameter "
                                  f"for {self.experiment}")
        if self.experiment in NEEDS_NET and self.net is None:
            raise ConfigError(f"net: required for {self.experiment}")
        if self.net is not None:
            if not isinstance(self.net, dict):
                raise ConfigError("net: expected a mapping")
            if "kind" not in self.net:
                raise ConfigError("net.kind: missing")
            if (self.net["kind"] in STOCHASTIC_KINDS and "seed" not in self.net
                    and self.seed is None):
                raise ConfigError(f"seed: required for the stochastic net kind "
                                  f"{self.net['kind']!r}")
        if self.experiment in ("sweep", "metric", "boxes") and self.seed is None:
            raise ConfigError(f"seed: required for {self.experiment}")

    def net_config(self, label: str = "net") -> dict:
        """Net mapping with the dimension and a derived seed filled in."""
        cfg = copy.deepcopy(self.net)
        if cfg.get("kind") in STOCHASTIC_KINDS:
            cfg.setdefault("dim", self.d)
            if "seed" not in cfg:
                cfg["seed"] = derive_seed(self.seed, label)
        return cfg

    def param(self, key: str, default=None):
        return self.params.get(key, default)

    def to_mapping(self) -> dict:
        out = {"experiment": self.experiment, "d": self.d, "params": copy.deepcopy(self.params)}
        if self.seed is not None:
            out["seed"] = self.seed
        if self.net is not None:
            out["net"] = copy.deepcopy(self.net)
        output = {"format": self.output_format}
        if self.output_path is not None:
            output["path"] = self.output_path
        out["output"] = output
        return out

    def dump(self) -> str:
        return yaml.safe_dump(self.to_mapping(), sort_keys=True)

    @classmethod
    def from_mapping(cls, doc, experiment: str | None = None,
                     base_dir: str | None = None) -> "ExperimentConfig":
        if doc is None:
            doc = {}
        if not isinstance(doc, dict):
            raise ConfigError("<document>: expected a mapping at the top level")
        for key in doc:
            if key not in TOP_LEVEL:
                raise ConfigError(f"{key}: unknown top-level field")
        name = doc.get("experiment", experiment)
        if experiment is not None and name != experiment:
            raise ConfigError(f"experiment: config is for {name!r}, not {experiment!r}")
        if name is None:
            raise ConfigError("experiment: missing")
        output = doc.get("output") or {}
        if not isinstance(output, dict):
            raise ConfigError("output: expected a mapping")
        for key in output:
            if key not in ("path", "format"):
                raise ConfigError(f"output.{key}: unknown field")
        return cls(experiment=name, d=doc.get("d", 2), net=doc.get("net"),
                   params=dict(doc.get("params") or {}), seed=doc.get("seed"),
                   output_path=output.get("path"), output_format=output.get("format", "json"),
                   base_dir=base_dir)

    @classmethod
    def load(cls, path, experiment: str | None = None) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"--config: cannot read {path}: {exc.strerror}") from None
        try:
            doc = yaml.safe_load(text)
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark
            line = "?" if mark is None else mark.line + 1
            raise ConfigError(f"{path}:{line}: {exc.problem}") from None
        return cls.from_mapping(doc, experiment, base_dir=str(path.parent))
