"""Experiment configuration stored as an INI-style key-value file.

Example::

    [params]
    alpha = 1.5
    beta = 0.7

    [grid]
    horizon = 1.0
    steps = 256

    [field]
    name = constant
    sigma = [[1.0]]
    b = [0.0]

    [run]
    seed = 42
    streams = 1
    samples = 200000
    paths = 1000
    method = circulant
    x0 = [0.0]

    [output]
    paths_csv =
    report_json =

    [checks]
    suite = moments

Field parameters are JSON values; floats are written with ``repr`` so the
file round-trips exactly.
"""

from __future__ import annotations

import configparser
import io
import json
from dataclasses import asdict, dataclass, field, fields

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "dump_config", "parse_config"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    alpha: float = 1.5
    beta: float = 0.7
    horizon: float = 1.0
    steps: int = 256
    field_name: str = "constant"
    field_params: dict = field(default_factory=lambda: {"sigma": [[1.0]]})
    seed: int = 0
    streams: int = 1
    samples: int = 200_000
    paths: int = 1000
    method: str = "circulant"
    x0: list = field(default_factory=lambda: [0.0])
    paths_csv: str = ""
    report_json: str = ""
    suite: list = field(default_factory=lambda: ["all"])

    def __post_init__(self):
        if not (0 < self.alpha < 2):
            raise ConfigError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not (0 < self.beta <= 1):
            raise ConfigError(f"beta must lie in (0, 1], got {self.beta}")
        if self.horizon <= 0 or self.steps < 1:
            raise ConfigError("need horizon > 0 and steps >= 1")
        if self.streams < 1 or self.samples < 1 or self.paths < 1:
            raise ConfigError("streams, samples and paths must be positive")
        if self.method not in ("circulant", "cholesky"):
            raise ConfigError(f"unknown method {self.method!r}")

    def replace(self, **changes) -> "ExperimentConfig":
        d = asdict(self)
        d.update({k: v for k, v in changes.items() if v is not None})
        return ExperimentConfig(**d)


_LAYOUT = {
    "params": ("alpha", "beta"),
    "grid": ("horizon", "steps"),
    "run": ("seed", "streams", "samples", "paths", "method", "x0"),
    "output": ("paths_csv", "report_json"),
}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return str(v)


def dump_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    for section, keys in _LAYOUT.items():
        cp[section] = {k: _fmt(getattr(cfg, k)) for k in keys}
        if section == "grid":
            cp["field"] = {"name": cfg.field_name, **{k: _fmt(v) for k, v in sorted(cfg.field_params.items())}}
    cp["checks"] = {"suite": ",".join(cfg.suite)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    kw = {}
    try:
        for section, keys in _LAYOUT.items():
            if not cp.has_section(section):
                continue
            for k, raw in cp[section].items():
                if k not in keys:
                    raise ConfigError(f"unknown key {section}.{k}")
                t = types[k]
                if t == "float":
                    kw[k] = float(raw)
                elif t == "int":
                    kw[k] = int(raw)
                elif t == "list":
                    kw[k] = json.loads(raw)
                else:
                    kw[k] = raw
        if cp.has_section("field"):
            sec = dict(cp["field"])
            kw["field_name"] = sec.pop("name", "constant")
            kw["field_params"] = {k: json.loads(v) for k, v in sec.items()}
        if cp.has_section("checks"):
            raw = cp["checks"].get("suite", "all")
            kw["suite"] = [s.strip() for s in raw.split(",") if s.strip()]
        extra = set(cp.sections()) - set(_LAYOUT) - {"field", "checks"}
        if extra:
            raise ConfigError(f"unknown sections: {sorted(extra)}")
    except (ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value: {exc}") from exc
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
