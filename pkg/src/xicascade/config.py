"""``key = value`` run configuration files."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace

from .model import ModelParams
from .pipeline import ENGINES

MODES = ("simulate", "verify", "sweep")
_INT_FIELDS = ("nmax1", "nmax2")
_NUMBER = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*(pi)?$", re.IGNORECASE)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    mode: str = "simulate"
    engine: str = "analytic"
    output_path: str | None = None
    sweep_key: str | None = None
    sweep_values: list = field(default_factory=list)
    workers: int = 1
    dt: float = 1e-3

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.sweep_key is not None and self.sweep_key not in ModelParams.field_names():
            raise ConfigError(f"sweep_key {self.sweep_key!r} is not a model parameter")
        if self.mode == "sweep" and (self.sweep_key is None or not self.sweep_values):
            raise ConfigError("sweep mode needs sweep_key and a non-empty sweep_values")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")


def parse_number(text: str) -> float:
    """A float, optionally followed by ``pi`` (``3pi``, ``3*pi``, ``pi``)."""
    text = text.strip()
    m = _NUMBER.match(text)
    if not text or not m:
        raise ValueError(f"not a number: {text!r}")
    coef, pi = m.groups()
    if coef is None and pi is None:
        raise ValueError(f"not a number: {text!r}")
    value = float(coef) if coef is not None else 1.0
    return value * math.pi if pi else value


def _param_value(key: str, text: str):
    if key in _INT_FIELDS:
        value = parse_number(text)
        if value != int(value):
            raise ValueError(f"{key} must be an integer")
        return int(value)
    return parse_number(text)


def parse_config(text: str) -> RunConfig:
    """Parse a configuration document into a validated :class:`RunConfig`.

    Lines are ``key = value``; ``#`` starts a comment.  Keys are the
    :class:`ModelParams` fields plus ``mode``, ``engine``, ``output``,
    ``sweep_key``, ``sweep_values`` (comma separated), ``workers`` and ``dt``.
    """
    known = set(ModelParams.field_names())
    param_values = {}
    run = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in param_values or key in run:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in known:
                param_values[key] = _param_value(key, value)
            elif key in ("mode", "engine", "output", "sweep_key"):
                run[key] = value
            elif key == "sweep_values":
                run[key] = [parse_number(v) for v in value.split(",") if v.strip()]
            elif key == "workers":
                run[key] = int(value)
            elif key == "dt":
                run[key] = parse_number(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc

    try:
        params = ModelParams(**param_values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if "output" in run:
        run["output_path"] = run.pop("output")
    return RunConfig(params=params, **run)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def with_param(params: ModelParams, key: str, value) -> ModelParams:
    """Copy of ``params`` with one field replaced (validated)."""
    names = {f.name for f in fields(ModelParams)}
    if key not in names:
        raise ConfigError(f"unknown parameter {key!r}")
    if key in _INT_FIELDS:
        value = int(value)
    try:
        return replace(params, **{key: value})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
