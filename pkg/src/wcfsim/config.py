"""Experiment configuration: JSON schema, defaults and validation.

A config file is a JSON object whose sections override the built-in
defaults key by key; omitted keys keep their default. The canonical form
written by :func:`dumps` always contains every key, sorted, so that
``dumps(loads(text))`` is stable under repeated round trips.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError, WcfError
from .montecarlo import SCENARIOS, NoiseModel
from .optics import PathEfficiencies, check_unit
from .protocol import ATTENUATION_PER_KM, ChannelModel
from .spdc import SourceParams, separable_toy_params

DEFAULTS_NAME = "defaults"
JSA_PRESETS = ("nominal", "separable")


@dataclass(frozen=True)
class NoiseConfig:
    pair_prob: float = 0.015
    run_rate_hz: float = 51e3
    false_trigger_hz: float = 40.0
    signal_dark_hz: float = 100.0
    gate_s: float = 500e-12
    double_pair_enabled: bool = False
    phase_walk_std: float = 1e-4

    def model(self) -> NoiseModel:
        return NoiseModel.from_rates(
            pair_prob=self.pair_prob,
            run_rate_hz=self.run_rate_hz,
            false_trigger_hz=self.false_trigger_hz,
            signal_dark_hz=self.signal_dark_hz,
            gate_s=self.gate_s,
            double_pair_enabled=self.double_pair_enabled,
            phase_walk_std=self.phase_walk_std,
        )


def _default_voas() -> dict:
    return {name: 1 for name in PathEfficiencies.names()}


@dataclass(frozen=True)
class ChannelConfig:
    distances_km: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    attenuation_per_km: float = ATTENUATION_PER_KM
    voa_count_per_path: dict = field(default_factory=_default_voas)

    def model(self, distance_km: float) -> ChannelModel:
        return ChannelModel(distance_km, self.attenuation_per_km, dict(self.voa_count_per_path))


@dataclass(frozen=True)
class SweepConfig:
    x_start: float = 0.0
    x_stop: float = 1.0
    x_num: int = 200
    deltas: tuple = (0.0, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class McConfig:
    runs: int = 1_000_000
    scenarios: tuple = SCENARIOS
    alice_x: float = 0.78
    phase_window: float | None = 0.1
    write_run_log: bool = False


@dataclass(frozen=True)
class JsaConfig:
    preset: str = "nominal"
    grid_size: int = 512
    window: float = 4.0
    source: dict = field(default_factory=dict)

    def params(self) -> SourceParams:
        base = SourceParams(**self.source)
        return separable_toy_params(base) if self.preset == "separable" else base


@dataclass(frozen=True)
class ExperimentConfig:
    efficiencies: dict = field(default_factory=lambda: PathEfficiencies.reference_setup().as_dict())
    visibility: float = 0.96
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    mc: McConfig = field(default_factory=McConfig)
    jsa: JsaConfig = field(default_factory=JsaConfig)
    seed: int = 0
    output_dir: str = "out"

    def path_efficiencies(self) -> PathEfficiencies:
        return PathEfficiencies(**self.efficiencies)

    def to_dict(self) -> dict:
        data = asdict(self)
        for section, key in (("channel", "distances_km"), ("sweep", "deltas"), ("mc", "scenarios")):
            data[section][key] = list(data[section][key])
        data["jsa"]["source"] = dict(self.jsa.source)
        return data


_SECTIONS = {
    "noise": NoiseConfig,
    "channel": ChannelConfig,
    "sweep": SweepConfig,
    "mc": McConfig,
    "jsa": JsaConfig,
}


def _number(path: str, value, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite")
    if integer:
        if int(value) != value:
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _bool(path: str, value) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true or false, got {value!r}")
    return value


def _number_list(path: str, value) -> tuple:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty list of numbers")
    return tuple(_number(f"{path}[{i}]", v) for i, v in enumerate(value))


def _check_keys(path: str, data, allowed) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}")
    return data


def _coerce_section(name: str, cls, data: dict):
    data = _check_keys(name, data, [f.name for f in fields(cls)])
    out = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        path = f"{name}.{f.name}"
        value = data[f.name]
        default = f.default
        if f.name in ("distances_km", "deltas"):
            out[f.name] = _number_list(path, value)
        elif f.name == "scenarios":
            if not isinstance(value, list) or not value or not all(isinstance(s, str) for s in value):
                raise ConfigError(f"{path}: expected a non-empty list of names")
            out[f.name] = tuple(value)
        elif f.name in ("voa_count_per_path", "source"):
            out[f.name] = dict(_check_keys(path, value, value.keys() if isinstance(value, dict) else ()))
        elif f.name == "phase_window":
            out[f.name] = None if value is None else _number(path, value)
        elif f.name == "preset":
            if not isinstance(value, str):
                raise ConfigError(f"{path}: expected a string")
            out[f.name] = value
        elif isinstance(default, bool):
            out[f.name] = _bool(path, value)
        elif isinstance(default, int):
            out[f.name] = _number(path, value, integer=True)
        else:
            out[f.name] = _number(path, value)
    return cls(**out)


def _validate(cfg: ExperimentConfig) -> None:
    def guard(path, fn):
        try:
            return fn()
        except ConfigError:
            raise
        except (WcfError, ValueError, TypeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None

    eff = guard("efficiencies", cfg.path_efficiencies)
    guard("visibility", lambda: check_unit("visibility", cfg.visibility))
    guard("noise", cfg.noise.model)
    for i, d in enumerate(cfg.channel.distances_km):
        guard(f"channel.distances_km[{i}]", lambda d=d: cfg.channel.model(d))
    s = cfg.sweep
    guard("sweep.x_start", lambda: check_unit("x_start", s.x_start))
    guard("sweep.x_stop", lambda: check_unit("x_stop", s.x_stop))
    if s.x_num < 2:
        raise ConfigError("sweep.x_num: need at least two grid points")
    if s.x_stop <= s.x_start:
        raise ConfigError("sweep.x_stop: must exceed sweep.x_start")
    if any(d < 0 for d in s.deltas):
        raise ConfigError("sweep.deltas: deterrent factors must be >= 0")
    m = cfg.mc
    if m.runs <= 0:
        raise ConfigError("mc.runs: no runs (must be a positive integer)")
    unknown = [n for n in m.scenarios if n not in SCENARIOS]
    if unknown:
        raise ConfigError(f"mc.scenarios: unknown scenario(s) {unknown}; choose from {list(SCENARIOS)}")
    guard("mc.alice_x", lambda: check_unit("alice_x", m.alice_x))
    if m.phase_window is not None and m.phase_window <= 0:
        raise ConfigError("mc.phase_window: must be > 0 or null")
    j = cfg.jsa
    if j.preset not in JSA_PRESETS:
        raise ConfigError(f"jsa.preset: {j.preset!r} not in {list(JSA_PRESETS)}")
    if j.grid_size < 16:
        raise ConfigError("jsa.grid_size: must be >= 16")
    if j.window <= 0:
        raise ConfigError("jsa.window: must be > 0")
    guard("jsa.source", j.params)
    if not (0 <= cfg.seed < 2**64):
        raise ConfigError("seed: must be an unsigned 64-bit integer")
    del eff


def from_dict(data: dict) -> ExperimentConfig:
    """Merge ``data`` onto the defaults and validate every field."""
    allowed = [f.name for f in fields(ExperimentConfig)]
    data = _check_keys("config", data, allowed)
    base = ExperimentConfig()
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            merged = {**asdict(getattr(base, name)), **_check_keys(name, data[name], [f.name for f in fields(cls)])}
            for key in ("distances_km", "deltas", "scenarios"):
                if key in merged and isinstance(merged[key], tuple):
                    merged[key] = list(merged[key])
            kwargs[name] = _coerce_section(name, cls, merged)
    if "efficiencies" in data:
        eff = _check_keys("efficiencies", data["efficiencies"], PathEfficiencies.names())
        kwargs["efficiencies"] = {
            **base.efficiencies,
            **{k: _number(f"efficiencies.{k}", v) for k, v in eff.items()},
        }
    if "visibility" in data:
        kwargs["visibility"] = _number("visibility", data["visibility"])
    if "seed" in data:
        kwargs["seed"] = _number("seed", data["seed"], integer=True)
    if "output_dir" in data:
        if not isinstance(data["output_dir"], str) or not data["output_dir"]:
            raise ConfigError("output_dir: expected a non-empty path string")
        kwargs["output_dir"] = data["output_dir"]
    cfg = ExperimentConfig(**kwargs)
    _validate(cfg)
    return cfg


def loads(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return from_dict(data)


def load(source: str | Path) -> ExperimentConfig:
    """Read a config file, or return the built-in defaults for ``"defaults"``."""
    if str(source) == DEFAULTS_NAME:
        return from_dict({})
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {source}: {exc.strerror}") from None
    return loads(text)


def dumps(cfg: ExperimentConfig) -> str:
    """Canonical JSON: every key present, keys sorted, two-space indent."""
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"
