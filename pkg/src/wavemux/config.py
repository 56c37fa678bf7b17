"""Engine configuration: defaults, INI file, environment, and flag overrides.

Precedence is file < environment (``WAVEMUX_<SECTION>_<KEY>``) < explicit
overrides (CLI flags). One validator backs both the engine and the
``validate-config`` command so they accept and reject the same inputs.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional

from .errors import ConfigError

ENV_PREFIX = "WAVEMUX"

# (section, key) -> (field name, parser)
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _BOOL_TRUE:
        return True
    if t in _BOOL_FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_opt_float(text: str) -> Optional[float]:
    t = text.strip().lower()
    if t in ("", "auto", "none"):
        return None
    return float(text)


_SCHEMA: dict[tuple[str, str], tuple[str, Any]] = {
    ("engine", "m"): ("m", int),
    ("engine", "n"): ("n", int),
    ("engine", "tick_period_ms"): ("tick_period_ms", float),
    ("engine", "coherence_interval"): ("coherence_interval", int),
    ("engine", "coherence_budget"): ("coherence_budget", int),
    ("engine", "similarity_mode"): ("similarity_mode", str),
    ("engine", "exclude_dc"): ("exclude_dc", _parse_bool),
    ("engine", "window"): ("window", str),
    ("engine", "source"): ("source", str),
    ("engine", "snapshot_dir"): ("snapshot_dir", str),
    ("engine", "snapshot_interval"): ("snapshot_interval", int),
    ("synth", "seed"): ("seed", int),
    ("synth", "sample_rate_hz"): ("sample_rate_hz", float),
    ("synth", "components_per_signal"): ("components_per_signal", int),
    ("synth", "event_lanes"): ("event_lanes", int),
    ("synth", "event_min_duration"): ("event_min_duration", int),
    ("synth", "event_max_duration"): ("event_max_duration", int),
    ("synth", "event_max_gap"): ("event_max_gap", int),
    ("gating", "theta_on"): ("theta_on", float),
    ("gating", "theta_off"): ("theta_off", float),
    ("gating", "alpha"): ("alpha", float),
    ("wavelet", "q"): ("q", int),
    ("wavelet", "fmin_hz"): ("fmin_hz", _parse_opt_float),
    ("wavelet", "fmax_hz"): ("fmax_hz", _parse_opt_float),
    ("wavelet", "omega0"): ("omega0", float),
    ("wavelet", "time_smoothing"): ("time_smoothing", float),
    ("wavelet", "scale_smoothing_octaves"): ("scale_smoothing_octaves", float),
    ("server", "host"): ("host", str),
    ("server", "port"): ("port", int),
    ("server", "queue_depth"): ("queue_depth", int),
    ("server", "static_dir"): ("static_dir", str),
}


@dataclass(frozen=True)
class EngineConfig:
    """Full engine configuration with prototype-scale defaults."""

    # engine
    m: int = 8
    n: int = 256
    tick_period_ms: float = 10.0
    coherence_interval: int = 25
    coherence_budget: int = 1
    similarity_mode: str = "magnitude"
    exclude_dc: bool = False
    window: str = "none"
    source: str = "synth"
    snapshot_dir: Optional[str] = None
    snapshot_interval: int = 1000
    # synth
    seed: int = 42
    sample_rate_hz: float = 100.0
    components_per_signal: int = 3
    event_lanes: int = 3
    event_min_duration: int = 100
    event_max_duration: int = 500
    event_max_gap: int = 400
    # gating
    theta_on: float = 0.9
    theta_off: float = 0.8
    alpha: float = 0.3
    # wavelet
    q: int = 64
    fmin_hz: Optional[float] = None
    fmax_hz: Optional[float] = None
    omega0: float = 6.0
    time_smoothing: float = 0.7071067811865476
    scale_smoothing_octaves: float = 0.6
    # server
    host: str = "127.0.0.1"
    port: int = 8787
    queue_depth: int = 64
    static_dir: Optional[str] = None

    @property
    def tick_period_s(self) -> float:
        return self.tick_period_ms / 1000.0

    def grid_fmin(self) -> float:
        # default keeps at least two full cycles inside the window
        return self.fmin_hz if self.fmin_hz is not None else 2.0 * self.sample_rate_hz / self.n

    def grid_fmax(self) -> float:
        return self.fmax_hz if self.fmax_hz is not None else 0.45 * self.sample_rate_hz

    def validate(self) -> "EngineConfig":
        problems = []
        if self.m < 2:
            problems.append(f"m must be >= 2, got {self.m}")
        if self.n < 4 or self.n % 2 != 0:
            problems.append(f"n must be even and >= 4, got {self.n}")
        if self.tick_period_ms <= 0:
            problems.append("tick_period_ms must be positive")
        if self.coherence_interval < 1:
            problems.append("coherence_interval must be >= 1")
        if self.coherence_budget < 1:
            problems.append("coherence_budget must be >= 1")
        if self.similarity_mode not in ("magnitude", "complex"):
            problems.append(f"similarity_mode must be magnitude or complex, got {self.similarity_mode!r}")
        if self.window not in ("none", "hann"):
            problems.append(f"window must be none or hann, got {self.window!r}")
        if self.snapshot_interval < 1:
            problems.append("snapshot_interval must be >= 1")
        if self.sample_rate_hz <= 0:
            problems.append("sample_rate_hz must be positive")
        if not (0.0 <= self.theta_off <= self.theta_on):
            problems.append(
                f"need 0 <= theta_off <= theta_on, got theta_off={self.theta_off}, theta_on={self.theta_on}"
            )
        if not (0.0 < self.alpha <= 1.0):
            problems.append(f"alpha must be in (0, 1], got {self.alpha}")
        if self.q < 2:
            problems.append(f"q must be >= 2, got {self.q}")
        if self.omega0 < 5.0:
            problems.append(f"omega0 must be >= 5, got {self.omega0}")
        if self.time_smoothing < 0 or self.scale_smoothing_octaves < 0:
            problems.append("smoothing widths must be non-negative")
        fmin, fmax = self.grid_fmin(), self.grid_fmax()
        if not (0.0 < fmin < fmax <= self.sample_rate_hz / 2.0):
            problems.append(
                f"wavelet band must satisfy 0 < fmin < fmax <= fs/2, got [{fmin}, {fmax}] at fs={self.sample_rate_hz}"
            )
        elif self.omega0 * self.sample_rate_hz / (2.0 * 3.141592653589793 * fmax) < 2.0:
            problems.append(f"fmax={fmax} Hz needs more than two samples per cycle at the smallest scale")
        if self.components_per_signal < 1:
            problems.append("components_per_signal must be >= 1")
        if not (1 <= self.event_min_duration <= self.event_max_duration):
            problems.append("event durations must satisfy 1 <= min <= max")
        if self.event_lanes < 0:
            problems.append("event_lanes must be >= 0")
        if self.event_max_gap < 0:
            problems.append("event_max_gap must be >= 0")
        if self.queue_depth < 1:
            problems.append("queue_depth must be >= 1")
        if not (0 <= self.port <= 65535):
            problems.append(f"port must be in [0, 65535], got {self.port}")
        if problems:
            raise ConfigError("; ".join(problems))
        return self


def _apply_pairs(cfg: EngineConfig, pairs: Mapping[tuple[str, str], str],
                 origin: str) -> EngineConfig:
    updates: dict[str, Any] = {}
    for (section, key), raw in pairs.items():
        entry = _SCHEMA.get((section, key))
        if entry is None:
            raise ConfigError(f"{origin}: unknown option [{section}] {key}")
        name, parse = entry
        try:
            updates[name] = parse(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{origin}: bad value for [{section}] {key}: {exc}") from None
    return replace(cfg, **updates)


def load_ini(path: str | Path, base: Optional[EngineConfig] = None) -> EngineConfig:
    """Parse a ``key = value`` sections file into a config (not yet validated)."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from None
    pairs: dict[tuple[str, str], str] = {}
    for section in parser.sections():
        if section not in ("engine", "synth", "gating", "wavelet", "server"):
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, value in parser.items(section):
            pairs[(section, key)] = value
    return _apply_pairs(base or EngineConfig(), pairs, origin=str(path))


def apply_env(cfg: EngineConfig, environ: Optional[Mapping[str, str]] = None) -> EngineConfig:
    """Overlay ``WAVEMUX_<SECTION>_<KEY>`` environment variables."""
    env = os.environ if environ is None else environ
    pairs: dict[tuple[str, str], str] = {}
    for (section, key) in _SCHEMA:
        var = f"{ENV_PREFIX}_{section.upper()}_{key.upper()}"
        if var in env:
            pairs[(section, key)] = env[var]
    return _apply_pairs(cfg, pairs, origin="environment")


def apply_overrides(cfg: EngineConfig, overrides: Mapping[str, Any]) -> EngineConfig:
    """Overlay already-typed values (CLI flags); unknown names are a bug."""
    names = {f.name for f in fields(EngineConfig)}
    unknown = set(overrides) - names
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def load_config(
    path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> EngineConfig:
    """file < environment < overrides, then validate."""
    cfg = EngineConfig()
    if path is not None:
        cfg = load_ini(path, base=cfg)
    cfg = apply_env(cfg, environ)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg.validate()
