"""Synthetic three-phase four-wire test system.

The grid is stiff: phase voltages are clean balanced sinusoids that no
injection disturbs. The three loads are prescribed current waveforms:

* line 1: lagging sinusoid plus a gated, exponentially decaying burst
  (a capacitor-switching style transient);
* line 2: clean lagging sinusoid;
* line 3: lagging sinusoid with a fixed harmonic mix.

Scenarios are read from YAML with the same nesting as :class:`ScenarioConfig`;
unknown keys are rejected. Angles in scenario files are in degrees.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .signal import AlignmentError, ThreePhaseSignal, TimeSeries, write_csv


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


@dataclass(frozen=True)
class BurstSpec:
    t_start: float = 0.088
    t_end: float = 0.094
    carrier: float = 1000.0
    decay: float = 50.0
    amplitude: float = 2.0


@dataclass(frozen=True)
class Harmonic:
    order: int
    amplitude: float
    phase: float = 0.0


@dataclass(frozen=True)
class Line1:
    i_peak: float = 8.0
    phase_lag: float = 60.0
    burst: BurstSpec = field(default_factory=BurstSpec)


@dataclass(frozen=True)
class Line2:
    i_peak: float = 20.0
    phase_lag: float = 30.0


def _default_harmonics() -> tuple[Harmonic, ...]:
    return (Harmonic(5, 0.20), Harmonic(7, 0.15))


@dataclass(frozen=True)
class Line3:
    i_peak: float = 12.0
    phase_lag: float = 30.0
    harmonics: tuple[Harmonic, ...] = field(default_factory=_default_harmonics)


@dataclass(frozen=True)
class ScenarioConfig:
    """Test-system description. Angles (``phase_lag``, harmonic ``phase``) in degrees."""

    f0: float = 50.0
    dt: float = 1e-5
    duration: float = 0.2
    v_peak: float = 325.0
    line1: Line1 = field(default_factory=Line1)
    line2: Line2 = field(default_factory=Line2)
    line3: Line3 = field(default_factory=Line3)
    seed: int | None = None

    def __post_init__(self):
        if not (self.f0 > 0 and self.dt > 0 and self.duration > 0):
            raise ConfigError("f0, dt and duration must be positive")
        if self.duration < 4.0 / self.f0 - 1e-12:
            raise ConfigError(f"duration {self.duration} s is shorter than 4 fundamental periods")
        if self.dt > 1.0 / (200.0 * self.f0) + 1e-15:
            raise ConfigError(f"dt {self.dt} s exceeds 1/(200*f0)")
        if not self.v_peak > 0:
            raise ConfigError("v_peak must be positive")
        b = self.line1.burst
        if not (0.0 <= b.t_start < b.t_end <= self.duration + 1e-12):
            raise ConfigError(
                f"burst window [{b.t_start}, {b.t_end}) must lie inside [0, {self.duration}]"
            )
        if b.carrier <= 0 or b.decay < 0:
            raise ConfigError("burst carrier must be positive and decay non-negative")
        for h in self.line3.harmonics:
            if h.order < 2:
                raise ConfigError(f"harmonic order must be >= 2, got {h.order}")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.dt))

    def fingerprint(self) -> str:
        blob = json.dumps(scenario_to_dict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True, eq=False)
class PlantOutputs:
    voltages: ThreePhaseSignal
    load_currents: ThreePhaseSignal
    neutral_current: TimeSeries
    config: ScenarioConfig | None = None

    def to_csv(self, path) -> None:
        v, i = self.voltages, self.load_currents
        write_csv(
            path,
            v.times(),
            [
                ("v_r", v.r.samples),
                ("v_s", v.s.samples),
                ("v_t", v.t.samples),
                ("i_r", i.r.samples),
                ("i_s", i.s.samples),
                ("i_t", i.t.samples),
                ("i_n", self.neutral_current.samples),
            ],
        )


_SHIFT = (0.0, -2.0 * np.pi / 3.0, 2.0 * np.pi / 3.0)


def _times(cfg: ScenarioConfig) -> np.ndarray:
    return np.arange(cfg.n_samples) * cfg.dt


def synth_voltages(cfg: ScenarioConfig) -> ThreePhaseSignal:
    t = _times(cfg)
    wt = 2.0 * np.pi * cfg.f0 * t
    return ThreePhaseSignal.from_array([cfg.v_peak * np.sin(wt + s) for s in _SHIFT], cfg.dt)


def burst_waveform(t: np.ndarray, b: BurstSpec) -> np.ndarray:
    """Gated burst; exactly zero outside ``[t_start, t_end)``."""
    gate = (t >= b.t_start) & (t < b.t_end)
    tau = t[gate] - b.t_start
    out = np.zeros_like(t)
    out[gate] = b.amplitude * np.exp(-b.decay * tau) * np.sin(2.0 * np.pi * b.carrier * tau)
    return out


def synth_load_currents(cfg: ScenarioConfig) -> ThreePhaseSignal:
    t = _times(cfg)
    wt = 2.0 * np.pi * cfg.f0 * t
    l1, l2, l3 = cfg.line1, cfg.line2, cfg.line3
    i1 = l1.i_peak * np.sin(wt - math.radians(l1.phase_lag)) + burst_waveform(t, l1.burst)
    i2 = l2.i_peak * np.sin(wt + _SHIFT[1] - math.radians(l2.phase_lag))
    shape3 = np.sin(wt + _SHIFT[2] - math.radians(l3.phase_lag))
    for h in l3.harmonics:
        shape3 = shape3 + h.amplitude * np.sin(h.order * wt + math.radians(h.phase))
    i3 = l3.i_peak * shape3
    return ThreePhaseSignal.from_array([i1, i2, i3], cfg.dt)


def synthesize(cfg: ScenarioConfig) -> PlantOutputs:
    load = synth_load_currents(cfg)
    return PlantOutputs(synth_voltages(cfg), load, load.total(), cfg)


def apply_injection(
    load: ThreePhaseSignal,
    injected: ThreePhaseSignal,
    injected_neutral: TimeSeries,
) -> tuple[ThreePhaseSignal, TimeSeries]:
    """Source-side currents after the filter injects into each phase and the neutral."""
    if not (load.same_grid(injected) and load.r.same_grid(injected_neutral)):
        raise AlignmentError("load, injection and neutral injection must share one grid")
    source = load + injected
    return source, source.total() + injected_neutral


# ---------------------------------------------------------------- config I/O


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(map(str, unknown))}")
    kwargs = {}
    for name, value in data.items():
        sub = f"{where}.{name}" if where else name
        if name == "burst":
            kwargs[name] = _build(BurstSpec, value, sub)
        elif name in ("line1", "line2", "line3"):
            kwargs[name] = _build({"line1": Line1, "line2": Line2, "line3": Line3}[name], value, sub)
        elif name == "harmonics":
            if not isinstance(value, list):
                raise ConfigError(f"{sub}: expected a list")
            kwargs[name] = tuple(_build(Harmonic, h, f"{sub}[{k}]") for k, h in enumerate(value))
        elif name == "seed":
            if value is not None and (isinstance(value, bool) or not isinstance(value, int)):
                raise ConfigError(f"{sub}: expected an integer")
            kwargs[name] = value
        elif name == "order":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{sub}: expected an integer")
            kwargs[name] = value
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{sub}: expected a number, got {value!r}")
            kwargs[name] = float(value)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where or 'scenario'}: {exc}") from None


def scenario_from_dict(data: dict | None) -> ScenarioConfig:
    return _build(ScenarioConfig, data or {}, "scenario")


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    d = asdict(cfg)
    d["line3"]["harmonics"] = [dict(h) for h in d["line3"]["harmonics"]]
    return d


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read a YAML scenario; missing keys take their defaults."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    return scenario_from_dict(data)


def dump_scenario(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(scenario_to_dict(cfg), sort_keys=False)


def with_burst_amplitude(cfg: ScenarioConfig, amplitude: float) -> ScenarioConfig:
    line1 = replace(cfg.line1, burst=replace(cfg.line1.burst, amplitude=amplitude))
    return replace(cfg, line1=line1)
