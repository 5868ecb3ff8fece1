"""Shunt active power filter with EMD disturbance singulation.

Pipeline per run:

1. ``split_disturbances``: in ``emd_enhanced`` mode each load phase is
   decomposed; the residue is the fundamental ``i_m`` and the IMFs are the
   disturbances ``i_n``. In ``baseline`` mode ``i_m`` is the load itself.
2. ``disturbance_reference``: ``i_c_n = -sum(i_n)`` per phase.
3. ``pfc_reference``: instantaneous power theory on ``i_m`` gives ``i_c_m``.
4. The phase legs track ``i_c_ref = i_c_m + i_c_n`` with hysteresis control
   of slew-limited current sources; the fourth leg injects the reverse of the
   neutral current the phases leave behind.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _core, pq
from .emd import EmdConfig, decompose
from .plant import PlantOutputs, apply_injection
from .signal import AlignmentError, ThreePhaseSignal, TimeSeries, period_samples, write_csv

Mode = Literal["baseline", "emd_enhanced"]
MODES = ("baseline", "emd_enhanced")

#: Default hysteresis band as a fraction of the rated phase peak.
BAND_FRACTION = 0.02

TRACE_COLUMNS = (
    "i_load_r", "i_load_s", "i_load_t", "i_load_n",
    "i_ref_r", "i_ref_s", "i_ref_t",
    "i_inj_r", "i_inj_s", "i_inj_t", "i_inj_n",
    "i_src_r", "i_src_s", "i_src_t", "i_src_n",
    "p", "q", "p0",
    "s_r", "s_s", "s_t", "s_n",
    "settled",
)  # fmt: skip


@dataclass(frozen=True)
class ApfConfig:
    """Controller settings.

    ``hysteresis_band`` defaults to 2 % of ``rated_peak``, which in turn
    defaults to the largest absolute load phase current in the record.
    ``converter_slew`` defaults to ``band / (2 * dt)``: the fastest ramp whose
    one-step overshoot still keeps the tracking error inside the band.
    With ``neutral_feedback`` the fourth leg also adds the phase legs'
    measured tracking error to its reference, so it chases the actual
    neutral current rather than the one the references predict.
    """

    mode: Mode = "emd_enhanced"
    pq: pq.PqConfig = field(default_factory=pq.PqConfig)
    emd: EmdConfig | None = None
    hysteresis_band: float | None = None
    converter_slew: float | None = None
    rated_peak: float | None = None
    neutral_feedback: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.emd is None:
            object.__setattr__(self, "emd", EmdConfig.fundamental_locked(self.pq.f0))
        elif self.emd.stop_mode != "fundamental_locked":
            raise ValueError("the filter needs a fundamental_locked EMD configuration")
        for name in ("hysteresis_band", "converter_slew", "rated_peak"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive, got {val}")

    def band_for(self, load: ThreePhaseSignal) -> float:
        if self.hysteresis_band is not None:
            return self.hysteresis_band
        rated = self.rated_peak
        if rated is None:
            rated = float(np.max(np.abs(load.as_array())))
        if rated <= 0:
            return 1e-6
        return BAND_FRACTION * rated

    def slew_for(self, band: float, dt: float) -> float:
        if self.converter_slew is not None:
            return self.converter_slew
        return band / (2.0 * dt)


@dataclass(frozen=True, eq=False)
class ReferenceSplit:
    """Per-phase fundamental/disturbance split and the derived references.

    The reference fields stay ``None`` until :func:`build_references` fills them.
    """

    i_m: ThreePhaseSignal
    i_n: tuple[list[TimeSeries], list[TimeSeries], list[TimeSeries]]
    i_c_m: ThreePhaseSignal | None = None
    i_c_n: ThreePhaseSignal | None = None
    i_c_ref: ThreePhaseSignal | None = None
    i_c_neutral_ref: TimeSeries | None = None


@dataclass(frozen=True, eq=False)
class ApfTrace:
    """Complete record of one simulation."""

    mode: str
    voltages: ThreePhaseSignal
    load: ThreePhaseSignal
    load_neutral: TimeSeries
    reference: ThreePhaseSignal
    neutral_reference: TimeSeries
    injected: ThreePhaseSignal
    injected_neutral: TimeSeries
    source: ThreePhaseSignal
    source_neutral: TimeSeries
    power: pq.PowerTriple
    states: np.ndarray
    settled: np.ndarray
    band: float
    slew: float
    f0: float
    split: ReferenceSplit
    scenario_fingerprint: str = ""
    burst_window: tuple[float, float] | None = None

    @property
    def dt(self) -> float:
        return self.load.dt

    def times(self) -> np.ndarray:
        return self.load.times()

    def tracking_error(self) -> np.ndarray:
        """``injected - reference`` per leg as a ``(4, n)`` array."""
        inj = np.vstack([self.injected.as_array(), self.injected_neutral.samples])
        ref = np.vstack([self.reference.as_array(), self.neutral_reference.samples])
        return inj - ref

    def columns(self) -> list[tuple[str, np.ndarray]]:
        data = [
            *self.load.as_array(),
            self.load_neutral.samples,
            *self.reference.as_array(),
            *self.injected.as_array(),
            self.injected_neutral.samples,
            *self.source.as_array(),
            self.source_neutral.samples,
            np.asarray(self.power.p),
            np.asarray(self.power.q),
            np.asarray(self.power.p0),
            *self.states,
            self.settled,
        ]
        return list(zip(TRACE_COLUMNS, data))

    def to_csv(self, path) -> None:
        write_csv(path, self.times(), self.columns())


def split_disturbances(load: ThreePhaseSignal, cfg: ApfConfig) -> ReferenceSplit:
    if cfg.mode == "baseline":
        return ReferenceSplit(load, ([], [], []))
    fundamentals, disturbances = [], []
    for phase in load.phases:
        d = decompose(phase, cfg.emd)
        fundamentals.append(d.residue)
        disturbances.append([imf.series for imf in d.imfs])
    return ReferenceSplit(ThreePhaseSignal(*fundamentals), tuple(disturbances))


def disturbance_reference(i_n, like: TimeSeries) -> ThreePhaseSignal:
    """``-sum`` of each phase's disturbance list, on the grid of ``like``."""
    out = []
    for comps in i_n:
        total = np.zeros(len(like))
        for c in comps:
            if not c.same_grid(like):
                raise AlignmentError("disturbance component off the reference grid")
            total = total + c.samples
        out.append(like.with_samples(-total))
    return ThreePhaseSignal(*out)


def pfc_reference(
    i_m: ThreePhaseSignal,
    v: ThreePhaseSignal,
    cfg: ApfConfig,
) -> tuple[ThreePhaseSignal, TimeSeries]:
    """Power-factor-correction currents for the fundamental ``i_m``.

    Returns the phase currents and the reverse of the fundamental's neutral
    current.
    """
    if not i_m.same_grid(v):
        raise AlignmentError("currents and voltages must share one grid")
    vab = pq.clarke_signal(v)
    iab = pq.clarke_signal(i_m)
    power = pq.instantaneous_power(vab, iab)
    _, p_tilde = pq.oscillating_p(i_m.r.with_samples(power.p), cfg.pq)
    p_c, q_c = pq.compensation_targets(power, p_tilde.samples)
    ic = pq.compensating_currents(vab, p_c, q_c, iab.zero, cfg.pq)
    i_c_m = ThreePhaseSignal.from_array(np.vstack(pq.inverse_clarke(ic)), i_m.dt, i_m.t0)
    return i_c_m, -i_m.total()


def build_references(load: ThreePhaseSignal, v: ThreePhaseSignal, cfg: ApfConfig) -> ReferenceSplit:
    split = split_disturbances(load, cfg)
    i_c_n = disturbance_reference(split.i_n, load.r)
    i_c_m, i_c_neutral = pfc_reference(split.i_m, v, cfg)
    return ReferenceSplit(split.i_m, split.i_n, i_c_m, i_c_n, i_c_m + i_c_n, i_c_neutral)


def hysteresis_step(i_injected: float, i_ref: float, band: float, prev: int) -> int:
    """Switch decision for one leg: 1 pushes current up, 0 pulls it down."""
    if not band > 0:
        raise ValueError("band must be positive")
    error = i_ref - i_injected
    if error > 0.5 * band:
        return 1
    if error < -0.5 * band:
        return 0
    return prev


def converter_step(state: int, i_injected: float, slew: float, dt: float) -> float:
    if not dt > 0:
        raise ValueError("dt must be positive")
    return i_injected + slew * dt if state else i_injected - slew * dt


def track(
    ref: np.ndarray,
    band: float,
    slew: float,
    dt: float,
    feedback_leg: int = -1,
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-loop hysteresis tracking of a ``(legs, n)`` reference, starting from rest.

    Equivalent to alternating :func:`hysteresis_step` and
    :func:`converter_step` per leg and sample.
    """
    ref = np.atleast_2d(np.asarray(ref, dtype=float))
    legs = ref.shape[0]
    return _core.hysteresis_track(
        ref, band, slew, dt, np.zeros(legs), np.zeros(legs, dtype=np.uint8), feedback_leg
    )


def run_apf(plant: PlantOutputs, cfg: ApfConfig | None = None) -> ApfTrace:
    cfg = cfg or ApfConfig()
    load, v = plant.load_currents, plant.voltages
    if not load.same_grid(v):
        raise AlignmentError("plant voltages and currents must share one grid")
    dt = load.dt
    split = build_references(load, v, cfg)
    # fourth leg: reverse of what the phase references leave in the neutral
    neutral_ref = -(load.total() + split.i_c_ref.total())
    band = cfg.band_for(load)
    slew = cfg.slew_for(band, dt)
    refs = np.vstack([split.i_c_ref.as_array(), neutral_ref.samples])
    cur, states = track(refs, band, slew, dt, feedback_leg=3 if cfg.neutral_feedback else -1)
    if cfg.neutral_feedback:
        # the leg actually tracked its nominal reference plus the phase legs' error
        neutral_ref = neutral_ref.with_samples(refs[3] + (refs[:3] - cur[:3]).sum(axis=0))
    injected = ThreePhaseSignal.from_array(cur[:3], dt, load.t0)
    injected_n = load.r.with_samples(cur[3])
    source, source_n = apply_injection(load, injected, injected_n)
    # unsettled: converter start-up (first period) and the tail where the
    # centred moving average for p-bar is clipped to a one-sided window
    w = period_samples(dt, cfg.pq.f0)
    settled = load.times() >= load.t0 + 1.0 / cfg.pq.f0 - 0.5 * dt
    settled[len(settled) - (w - w // 2) :] = False
    fp, burst = "", None
    if plant.config is not None:
        fp = plant.config.fingerprint()
        b = plant.config.line1.burst
        if b.amplitude != 0.0:
            burst = (b.t_start, b.t_end)
    return ApfTrace(
        mode=cfg.mode,
        voltages=v,
        load=load,
        load_neutral=plant.neutral_current,
        reference=split.i_c_ref,
        neutral_reference=neutral_ref,
        injected=injected,
        injected_neutral=injected_n,
        source=source,
        source_neutral=source_n,
        power=pq.power_of(v, source),
        states=states,
        settled=settled,
        band=band,
        slew=slew,
        f0=cfg.pq.f0,
        split=split,
        scenario_fingerprint=fp,
        burst_window=burst,
    )
