"""Per-cycle performance metrics and the baseline/enhanced comparison.

THD is truncated at the 25th harmonic by default; above that the sampling
resolution and the converter's switching ripple dominate the spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signal import ThreePhaseSignal, TimeSeries, WindowError, dft_bin, rms, slice as tslice, write_csv

DEFAULT_BURST_WINDOW = (0.075, 0.1)
MAX_HARMONIC = 25

# verdict thresholds
Q_RATIO_MAX = 0.01
PF_MIN = 0.99
PF_VARIATION_RATIO = 3.0
THD_POST_MAX = 0.05
THD_DELTA_MAX = 0.01
PKPK_RATIO_MAX = 0.20


class UndefinedMetricError(ArithmeticError):
    """A ratio metric has a zero denominator."""


class FingerprintMismatch(ValueError):
    """Traces compared were not produced from the same scenario."""


def thd(i: TimeSeries, f0: float, max_harmonic: int = MAX_HARMONIC) -> float:
    """Total harmonic distortion of ``i`` over its (whole-cycle) window.

    Harmonics above the Nyquist frequency are skipped.
    """
    a1 = abs(dft_bin(i, f0))
    peak = i.peak()
    if peak == 0.0 or a1 < 1e-9 * peak:
        raise UndefinedMetricError("fundamental amplitude is zero; THD undefined")
    nyquist = 0.5 / i.dt
    total = 0.0
    for h in range(2, max_harmonic + 1):
        if h * f0 >= nyquist:
            break
        total += abs(dft_bin(i, h * f0)) ** 2
    return float(np.sqrt(total) / a1)


def _cycle(x: ThreePhaseSignal | TimeSeries, f0: float, cycle: int | None):
    if cycle is None:
        return x
    t0 = x.t0 + cycle / f0
    t1 = t0 + 1.0 / f0
    if isinstance(x, TimeSeries):
        return tslice(x, t0, t1)
    return x.map(lambda p: tslice(p, t0, t1))


def _check_whole_cycles(x: TimeSeries, f0: float) -> None:
    cycles = len(x) * x.dt * f0
    if abs(cycles - round(cycles)) * (1.0 / (f0 * x.dt)) > 0.5 or round(cycles) < 1:
        raise WindowError(f"window spans {cycles:.6f} cycles of {f0} Hz (need an integer)")


def active_apparent(v: ThreePhaseSignal, i: ThreePhaseSignal) -> tuple[float, float]:
    """Mean total real power and arithmetic apparent power ``sum(Vrms * Irms)``."""
    p = float(np.mean(sum(a.samples * b.samples for a, b in zip(v.phases, i.phases))))
    s = float(sum(rms(a) * rms(b) for a, b in zip(v.phases, i.phases)))
    return p, s


def power_factor(v: ThreePhaseSignal, i: ThreePhaseSignal, f0: float, cycle: int | None = None) -> float:
    """``P/S`` over one cycle (``cycle`` counts whole periods from the series start).

    With ``cycle=None`` the signals themselves must span whole cycles. The
    sign of ``P`` is kept, so a generating load reads negative.
    """
    v, i = _cycle(v, f0, cycle), _cycle(i, f0, cycle)
    _check_whole_cycles(v.r, f0)
    p, s = active_apparent(v, i)
    if s == 0.0:
        raise UndefinedMetricError("apparent power is zero; power factor undefined")
    return p / s


@dataclass(frozen=True)
class CycleMetrics:
    cycle_index: int
    t_start: float
    settled: bool
    p_mean: float
    q_mean: float
    apparent: float
    power_factor: float
    thd_per_phase: tuple[float, float, float]
    p_peak_to_peak: float

    @property
    def q_ratio(self) -> float:
        return abs(self.q_mean) / self.apparent if self.apparent else float("nan")


def _safe_thd(x: TimeSeries, f0: float) -> float:
    try:
        return thd(x, f0)
    except UndefinedMetricError:
        return float("nan")


def cycle_metrics(trace, f0: float | None = None) -> list[CycleMetrics]:
    """Metrics for every whole fundamental cycle of a trace's source side."""
    f0 = f0 or trace.f0
    dt = trace.dt
    per = int(round(1.0 / (f0 * dt)))
    n = len(trace.load)
    p = np.asarray(trace.power.p)
    q = np.asarray(trace.power.q)
    out = []
    for k in range(n // per):
        lo, hi = k * per, (k + 1) * per
        v = _cycle(trace.voltages, f0, k)
        i = _cycle(trace.source, f0, k)
        p_mean, s = active_apparent(v, i)
        pf = p_mean / s if s else float("nan")
        out.append(
            CycleMetrics(
                cycle_index=k,
                t_start=float(trace.load.t0 + lo * dt),
                settled=bool(np.all(trace.settled[lo:hi])),
                p_mean=float(np.mean(p[lo:hi])),
                q_mean=float(np.mean(q[lo:hi])),
                apparent=s,
                power_factor=pf,
                thd_per_phase=tuple(_safe_thd(x, f0) for x in i.phases),
                p_peak_to_peak=float(np.ptp(p[lo:hi])),
            )
        )
    return out


def window_peak_to_peak(trace, window: tuple[float, float]) -> tuple[float, float]:
    """Peak-to-peak of source ``p`` and ``q`` over ``[t0, t1)``."""
    t = trace.times()
    sel = (t >= window[0] - 1e-12) & (t < window[1] - 1e-12)
    if not sel.any():
        raise WindowError(f"window {window} holds no samples")
    return float(np.ptp(np.asarray(trace.power.p)[sel])), float(np.ptp(np.asarray(trace.power.q)[sel]))


def pf_variation(cycles: list[CycleMetrics], window: tuple[float, float], f0: float) -> float:
    """Largest cycle-to-cycle PF change over cycles touching ``window``.

    The cycle just before the window is included so the step into it counts.
    """
    period = 1.0 / f0
    idx = [
        k
        for k, c in enumerate(cycles)
        if c.t_start < window[1] - 1e-12 and c.t_start + period > window[0] + 1e-12
    ]
    if not idx:
        return 0.0
    lo = max(idx[0] - 1, 0)
    pf = np.array([cycles[k].power_factor for k in range(lo, idx[-1] + 1)])
    return float(np.max(np.abs(np.diff(pf)))) if pf.size > 1 else 0.0


@dataclass(frozen=True)
class Verdict:
    name: str
    status: str  # "PASS", "FAIL" or "N/A"
    detail: str

    @property
    def passed(self) -> bool | None:
        return None if self.status == "N/A" else self.status == "PASS"

    def line(self) -> str:
        return f"{self.name}: {self.status} ({self.detail})"


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    scenario_fingerprint: str
    baseline: list[CycleMetrics]
    enhanced: list[CycleMetrics]
    window: tuple[float, float]
    p_pkpk: dict[str, float]
    q_pkpk: dict[str, float]
    pf_variation: dict[str, float]
    load_thd: tuple[float, float, float]
    verdicts: list[Verdict] = field(default_factory=list)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_csv(self, path) -> None:
        header = [
            "mode", "cycle", "t_start", "settled", "p_mean", "q_mean", "apparent",
            "q_ratio", "power_factor", "thd_r", "thd_s", "thd_t", "p_pkpk",
        ]  # fmt: skip
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for mode, rows in (("baseline", self.baseline), ("emd_enhanced", self.enhanced)):
                for c in rows:
                    vals = [
                        mode, str(c.cycle_index), repr(c.t_start), str(int(c.settled)),
                        repr(c.p_mean), repr(c.q_mean), repr(c.apparent), repr(c.q_ratio),
                        repr(c.power_factor), *map(repr, c.thd_per_phase), repr(c.p_peak_to_peak),
                    ]  # fmt: skip
                    fh.write(",".join(vals) + "\n")

    def summary(self) -> str:
        lines = [f"scenario {self.scenario_fingerprint[:16]}"]
        lines += [v.line() for v in self.verdicts]
        w = self.window
        lines.append(
            f"window [{w[0]}, {w[1]}) s: p pk-pk baseline {self.p_pkpk['baseline']:.6g} W, "
            f"enhanced {self.p_pkpk['emd_enhanced']:.6g} W; q pk-pk baseline "
            f"{self.q_pkpk['baseline']:.6g} var, enhanced {self.q_pkpk['emd_enhanced']:.6g} var"
        )
        lines.append(f"THD computed up to harmonic {MAX_HARMONIC}")
        return "\n".join(lines) + "\n"


def _settled(rows: list[CycleMetrics]) -> list[CycleMetrics]:
    return [c for c in rows if c.settled]


def compare(
    baseline,
    enhanced,
    window: tuple[float, float] = DEFAULT_BURST_WINDOW,
    burst_present: bool | None = None,
) -> ComparisonReport:
    """Cycle metrics for both runs plus one verdict per comparison axis.

    ``burst_present`` defaults to whether either trace records a burst.
    """
    if baseline.scenario_fingerprint != enhanced.scenario_fingerprint:
        raise FingerprintMismatch("traces come from different scenarios")
    f0 = baseline.f0
    rows = {"baseline": cycle_metrics(baseline), "emd_enhanced": cycle_metrics(enhanced)}
    traces = {"baseline": baseline, "emd_enhanced": enhanced}
    p_pk, q_pk, pf_var = {}, {}, {}
    for mode, tr in traces.items():
        p_pk[mode], q_pk[mode] = window_peak_to_peak(tr, window)
        pf_var[mode] = pf_variation(rows[mode], window, f0)

    # load-side THD per phase over the first settled cycle
    settled_b = _settled(rows["baseline"])
    k0 = settled_b[0].cycle_index if settled_b else 0
    load_thd = tuple(_safe_thd(_cycle(p, f0, k0), f0) for p in baseline.load.phases)

    verdicts = []
    worst_q = {m: max((c.q_ratio for c in _settled(r)), default=float("nan")) for m, r in rows.items()}
    verdicts.append(
        Verdict(
            "reactive power eliminated",
            _status(all(q <= Q_RATIO_MAX for q in worst_q.values())),
            f"max |q_mean|/S baseline {worst_q['baseline']:.3g}, enhanced {worst_q['emd_enhanced']:.3g}",
        )
    )

    min_pf = min((c.power_factor for c in _settled(rows["emd_enhanced"])), default=float("nan"))
    var_b, var_e = pf_var["baseline"], pf_var["emd_enhanced"]
    pf_ok = min_pf >= PF_MIN and var_b >= PF_VARIATION_RATIO * var_e
    verdicts.append(
        Verdict(
            "power factor oscillation reduced",
            _status(pf_ok),
            f"enhanced min PF {min_pf:.5f}; window PF variation baseline {var_b:.3g}, enhanced {var_e:.3g}",
        )
    )

    post = {m: [c.thd_per_phase[2] for c in _settled(r)] for m, r in rows.items()}
    deltas = [abs(a - b) for a, b in zip(post["baseline"], post["emd_enhanced"])]
    worst_post = max((max(v) for v in post.values() if v), default=float("nan"))
    worst_delta = max(deltas, default=float("nan"))
    verdicts.append(
        Verdict(
            "THD comparable",
            _status(worst_post <= THD_POST_MAX and worst_delta <= THD_DELTA_MAX),
            f"line 3 THD pre {load_thd[2]:.4f}, post max {worst_post:.4f}, max mode difference {worst_delta:.4f}",
        )
    )

    if burst_present is None:
        burst_present = baseline.burst_window is not None or enhanced.burst_window is not None
    if not burst_present:
        verdicts.append(Verdict("burst removed", "N/A", "scenario has no burst"))
    else:
        rp = p_pk["emd_enhanced"] / p_pk["baseline"] if p_pk["baseline"] else float("inf")
        rq = q_pk["emd_enhanced"] / q_pk["baseline"] if q_pk["baseline"] else float("inf")
        verdicts.append(
            Verdict(
                "burst removed",
                _status(rp <= PKPK_RATIO_MAX and rq <= PKPK_RATIO_MAX),
                f"enhanced/baseline pk-pk p {rp:.3f}, q {rq:.3f}",
            )
        )

    return ComparisonReport(
        scenario_fingerprint=baseline.scenario_fingerprint,
        baseline=rows["baseline"],
        enhanced=rows["emd_enhanced"],
        window=window,
        p_pkpk=p_pk,
        q_pkpk=q_pk,
        pf_variation=pf_var,
        load_thd=load_thd,
        verdicts=verdicts,
    )


def metrics_to_csv(path, rows: list[CycleMetrics]) -> None:
    cols = [
        ("cycle", np.array([c.cycle_index for c in rows])),
        ("settled", np.array([c.settled for c in rows])),
        ("p_mean", np.array([c.p_mean for c in rows])),
        ("q_mean", np.array([c.q_mean for c in rows])),
        ("apparent", np.array([c.apparent for c in rows])),
        ("q_ratio", np.array([c.q_ratio for c in rows])),
        ("power_factor", np.array([c.power_factor for c in rows])),
        ("thd_r", np.array([c.thd_per_phase[0] for c in rows])),
        ("thd_s", np.array([c.thd_per_phase[1] for c in rows])),
        ("thd_t", np.array([c.thd_per_phase[2] for c in rows])),
        ("p_pkpk", np.array([c.p_peak_to_peak for c in rows])),
    ]
    write_csv(path, np.array([c.t_start for c in rows]), cols)
