"""Empirical Mode Decomposition.

Sifting subtracts the mean of cubic-spline envelopes through the local maxima
and minima until the remainder is an intrinsic mode function (IMF); each IMF
is removed from the running residue until a stop rule fires. The residue plus
all IMFs reconstructs the input exactly up to floating-point rounding.

Two stop rules are supported:

``monotone``
    classic EMD: stop once the residue has fewer than two maxima or minima.
``fundamental_locked``
    stop as soon as the residue looks like a clean sinusoid at ``f0`` (its
    zero-crossing and extremum rates are both within 10 % of ``2*f0``). The
    residue is then the fundamental waveform and every IMF is disturbance.
    In this mode sifting also applies an intermittency rule: only stretches
    whose extrema lie within ``intermittency`` seconds of a neighbour carry
    the current mode. Each such stretch is sifted as a record of its own and
    the IMF is zero elsewhere, so an intermittent burst is not mode-mixed
    with the fundamental.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.interpolate import CubicSpline

from . import _core
from .signal import TimeSeries

logger = logging.getLogger(__name__)

SD_BAND = (0.2, 0.3)
ZERO_MEAN_TOL = 0.01
RATE_TOL = 0.10


class EmdError(ValueError):
    """Base class for decomposition failures."""


class DegenerateInputError(EmdError):
    """Input too short to hold an extremum."""


class ResidueReached(EmdError):
    """Signal has too few extrema to sift: it is already a residue."""


class UndefinedSDError(EmdError):
    """Every sample of the previous iterate is (numerically) zero."""


class UndefinedPhaseError(EmdError):
    """Analytic phase is undefined for a constant input."""


@dataclass(frozen=True)
class EmdConfig:
    """Sifting and stopping parameters.

    ``sd_threshold`` must lie in [0.2, 0.3]. ``intermittency`` is a time
    span in seconds; ``None`` selects ``1/(4*f0)`` under
    ``fundamental_locked`` and disables the rule under ``monotone``.
    """

    sd_threshold: float = 0.25
    max_sift_iterations: int = 50
    max_imfs: int = 10
    stop_mode: Literal["monotone", "fundamental_locked"] = "monotone"
    f0: float | None = None
    boundary: Literal["mirror"] = "mirror"
    intermittency: float | None = None

    def __post_init__(self):
        lo, hi = SD_BAND
        if not (lo <= self.sd_threshold <= hi):
            raise ValueError(f"sd_threshold must lie in [{lo}, {hi}], got {self.sd_threshold}")
        if self.max_sift_iterations < 1:
            raise ValueError("max_sift_iterations must be >= 1")
        if self.max_imfs < 0:
            raise ValueError("max_imfs must be >= 0")
        if self.stop_mode not in ("monotone", "fundamental_locked"):
            raise ValueError(f"unknown stop_mode {self.stop_mode!r}")
        if self.stop_mode == "fundamental_locked" and not (self.f0 and self.f0 > 0):
            raise ValueError("fundamental_locked stop mode needs a positive f0")
        if self.boundary != "mirror":
            raise ValueError(f"unsupported boundary {self.boundary!r}")
        if self.intermittency is not None and self.intermittency <= 0:
            raise ValueError("intermittency must be positive")

    @classmethod
    def fundamental_locked(cls, f0: float, **kwargs) -> "EmdConfig":
        return cls(stop_mode="fundamental_locked", f0=f0, **kwargs)

    def intermittency_span(self) -> float | None:
        if self.intermittency is not None:
            return self.intermittency
        if self.stop_mode == "fundamental_locked":
            return 1.0 / (4.0 * self.f0)
        return None


@dataclass(frozen=True, eq=False)
class ExtremaSet:
    """Interior local maxima and minima as index/value arrays."""

    max_idx: np.ndarray
    max_val: np.ndarray
    min_idx: np.ndarray
    min_val: np.ndarray

    @property
    def maxima(self) -> list[tuple[int, float]]:
        return list(zip(self.max_idx.tolist(), self.max_val.tolist()))

    @property
    def minima(self) -> list[tuple[int, float]]:
        return list(zip(self.min_idx.tolist(), self.min_val.tolist()))

    def __len__(self) -> int:
        return self.max_idx.size + self.min_idx.size

    def merged_indices(self) -> np.ndarray:
        return np.sort(np.concatenate([self.max_idx, self.min_idx]))


@dataclass(frozen=True, eq=False)
class SiftDiagnostics:
    envelope_mean: TimeSeries
    sift_component: TimeSeries
    sd_value: float
    iterations: int
    converged: bool = True


@dataclass(frozen=True, eq=False)
class Imf:
    series: TimeSeries
    index: int
    converged: bool = True

    def extrema_count(self) -> int:
        return len(find_extrema(self.series))

    def zero_crossing_count(self) -> int:
        return _core.zero_crossings(self.series.samples)

    def is_valid(self) -> bool:
        return imf_criteria(self.series.samples)


@dataclass(frozen=True, eq=False)
class Decomposition:
    imfs: list[Imf]
    residue: TimeSeries
    source_fingerprint: str

    def __len__(self) -> int:
        return len(self.imfs)

    def imf_sum(self) -> np.ndarray:
        total = np.zeros(len(self.residue))
        for imf in self.imfs:
            total = total + imf.series.samples
        return total


@dataclass(frozen=True, eq=False)
class AnalyticSignal:
    amplitude: TimeSeries
    phase: TimeSeries
    inst_frequency: TimeSeries


def fingerprint(x: TimeSeries) -> str:
    h = hashlib.sha256()
    h.update(np.asarray([x.dt, x.t0], dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(x.samples).tobytes())
    return h.hexdigest()


def find_extrema(x: TimeSeries) -> ExtremaSet:
    """Interior local maxima/minima by three-point comparison.

    A flat plateau counts once, at its midpoint sample.
    """
    if len(x) < 3:
        raise DegenerateInputError(f"need at least 3 samples, got {len(x)}")
    imax, imin = _core.local_extrema(x.samples)
    s = x.samples
    return ExtremaSet(imax, s[imax], imin, s[imin])


def _mirror_knots(idx: np.ndarray, val: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # reflect the two nearest extrema across each endpoint sample
    last = n - 1
    head = slice(None, 2)
    left_i = -idx[head][::-1]
    left_v = val[head][::-1]
    right_i = 2 * last - idx[-2:][::-1]
    right_v = val[-2:][::-1]
    keep_l = left_i < idx[0]
    keep_r = right_i > idx[-1]
    ki = np.concatenate([left_i[keep_l], idx, right_i[keep_r]])
    kv = np.concatenate([left_v[keep_l], val, right_v[keep_r]])
    return ki.astype(float), kv


def envelope(
    x: TimeSeries,
    idx: np.ndarray,
    boundary: Literal["mirror", "none"] = "mirror",
) -> TimeSeries:
    """Natural cubic spline through ``x`` at the given extremum indices.

    With ``boundary="mirror"`` the two knots nearest each end are reflected
    across the endpoint before fitting; ``"none"`` fits the knots alone,
    extrapolating linearly past them.
    """
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        raise ResidueReached("no extrema to build an envelope from")
    return x.with_samples(_spline(idx, x.samples[idx], len(x), boundary))


def _spline(idx: np.ndarray, val: np.ndarray, n: int, boundary: str) -> np.ndarray:
    if boundary == "mirror":
        ki, kv = _mirror_knots(idx, val, n)
    elif boundary == "none":
        ki, kv = idx.astype(float), val
    else:
        raise ValueError(f"unknown boundary {boundary!r}")
    if ki.size < 2:
        raise ResidueReached("fewer than two envelope knots")
    spline = CubicSpline(ki, kv, bc_type="natural", extrapolate=True)
    return spline(np.arange(n, dtype=float))


def oscillating_region(ext: ExtremaSet, n: int, span_samples: int) -> np.ndarray:
    """Samples that belong to an oscillation faster than ``span_samples``.

    An extremum is *fast* when a neighbouring extremum lies within
    ``span_samples``. Each run of consecutive fast extrema marks a region
    from its first to its last extremum, padded by half the local extremum
    spacing (about a quarter period) on either side, or out to the record
    edge when the run starts or ends within ``span_samples`` of it. Run-edge
    extrema spaced more than twice the run's median gap from their inner
    neighbour are dropped from the run.
    """
    pos = ext.merged_indices()
    region = np.zeros(n, dtype=bool)
    m = pos.size
    if m < 2:
        return region
    gaps = np.diff(pos)
    big = n + 1
    left = np.concatenate([[big], gaps])
    right = np.concatenate([gaps, [big]])
    fast = np.minimum(left, right) <= span_samples
    j = 0
    while j < m:
        if not fast[j]:
            j += 1
            continue
        k = j
        while k + 1 < m and fast[k + 1]:
            k += 1
        run_end = k
        if k > j:
            # a slow extremum that merely sits close to the run's edge
            typical = 2.0 * float(np.median(gaps[j:k]))
            while k > j and gaps[j] > typical:
                j += 1
            while k > j and gaps[k - 1] > typical:
                k -= 1
        if pos[j] <= span_samples:
            lo = 0
        else:
            pad = (gaps[j] if k > j else min(left[j], right[j])) // 2
            lo = max(pos[j] - pad, 0)
        if n - 1 - pos[k] <= span_samples:
            hi = n - 1
        else:
            pad = (gaps[k - 1] if k > j else min(left[k], right[k])) // 2
            hi = min(pos[k] + pad, n - 1)
        region[lo : hi + 1] = True
        j = run_end + 1
    return region


def _segments(region: np.ndarray) -> list[tuple[int, int]]:
    edges = np.flatnonzero(np.diff(np.concatenate([[0], region.astype(np.int8), [0]])))
    return list(zip(edges[::2].tolist(), edges[1::2].tolist()))


def sift_once(x: TimeSeries, region: np.ndarray | None = None) -> SiftDiagnostics:
    """One sifting step: subtract the mean of the upper and lower envelopes.

    With a ``region`` mask, each contiguous run of the mask is sifted as a
    record of its own (envelopes built from its extrema, mirrored at its
    edges) and the sift component is zero outside the mask.
    """
    ext = find_extrema(x)
    if ext.max_idx.size < 2 or ext.min_idx.size < 2:
        raise ResidueReached(
            f"{ext.max_idx.size} maxima / {ext.min_idx.size} minima: nothing left to sift"
        )
    if region is None:
        upper = envelope(x, ext.max_idx).samples
        lower = envelope(x, ext.min_idx).samples
        mean = 0.5 * (upper + lower)
    else:
        mean = x.samples.copy()
        for lo, hi in _segments(region):
            seg = x.samples[lo:hi]
            imax, imin = _core.local_extrema(seg)
            if imax.size < 2 or imin.size < 2:
                continue
            up = _spline(imax, seg[imax], seg.size, "mirror")
            dn = _spline(imin, seg[imin], seg.size, "mirror")
            mean[lo:hi] = 0.5 * (up + dn)
    h = x.samples - mean
    sd_val = sd(x, x.with_samples(h)) if np.any(h != x.samples) else 0.0
    return SiftDiagnostics(x.with_samples(mean), x.with_samples(h), sd_val, 1)


def sift_region(x: TimeSeries, cfg: EmdConfig) -> np.ndarray | None:
    """Mask of samples carrying fast oscillation, or ``None`` for the whole record."""
    span = cfg.intermittency_span()
    if span is None:
        return None
    region = oscillating_region(find_extrema(x), len(x), int(round(span / x.dt)))
    if region.all():
        return None
    return region


def sd(h_prev: TimeSeries, h_cur: TimeSeries) -> float:
    """Sum over samples of ``(h_prev - h_cur)**2 / h_prev**2``.

    Samples where ``|h_prev|`` is below ``1e-12`` of its peak are left out.
    """
    if not h_prev.same_grid(h_cur):
        raise ValueError("sd needs iterates on the same grid")
    peak = h_prev.peak()
    if peak == 0.0:
        raise UndefinedSDError("previous iterate is identically zero")
    total, used = _core.sd_sum(h_prev.samples, h_cur.samples, 1e-12 * peak)
    if used == 0:
        raise UndefinedSDError("no sample of the previous iterate is above the guard")
    return total


def imf_criteria(h: np.ndarray) -> bool:
    """IMF acceptance: zero mean, extrema/zero-crossing balance, sign-consistent extrema."""
    peak = float(np.max(np.abs(h)))
    if peak == 0.0:
        return False
    if abs(float(np.mean(h))) > ZERO_MEAN_TOL * peak:
        return False
    imax, imin = _core.local_extrema(h)
    if abs(imax.size + imin.size - _core.zero_crossings(h)) > 1:
        return False
    if np.any(h[imax] < 0) or np.any(h[imin] > 0):
        return False
    return True


def extract_imf(x: TimeSeries, cfg: EmdConfig | None = None) -> tuple[Imf, SiftDiagnostics]:
    """Sift ``x`` until the SD and IMF criteria both hold.

    Stops early at ``max_sift_iterations`` and accepts the current iterate
    with ``converged=False``. Raises ``ResidueReached`` when ``x`` cannot be
    sifted at all. Under an intermittency rule the oscillating region is
    fixed from ``x`` and held for every sift of this IMF.
    """
    cfg = cfg or EmdConfig()
    region = sift_region(x, cfg)
    h = x
    diag = None
    converged = False
    for it in range(1, cfg.max_sift_iterations + 1):
        try:
            step = sift_once(h, region)
        except ResidueReached:
            if diag is None:
                raise
            break
        diag = step
        h = step.sift_component
        if step.sd_value < cfg.sd_threshold and imf_criteria(h.samples):
            converged = True
            break
    if not converged:
        logger.debug("sifting stopped after %d iterations without meeting the criteria", it)
    diag = SiftDiagnostics(diag.envelope_mean, h, diag.sd_value, it, converged)
    return Imf(h, 1, converged), diag


def _rate_matches(count: int, duration: float, f0: float) -> bool:
    target = 2.0 * f0
    return abs(count / duration - target) <= RATE_TOL * target


def is_clean_fundamental(r: TimeSeries, f0: float) -> bool:
    """True when ``r`` crosses zero and turns at the rate of a sinusoid at ``f0``."""
    duration = r.duration
    zc = _core.zero_crossings(r.samples)
    imax, imin = _core.local_extrema(r.samples)
    return _rate_matches(zc, duration, f0) and _rate_matches(imax.size + imin.size, duration, f0)


def decompose(x: TimeSeries, cfg: EmdConfig | None = None) -> Decomposition:
    """Split ``x`` into IMFs plus a residue according to ``cfg.stop_mode``."""
    cfg = cfg or EmdConfig()
    if len(x) < 3:
        raise DegenerateInputError(f"need at least 3 samples, got {len(x)}")
    residue = x.samples.copy()
    imfs: list[Imf] = []
    while len(imfs) < cfg.max_imfs:
        r = x.with_samples(residue)
        if cfg.stop_mode == "fundamental_locked" and is_clean_fundamental(r, cfg.f0):
            break
        ext = find_extrema(r)
        if ext.max_idx.size < 2 or ext.min_idx.size < 2:
            break
        try:
            imf, _ = extract_imf(r, cfg)
        except ResidueReached:
            break
        c = imf.series.samples
        if not np.any(c):
            break
        imfs.append(Imf(imf.series, len(imfs) + 1, imf.converged))
        residue = residue - c
    return Decomposition(imfs, x.with_samples(residue), fingerprint(x))


def reconstruct(d: Decomposition) -> TimeSeries:
    return d.residue.with_samples(d.imf_sum() + d.residue.samples)


def hilbert_transform(x: np.ndarray) -> np.ndarray:
    """Discrete analytic signal via the one-sided spectrum."""
    n = x.size
    spec = np.fft.fft(x)
    w = np.zeros(n)
    w[0] = 1.0
    if n % 2 == 0:
        w[n // 2] = 1.0
        w[1 : n // 2] = 2.0
    else:
        w[1 : (n + 1) // 2] = 2.0
    return np.fft.ifft(spec * w)


def analytic_signal(c: Imf | TimeSeries, dt: float | None = None) -> AnalyticSignal:
    """Amplitude, unwrapped phase and instantaneous frequency of an IMF."""
    series = c.series if isinstance(c, Imf) else c
    dt = series.dt if dt is None else dt
    x = series.samples
    if np.ptp(x) == 0.0:
        raise UndefinedPhaseError("constant input has no defined phase")
    z = hilbert_transform(x)
    amp = np.abs(z)
    phase = np.unwrap(np.angle(z))
    omega = np.gradient(phase, dt)
    return AnalyticSignal(
        TimeSeries(amp, dt, series.t0),
        TimeSeries(phase, dt, series.t0),
        TimeSeries(omega, dt, series.t0),
    )


def to_csv(d: Decomposition, path) -> None:
    from .signal import write_csv

    cols = [(f"imf{imf.index}", imf.series.samples) for imf in d.imfs]
    cols.append(("residue", d.residue.samples))
    write_csv(path, d.residue.times(), cols)
