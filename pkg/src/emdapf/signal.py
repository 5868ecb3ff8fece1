"""Uniformly sampled time series and the elementwise algebra shared by every module."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class AlignmentError(ValueError):
    """Two series do not share a sampling grid."""


class RangeError(ValueError):
    """A requested time window falls outside a series."""


class WindowError(ValueError):
    """A window does not span an integer number of periods."""


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Real-valued signal sampled every ``dt`` seconds starting at ``t0``.

    The sample array is copied and made read-only on construction so a
    series can be shared freely between threads.
    """

    samples: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float, copy=True).ravel()
        if arr.size == 0:
            raise ValueError("TimeSeries needs at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("TimeSeries samples must be finite")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def t_end(self) -> float:
        """Time just past the last sample (``t0 + n*dt``)."""
        return self.t0 + len(self) * self.dt

    @property
    def duration(self) -> float:
        return len(self) * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    def with_samples(self, samples) -> "TimeSeries":
        """New series on the same grid."""
        return TimeSeries(samples, self.dt, self.t0)

    def same_grid(self, other: "TimeSeries") -> bool:
        return len(self) == len(other) and self.dt == other.dt and self.t0 == other.t0

    def peak(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def __neg__(self) -> "TimeSeries":
        return self.with_samples(-self.samples)

    def __add__(self, other: "TimeSeries") -> "TimeSeries":
        return add(self, other)

    def __sub__(self, other: "TimeSeries") -> "TimeSeries":
        return sub(self, other)

    def __mul__(self, k: float) -> "TimeSeries":
        return self.with_samples(self.samples * k)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class ThreePhaseSignal:
    """Phase quantities R, S, T on one shared grid."""

    r: TimeSeries
    s: TimeSeries
    t: TimeSeries

    def __post_init__(self):
        if not (self.r.same_grid(self.s) and self.r.same_grid(self.t)):
            raise AlignmentError("phases of a ThreePhaseSignal must share one grid")

    @classmethod
    def from_array(cls, arr: np.ndarray, dt: float, t0: float = 0.0) -> "ThreePhaseSignal":
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != 3:
            raise ValueError(f"expected shape (3, n), got {arr.shape}")
        return cls(*(TimeSeries(row, dt, t0) for row in arr))

    @property
    def phases(self) -> tuple[TimeSeries, TimeSeries, TimeSeries]:
        return (self.r, self.s, self.t)

    @property
    def dt(self) -> float:
        return self.r.dt

    @property
    def t0(self) -> float:
        return self.r.t0

    def __len__(self) -> int:
        return len(self.r)

    def times(self) -> np.ndarray:
        return self.r.times()

    def as_array(self) -> np.ndarray:
        """Stacked ``(3, n)`` copy of the phase samples."""
        return np.vstack([p.samples for p in self.phases])

    def total(self) -> TimeSeries:
        """Per-sample sum of the three phases (the neutral return)."""
        return self.r.with_samples(self.r.samples + self.s.samples + self.t.samples)

    def same_grid(self, other: "ThreePhaseSignal") -> bool:
        return self.r.same_grid(other.r)

    def map(self, fn) -> "ThreePhaseSignal":
        return ThreePhaseSignal(*(fn(p) for p in self.phases))

    def __add__(self, other: "ThreePhaseSignal") -> "ThreePhaseSignal":
        return ThreePhaseSignal(*(add(a, b) for a, b in zip(self.phases, other.phases)))

    def __sub__(self, other: "ThreePhaseSignal") -> "ThreePhaseSignal":
        return ThreePhaseSignal(*(sub(a, b) for a, b in zip(self.phases, other.phases)))

    def __neg__(self) -> "ThreePhaseSignal":
        return self.map(lambda p: -p)


def _check_grid(a: TimeSeries, b: TimeSeries) -> None:
    if not a.same_grid(b):
        raise AlignmentError(
            f"grid mismatch: (n={len(a)}, dt={a.dt}, t0={a.t0}) vs "
            f"(n={len(b)}, dt={b.dt}, t0={b.t0})"
        )


def add(a: TimeSeries, b: TimeSeries) -> TimeSeries:
    _check_grid(a, b)
    return a.with_samples(a.samples + b.samples)


def sub(a: TimeSeries, b: TimeSeries) -> TimeSeries:
    _check_grid(a, b)
    return a.with_samples(a.samples - b.samples)


def _index_at(a: TimeSeries, t: float) -> int:
    return int(round((t - a.t0) / a.dt))


def slice(a: TimeSeries, t_start: float, t_end: float) -> TimeSeries:  # noqa: A001
    """Sub-series covering ``[t_start, t_end)``.

    Window edges are snapped to the nearest sample boundary, so a window of
    width ``w`` always holds ``round(w / dt)`` samples.
    """
    tol = 1e-9 * a.dt
    if not (a.t0 - tol <= t_start < t_end <= a.t_end + tol):
        raise RangeError(
            f"window [{t_start}, {t_end}) outside series span [{a.t0}, {a.t_end})"
        )
    i0 = max(_index_at(a, t_start), 0)
    i1 = min(_index_at(a, t_end), len(a))
    if i1 <= i0:
        raise RangeError(f"window [{t_start}, {t_end}) holds no samples")
    return TimeSeries(a.samples[i0:i1], a.dt, a.t0 + i0 * a.dt)


def rms(a: TimeSeries) -> float:
    return float(np.sqrt(np.mean(np.square(a.samples))))


def period_samples(dt: float, f: float) -> int:
    """Number of samples in one period of ``f``; raises if not near-integer."""
    n = 1.0 / (f * dt)
    k = int(round(n))
    if k < 2 or abs(n - k) > 0.5:
        raise WindowError(f"period of {f} Hz is not resolvable at dt={dt}")
    return k


def dft_bin(a: TimeSeries, f: float) -> complex:
    """Complex amplitude of the component of ``a`` at frequency ``f``.

    Computed by direct correlation with cos/sin at ``f``; ``abs()`` of the
    result is the sinusoid's peak amplitude and ``cmath.phase()`` its phase
    relative to a cosine referenced at the series start. The window must hold
    an integer number of periods of ``f`` to within half a sample.
    """
    if f <= 0:
        raise WindowError("dft_bin needs a positive frequency")
    n = len(a)
    cycles = n * a.dt * f
    k = round(cycles)
    if k < 1 or abs(cycles - k) * (1.0 / (f * a.dt)) > 0.5:
        raise WindowError(
            f"window of {n} samples spans {cycles:.6f} periods of {f} Hz (need an integer)"
        )
    phase = 2.0 * np.pi * f * a.dt * np.arange(n)
    x = a.samples
    re = 2.0 / n * np.dot(x, np.cos(phase))
    im = -2.0 / n * np.dot(x, np.sin(phase))
    return complex(re, im)


def write_csv(path: str | Path, times: np.ndarray, columns: Sequence[tuple[str, np.ndarray]]) -> None:
    """Write ``time,<col>...`` rows with enough digits to round-trip doubles."""
    header = ["time"] + [name for name, _ in columns]
    data = [np.asarray(col) for _, col in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k, tk in enumerate(times):
            w.writerow([_fmt(tk)] + [_fmt(col[k]) for col in data])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a ``time,...`` CSV into its header and a float array (rows x cols)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    header = [c.strip() for c in rows[0]]
    body: Iterable[list[str]] = rows[1:]
    try:
        data = np.array([[float(c) for c in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric value ({exc})") from None
    if data.size == 0:
        raise ValueError(f"{path}: no data rows")
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    return header, data


def series_from_columns(times: np.ndarray, values: np.ndarray, rtol: float = 1e-9) -> TimeSeries:
    """Build a series from explicit sample times, checking the grid is uniform."""
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise AlignmentError("need at least two samples to infer dt")
    dt = (times[-1] - times[0]) / (times.size - 1)
    if not dt > 0:
        raise AlignmentError("sample times must increase")
    ideal = times[0] + dt * np.arange(times.size)
    scale = max(dt, float(np.max(np.abs(times))))
    if np.max(np.abs(times - ideal)) > rtol * scale:
        raise AlignmentError("sample times are not uniformly spaced")
    return TimeSeries(values, dt, times[0])
