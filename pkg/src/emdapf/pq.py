"""Instantaneous power theory for three-phase four-wire systems.

Quantities are mapped to the alpha-beta-zero frame with the power-invariant
Clarke matrix, so real power is simply ``v . i`` with no scaling factor.
Every function accepts scalars or equal-shaped arrays; arrays are processed
elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import RangeError, ThreePhaseSignal, TimeSeries, period_samples, write_csv

_S3 = np.sqrt(3.0)

#: Power-invariant (orthonormal) Clarke matrix, rows alpha, beta, zero.
CLARKE = np.sqrt(2.0 / 3.0) * np.array(
    [
        [1.0, -0.5, -0.5],
        [0.0, _S3 / 2.0, -_S3 / 2.0],
        [1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)],
    ]
)


class VoltageCollapseError(ArithmeticError):
    """The alpha-beta voltage norm is too small to solve for currents."""


@dataclass(frozen=True, eq=False)
class AlphaBeta0Sample:
    """A quantity in the alpha-beta-zero frame (scalars or arrays)."""

    alpha: np.ndarray | float
    beta: np.ndarray | float
    zero: np.ndarray | float

    def as_array(self) -> np.ndarray:
        return np.stack([np.asarray(self.alpha), np.asarray(self.beta), np.asarray(self.zero)])


@dataclass(frozen=True, eq=False)
class PowerTriple:
    """Instantaneous real power ``p``, imaginary power ``q`` and zero-sequence power ``p0``."""

    p: np.ndarray | float
    q: np.ndarray | float
    p0: np.ndarray | float


@dataclass(frozen=True)
class PqConfig:
    """Settings for the power-theory stage.

    ``min_voltage_norm`` is the absolute guard on ``sqrt(v_alpha**2 + v_beta**2)``;
    when ``None`` it is taken as ``1e-6`` times the largest norm present in
    the voltage being processed.
    """

    f0: float = 50.0
    min_voltage_norm: float | None = None

    def __post_init__(self):
        if not self.f0 > 0:
            raise ValueError(f"f0 must be positive, got {self.f0}")
        if self.min_voltage_norm is not None and self.min_voltage_norm < 0:
            raise ValueError("min_voltage_norm must be non-negative")

    @property
    def mean_window(self) -> float:
        return 1.0 / self.f0


def clarke(a, b, c) -> AlphaBeta0Sample:
    """Phase quantities to the alpha-beta-zero frame."""
    abc = np.stack(np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(c, float)))
    out = np.tensordot(CLARKE, abc, axes=1)
    if out.ndim == 1:
        return AlphaBeta0Sample(float(out[0]), float(out[1]), float(out[2]))
    return AlphaBeta0Sample(out[0], out[1], out[2])


def inverse_clarke(s: AlphaBeta0Sample):
    """Back to phase quantities; the matrix is orthonormal so this is its transpose."""
    abc = np.tensordot(CLARKE.T, s.as_array().astype(float), axes=1)
    if abc.ndim == 1:
        return float(abc[0]), float(abc[1]), float(abc[2])
    return abc[0], abc[1], abc[2]


def clarke_signal(x: ThreePhaseSignal) -> AlphaBeta0Sample:
    return clarke(x.r.samples, x.s.samples, x.t.samples)


def instantaneous_power(v: AlphaBeta0Sample, i: AlphaBeta0Sample) -> PowerTriple:
    p = v.alpha * i.alpha + v.beta * i.beta
    q = v.alpha * i.beta - v.beta * i.alpha
    p0 = v.zero * i.zero
    return PowerTriple(p, q, p0)


def oscillating_p(p_series: TimeSeries, cfg: PqConfig | None = None) -> tuple[TimeSeries, TimeSeries]:
    """Split ``p`` into its one-cycle moving average and the oscillating remainder.

    The average is centred; near either end the window is clipped to the
    record so it shrinks to a one-sided average.
    """
    cfg = cfg or PqConfig()
    n = len(p_series)
    w = period_samples(p_series.dt, cfg.f0)
    if w > n:
        raise RangeError(f"averaging window of {w} samples exceeds series length {n}")
    x = p_series.samples
    csum = np.concatenate([[0.0], np.cumsum(x)])
    k = np.arange(n)
    lo = np.clip(k - w // 2, 0, n)
    hi = np.clip(k - w // 2 + w, 0, n)
    p_bar = (csum[hi] - csum[lo]) / (hi - lo)
    return p_series.with_samples(p_bar), p_series.with_samples(x - p_bar)


def _voltage_guard(norm2: np.ndarray, cfg: PqConfig) -> None:
    norm = np.sqrt(norm2)
    eps = cfg.min_voltage_norm
    if eps is None:
        eps = 1e-6 * float(np.max(norm))
    if np.any(norm < eps) or np.any(norm2 == 0.0):
        bad = int(np.argmax((norm < eps) | (norm2 == 0.0))) if np.ndim(norm) else 0
        raise VoltageCollapseError(f"voltage norm below guard {eps:g} (first at sample {bad})")


def compensating_currents(
    v: AlphaBeta0Sample,
    p_c,
    q_c,
    i0_load,
    cfg: PqConfig | None = None,
) -> AlphaBeta0Sample:
    """Currents that make the filter deliver powers ``p_c`` and ``q_c``.

    Solves ``p = v_a i_a + v_b i_b``, ``q = v_a i_b - v_b i_a`` for the filter
    current and removes the load's zero-sequence current outright.
    """
    cfg = cfg or PqConfig()
    va = np.asarray(v.alpha, float)
    vb = np.asarray(v.beta, float)
    norm2 = va * va + vb * vb
    _voltage_guard(norm2, cfg)
    ia = (va * p_c - vb * q_c) / norm2
    ib = (vb * p_c + va * q_c) / norm2
    i0 = -np.asarray(i0_load, float)
    if np.ndim(ia) == 0:
        return AlphaBeta0Sample(float(ia), float(ib), float(i0))
    return AlphaBeta0Sample(ia, ib, np.broadcast_to(i0, np.shape(ia)).copy())


def compensation_targets(power: PowerTriple, p_tilde) -> tuple[np.ndarray, np.ndarray]:
    """``(p_c, q_c)``: the filter takes all oscillating, zero-sequence and imaginary power."""
    return -np.asarray(p_tilde) - np.asarray(power.p0), -np.asarray(power.q)


def power_of(v: ThreePhaseSignal, i: ThreePhaseSignal) -> PowerTriple:
    """Per-sample power triple of a voltage/current pair."""
    return instantaneous_power(clarke_signal(v), clarke_signal(i))


def power_to_csv(path, times: np.ndarray, power: PowerTriple) -> None:
    write_csv(path, times, [("p", power.p), ("q", power.q), ("p0", power.p0)])
