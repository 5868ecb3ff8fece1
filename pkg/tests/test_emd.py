import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emdapf.emd import (
    DegenerateInputError,
    EmdConfig,
    ResidueReached,
    UndefinedPhaseError,
    UndefinedSDError,
    analytic_signal,
    decompose,
    envelope,
    extract_imf,
    find_extrema,
    imf_criteria,
    oscillating_region,
    reconstruct,
    sd,
    sift_once,
    to_csv,
)
from emdapf.signal import TimeSeries, read_csv

DT = 1e-5
T = np.arange(20000) * DT  # 0.2 s at 100 kHz


def sine(f, amp=1.0, t=T, phase=0.0):
    return amp * np.sin(2 * np.pi * f * t + phase)


def burst_signal():
    gate = (T >= 0.088) & (T < 0.094)
    return TimeSeries(sine(50, 10) + np.where(gate, sine(1000, 2, T - 0.088), 0.0), DT)


# ---------------------------------------------------------------- extrema


def test_ramp_has_no_extrema():
    e = find_extrema(TimeSeries(np.linspace(0, 1, 50), 1.0))
    assert len(e) == 0


def test_two_cycles_interleave():
    t = np.linspace(0, 2, 2001)
    e = find_extrema(TimeSeries(np.sin(2 * np.pi * t), 1e-3))
    assert e.max_idx.size == 2 and e.min_idx.size == 2
    order = np.argsort(np.concatenate([e.max_idx, e.min_idx]))
    kinds = np.array([1, 1, 0, 0])[order]
    assert kinds.tolist() in ([1, 0, 1, 0], [0, 1, 0, 1])


def test_extrema_beat_neighbours():
    rng = np.random.default_rng(5)
    x = np.convolve(rng.normal(size=600), np.hanning(25), mode="same")
    e = find_extrema(TimeSeries(x, 1.0))
    for i in e.max_idx:
        assert x[i] > x[i - 1] and x[i] > x[i + 1]
    for i in e.min_idx:
        assert x[i] < x[i - 1] and x[i] < x[i + 1]
    # every strict neighbour-scan extremum is reported
    scan = [i for i in range(1, x.size - 1) if x[i] > x[i - 1] and x[i] > x[i + 1]]
    assert e.max_idx.tolist() == scan


def test_short_input_is_degenerate():
    with pytest.raises(DegenerateInputError):
        find_extrema(TimeSeries([1.0, 2.0], 1.0))
    with pytest.raises(DegenerateInputError):
        decompose(TimeSeries([1.0, 2.0], 1.0))


# ---------------------------------------------------------------- envelope


def test_constant_knots_give_constant_envelope():
    x = TimeSeries(np.full(100, 2.5), 1.0)
    env = envelope(x, np.array([10, 40, 70]))
    np.testing.assert_allclose(env.samples, 2.5, atol=1e-12)


def test_two_knots_give_a_line():
    x = TimeSeries(np.linspace(0, 9, 100) ** 2, 1.0)
    idx = np.array([20, 60])
    env = envelope(x, idx, boundary="none")
    slope = (x.samples[60] - x.samples[20]) / 40
    line = x.samples[20] + slope * (np.arange(100) - 20)
    np.testing.assert_allclose(env.samples, line, rtol=1e-10, atol=1e-10)


def test_envelope_needs_knots():
    x = TimeSeries(np.zeros(10), 1.0)
    with pytest.raises(ResidueReached):
        envelope(x, np.array([], dtype=int))


def test_upper_envelope_covers_sine():
    x = TimeSeries(sine(50, phase=0.3), DT)
    env = envelope(x, find_extrema(x).max_idx)
    interior = slice(1000, -1000)
    above = env.samples[interior] >= x.samples[interior] - 1e-3
    assert above.mean() >= 0.99


# ---------------------------------------------------------------- sifting


def test_symmetric_sine_sift_is_identity():
    x = TimeSeries(sine(50), DT)
    d = sift_once(x)
    assert np.max(np.abs(d.envelope_mean.samples[2000:-2000])) < 1e-3
    np.testing.assert_allclose(d.sift_component.samples + d.envelope_mean.samples, x.samples, rtol=0, atol=1e-15)


@pytest.mark.parametrize("c", [-3.0, 0.7, 12.0])
def test_offset_is_the_envelope_mean(c):
    x = TimeSeries(sine(50) + c, DT)
    d = sift_once(x)
    np.testing.assert_allclose(d.envelope_mean.samples[2000:-2000], c, atol=1e-3)


def test_sift_needs_two_of_each():
    x = TimeSeries(sine(5), DT)  # one max, one min in 0.2 s
    with pytest.raises(ResidueReached):
        sift_once(x)


# ---------------------------------------------------------------- sd


def test_sd_examples():
    h = TimeSeries(sine(50) + 2.0, DT)
    n = len(h)
    assert sd(h, h) == 0.0
    assert sd(h, h * 0.0) == pytest.approx(n)
    assert sd(h, h * 0.9) == pytest.approx(0.01 * n, rel=1e-12)


def test_sd_skips_near_zero_samples():
    prev = TimeSeries(np.array([1.0, 0.0, 1e-14, 2.0]), 1.0)
    cur = TimeSeries(np.array([0.0, 5.0, 5.0, 0.0]), 1.0)
    assert sd(prev, cur) == pytest.approx(2.0)


def test_sd_undefined_for_zero_iterate():
    z = TimeSeries(np.zeros(4), 1.0)
    with pytest.raises(UndefinedSDError):
        sd(z, z)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    k=st.floats(1e-6, 1e6).flatmap(lambda v: st.sampled_from([v, -v])),
)
def test_sd_scale_invariant(seed, k):
    rng = np.random.default_rng(seed)
    a = TimeSeries(rng.normal(size=64), 1.0)
    b = TimeSeries(rng.normal(size=64), 1.0)
    assert sd(a, a) == 0.0
    assert sd(a * k, b * k) == pytest.approx(sd(a, b), rel=1e-9)


# ---------------------------------------------------------------- extract / decompose


def test_imf_criteria_rules():
    assert imf_criteria(sine(50))
    assert not imf_criteria(sine(50) + 0.5)  # mean off
    assert not imf_criteria(np.zeros(10))
    riding = sine(50) + 0.3 * sine(1000) + 1.1  # minima above zero
    assert not imf_criteria(riding - riding.mean())


def test_extract_fast_tone_from_fundamental():
    fast = sine(1000, 1.0)
    x = TimeSeries(sine(50, 5.0) + fast, DT)
    imf, diag = extract_imf(x, EmdConfig())
    c = imf.series.samples[2000:-2000]
    ref = fast[2000:-2000]
    cos = c @ ref / np.linalg.norm(c) / np.linalg.norm(ref)
    assert cos >= 0.95
    assert diag.iterations <= EmdConfig().max_sift_iterations


def test_pure_sine_is_already_an_imf():
    x = TimeSeries(sine(50, 3.0), DT)
    imf, diag = extract_imf(x, EmdConfig())
    assert diag.iterations <= 2
    assert imf.converged
    np.testing.assert_allclose(imf.series.samples, x.samples, atol=0.05 * 3.0)


@pytest.mark.parametrize("cap", [1, 3])
def test_iteration_cap_is_respected(cap):
    rng = np.random.default_rng(0)
    x = TimeSeries(np.cumsum(rng.normal(size=3000)), 1.0)
    _, diag = extract_imf(x, EmdConfig(max_sift_iterations=cap))
    assert diag.iterations <= cap


def test_constant_has_no_imfs():
    x = TimeSeries(np.full(500, 4.0), 1.0)
    d = decompose(x)
    assert len(d) == 0
    np.testing.assert_array_equal(d.residue.samples, x.samples)
    np.testing.assert_array_equal(reconstruct(d).samples, x.samples)


def test_burst_leaves_clean_fundamental():
    x = burst_signal()
    d = decompose(x, EmdConfig.fundamental_locked(50.0))
    assert len(d) >= 1
    r = d.residue.samples
    zc = np.count_nonzero(np.diff(np.sign(r[r != 0])))
    assert abs(zc / x.duration - 100.0) <= 10.0
    assert np.max(np.abs(reconstruct(d).samples - x.samples)) <= 1e-9 * x.peak()
    # the burst went to the IMFs and nothing outside its window did
    imf_sum = d.imf_sum()
    outside = (T < 0.085) | (T > 0.097)
    assert np.max(np.abs(imf_sum[outside])) < 1e-12
    assert np.max(np.abs(imf_sum[(T > 0.088) & (T < 0.094)])) > 1.0


def test_monotone_mode_strips_everything():
    x = TimeSeries(sine(50, 2.0) + sine(400, 1.0) + 3.0 * T, DT)
    d = decompose(x)
    assert len(d) >= 2
    e = find_extrema(d.residue)
    assert e.max_idx.size < 2 or e.min_idx.size < 2 or len(d) == EmdConfig().max_imfs


def test_frequency_ordering():
    x = TimeSeries(sine(1500, 0.5) + sine(300, 1.0) + sine(40, 2.0), DT)
    d = decompose(x)
    rates = [imf.zero_crossing_count() for imf in d.imfs]
    assert len(rates) >= 3
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_max_imfs_is_a_hard_cap():
    x = TimeSeries(sine(1500, 0.5) + sine(300, 1.0) + sine(40, 2.0), DT)
    d = decompose(x, EmdConfig(max_imfs=1))
    assert len(d) == 1
    assert np.max(np.abs(reconstruct(d).samples - x.samples)) <= 1e-9 * x.peak()
    assert len(decompose(x, EmdConfig(max_imfs=0))) == 0


def test_decompose_is_deterministic():
    x = burst_signal()
    cfg = EmdConfig.fundamental_locked(50.0)
    a, b = decompose(x, cfg), decompose(x, cfg)
    assert len(a) == len(b)
    assert a.source_fingerprint == b.source_fingerprint
    for p, q in zip(a.imfs, b.imfs):
        assert p.series.samples.tobytes() == q.series.samples.tobytes()
    assert a.residue.samples.tobytes() == b.residue.samples.tobytes()


def test_config_validation():
    with pytest.raises(ValueError):
        EmdConfig(stop_mode="fundamental_locked")
    with pytest.raises(ValueError):
        EmdConfig(max_sift_iterations=0)
    with pytest.raises(ValueError):
        EmdConfig(stop_mode="sometimes")
    assert EmdConfig.fundamental_locked(60.0).intermittency_span() == pytest.approx(1 / 240)
    assert EmdConfig().intermittency_span() is None


def test_oscillating_region_brackets_the_burst():
    x = burst_signal()
    span = int(round(1 / (4 * 50) / DT))
    region = oscillating_region(find_extrema(x), len(x), span)
    on = np.flatnonzero(region)
    assert on.size > 0
    assert T[on[0]] >= 0.085 and T[on[-1]] <= 0.097
    assert region[(T > 0.0885) & (T < 0.0935)].all()


# ---------------------------------------------------------------- analytic signal


def test_cosine_analytic_signal():
    a = analytic_signal(TimeSeries(3.0 * np.cos(2 * np.pi * 50 * T), DT))
    mid = slice(1000, -1000)
    np.testing.assert_allclose(a.amplitude.samples[mid], 3.0, rtol=0.02)
    np.testing.assert_allclose(a.inst_frequency.samples[mid], 2 * np.pi * 50, rtol=0.02)
    assert np.all(np.diff(a.phase.samples[mid]) > 0)


def test_amplitude_dominates_input():
    rng = np.random.default_rng(9)
    x = rng.normal(size=777)
    a = analytic_signal(TimeSeries(x, 1.0))
    assert np.all(a.amplitude.samples >= np.abs(x) - 1e-12)


def test_constant_has_no_phase():
    with pytest.raises(UndefinedPhaseError):
        analytic_signal(TimeSeries(np.ones(10), 1.0))


def test_decomposition_csv(tmp_path):
    d = decompose(burst_signal(), EmdConfig.fundamental_locked(50.0))
    p = tmp_path / "d.csv"
    to_csv(d, p)
    header, data = read_csv(p)
    assert header == ["time"] + [f"imf{k}" for k in range(1, len(d) + 1)] + ["residue"]
    np.testing.assert_allclose(data[:, 1:].sum(axis=1), burst_signal().samples, atol=1e-9)
