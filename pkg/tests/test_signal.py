import cmath

import numpy as np
import pytest

from emdapf.signal import (
    AlignmentError,
    RangeError,
    ThreePhaseSignal,
    TimeSeries,
    WindowError,
    add,
    dft_bin,
    period_samples,
    read_csv,
    rms,
    series_from_columns,
    slice as tslice,
    sub,
    write_csv,
)


def test_timeseries_is_immutable_copy():
    src = np.arange(5.0)
    x = TimeSeries(src, 0.1)
    src[0] = 99
    assert x.samples[0] == 0
    with pytest.raises(ValueError):
        x.samples[1] = 3.0


@pytest.mark.parametrize("bad", [dict(samples=[], dt=1.0), dict(samples=[1.0], dt=0.0), dict(samples=[np.nan], dt=1.0)])
def test_timeseries_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        TimeSeries(**bad)


def test_add_sub_need_shared_grid():
    a = TimeSeries([1.0, 2.0], 0.1)
    b = TimeSeries([3.0, 4.0], 0.1)
    np.testing.assert_array_equal(add(a, b).samples, [4.0, 6.0])
    np.testing.assert_array_equal(sub(a, b).samples, [-2.0, -2.0])
    np.testing.assert_array_equal((a * 2).samples, [2.0, 4.0])
    with pytest.raises(AlignmentError):
        add(a, TimeSeries([1.0, 2.0], 0.2))
    with pytest.raises(AlignmentError):
        add(a, TimeSeries([1.0, 2.0], 0.1, t0=1.0))


def test_slice_snaps_to_samples():
    x = TimeSeries(np.arange(100.0), 0.01)
    s = tslice(x, 0.2, 0.4)
    assert len(s) == 20
    assert s.samples[0] == 20.0
    assert s.t0 == pytest.approx(0.2)
    with pytest.raises(RangeError):
        tslice(x, 0.5, 1.5)
    with pytest.raises(RangeError):
        tslice(x, 0.4, 0.2)


def test_rms_of_sine():
    t = np.arange(1000) * 1e-4
    assert rms(TimeSeries(2 * np.sin(2 * np.pi * 50 * t), 1e-4)) == pytest.approx(np.sqrt(2), rel=1e-9)


def test_dft_bin_amplitude_and_phase():
    dt = 1e-5
    t = np.arange(2000) * dt
    x = TimeSeries(3.0 * np.cos(2 * np.pi * 100 * t + 0.4) + 1.0 * np.sin(2 * np.pi * 300 * t), dt)
    c = dft_bin(x, 100.0)
    assert abs(c) == pytest.approx(3.0, rel=1e-9)
    assert cmath.phase(c) == pytest.approx(0.4, abs=1e-9)
    assert abs(dft_bin(x, 300.0)) == pytest.approx(1.0, rel=1e-9)
    assert abs(dft_bin(x, 200.0)) < 1e-9


def test_dft_bin_needs_whole_periods():
    x = TimeSeries(np.zeros(1500), 1e-5)
    with pytest.raises(WindowError):
        dft_bin(x, 50.0)
    with pytest.raises(WindowError):
        dft_bin(x, -1.0)


def test_period_samples():
    assert period_samples(1e-5, 50.0) == 2000
    with pytest.raises(WindowError):
        period_samples(1e-2, 100.0)


def test_csv_round_trip(tmp_path):
    t = np.arange(4) * 0.1
    vals = np.array([0.1, 1 / 3, -2.5e-17, 7.0])
    flags = np.array([True, False, True, True])
    p = tmp_path / "x.csv"
    write_csv(p, t, [("v", vals), ("flag", flags)])
    header, data = read_csv(p)
    assert header == ["time", "v", "flag"]
    np.testing.assert_array_equal(data[:, 1], vals)
    np.testing.assert_array_equal(data[:, 2], flags.astype(float))
    assert p.read_text().splitlines()[2].endswith(",0")


def test_read_csv_rejects_garbage(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("")
    with pytest.raises(ValueError):
        read_csv(p)
    p.write_text("time,v\n0,a\n")
    with pytest.raises(ValueError):
        read_csv(p)
    p.write_text("time,v\n")
    with pytest.raises(ValueError):
        read_csv(p)


def test_series_from_columns_checks_uniform_grid():
    t = np.arange(10) * 0.001 + 5.0
    x = series_from_columns(t, np.arange(10.0))
    assert x.dt == pytest.approx(0.001)
    assert x.t0 == 5.0
    t2 = t.copy()
    t2[4] += 1e-5
    with pytest.raises(AlignmentError):
        series_from_columns(t2, np.arange(10.0))
    with pytest.raises(AlignmentError):
        series_from_columns(t[::-1], np.arange(10.0))


def test_three_phase_signal():
    arr = np.vstack([np.ones(4), 2 * np.ones(4), -np.ones(4)])
    s = ThreePhaseSignal.from_array(arr, 0.5)
    np.testing.assert_array_equal(s.total().samples, 2 * np.ones(4))
    np.testing.assert_array_equal(s.as_array(), arr)
    np.testing.assert_array_equal((s - s).as_array(), np.zeros((3, 4)))
    with pytest.raises(AlignmentError):
        ThreePhaseSignal(TimeSeries([1.0], 1.0), TimeSeries([1.0, 2.0], 1.0), TimeSeries([1.0], 1.0))
    with pytest.raises(ValueError):
        ThreePhaseSignal.from_array(np.ones((2, 3)), 1.0)
