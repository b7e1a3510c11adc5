import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from physiotrust.cardio import cardiac_features, detect_beats, ibi_series, IbiSeries
from physiotrust.errors import FlatSignal, SignalTooShort, TooFewBeats
from physiotrust.streams import SampleStream, Window
from physiotrust.synth import generate_ppg

from oracles import rmssd_loop

FS = 128.0


def _window(label_time, width=25.0, cov=1.0):
    return Window(label_time, 5, width, {}, {"ppg": cov})


def test_planted_pulse_train():
    beats = np.arange(0.5, 30.0, 1.0)
    found = detect_beats(generate_ppg(beats, FS, 30.0)).times
    assert found.size == beats.size
    assert np.max(np.abs(found - beats)) <= 1 / FS


def test_constant_ppg_is_flat():
    t = np.arange(int(10 * FS)) / FS
    with pytest.raises(FlatSignal):
        detect_beats(SampleStream("ppg", FS, t, np.ones(t.size)))


def test_too_short_or_slow():
    t = np.arange(int(4 * FS)) / FS
    with pytest.raises(SignalTooShort):
        detect_beats(SampleStream("ppg", FS, t, np.sin(t)))
    t2 = np.arange(200) / 16.0
    with pytest.raises(SignalTooShort):
        detect_beats(SampleStream("ppg", 16.0, t2, np.sin(t2)))


def test_spurious_small_bump_rejected():
    beats = np.arange(0.5, 20.0, 1.0)
    s = generate_ppg(beats, FS, 20.0)
    x = s.value.copy()
    q75, q25 = np.percentile(x, [75, 25])
    # a bump between beats 5 and 6 with prominence 0.1 x IQR
    bump_t = 5.95
    x += 0.1 * (q75 - q25) * np.exp(-0.5 * ((s.t - bump_t) / 0.03) ** 2)
    found = detect_beats(SampleStream("ppg", FS, s.t, x)).times
    assert found.size == beats.size
    assert np.min(np.abs(found - bump_t)) > 0.3


def test_ibi_examples():
    ibi = ibi_series(np.array([10.0, 11.0, 12.0]))
    assert list(ibi.durations) == [1.0, 1.0] and list(ibi.onsets) == [10.0, 11.0]
    ibi = ibi_series(np.array([0.0, 0.8, 1.8]))
    assert ibi.durations == pytest.approx([0.8, 1.0])
    with pytest.raises(TooFewBeats):
        ibi_series(np.array([3.0]))


def test_out_of_band_flagged():
    ibi = ibi_series(np.array([0.0, 0.2, 1.2, 3.5]))
    assert list(ibi.out_of_band) == [True, False, True]


def test_constant_intervals():
    ibi = ibi_series(np.arange(0.0, 30.0, 1.0))
    f = cardiac_features(_window(25.0), ibi)
    assert f == {"hr_max": 60.0, "hrv": 0.0, "ibi_mean": 1.0}


def test_alternating_intervals():
    d = np.tile([0.8, 1.0], 5)
    beats = np.concatenate([[0.0], np.cumsum(d)])
    f = cardiac_features(_window(25.0), ibi_series(beats))
    assert f["hr_max"] == pytest.approx(75.0)
    assert f["hrv"] == pytest.approx(0.2)
    assert f["ibi_mean"] == pytest.approx(0.9)


def test_two_intervals_missing():
    f = cardiac_features(_window(25.0), ibi_series(np.array([20.0, 21.0, 22.0])))
    assert all(np.isnan(v) for v in f.values())


def test_low_coverage_missing():
    f = cardiac_features(_window(25.0, cov=0.5), ibi_series(np.arange(0.0, 30.0, 1.0)))
    assert all(np.isnan(v) for v in f.values())


durations = st.lists(st.floats(0.33, 2.0), min_size=3, max_size=40)


@settings(max_examples=100, deadline=None)
@given(durations, st.floats(-100.0, 100.0))
def test_feature_properties(d, shift):
    d = np.asarray(d)
    beats = 200.0 + np.concatenate([[0.0], np.cumsum(d)])
    w = _window(beats[-1] + 1.0, width=beats[-1] - beats[0] + 2.0)
    ibi = ibi_series(beats)
    assert len(ibi) == len(beats) - 1
    f = cardiac_features(w, ibi)
    assert f["hrv"] >= 0
    assert f["hrv"] == pytest.approx(rmssd_loop(np.diff(beats)), rel=1e-12, abs=1e-15)
    assert (f["hrv"] == 0) == bool(np.all(np.diff(np.diff(beats)) == 0))
    assert f["hr_max"] >= 60 / f["ibi_mean"] * (1 - 1e-12) and 60 / f["ibi_mean"] >= 60 / d.max() * (1 - 1e-12)
    w2 = _window(w.label_time + shift, w.width)
    g = cardiac_features(w2, ibi_series(beats + shift))
    for k in f:
        assert g[k] == pytest.approx(f[k], rel=1e-9, abs=1e-12)
