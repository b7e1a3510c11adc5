"""PPG beat detection, inter-beat intervals and the window-level cardiac features."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import LSQUnivariateSpline
from scipy.signal import find_peaks

from .errors import SignalTooShort, FlatSignal, TooFewBeats

MIN_RATE_HZ = 32.0
MIN_LENGTH_S = 5.0
SEGMENT_S = 10.0
IBI_BAND = (0.33, 2.0)
CARDIAC_FEATURES = ("hr_max", "hrv", "ibi_mean")


@dataclass(frozen=True, eq=False)
class BeatSeries:
    times: np.ndarray

    def __len__(self):
        return self.times.shape[0]


@dataclass(frozen=True, eq=False)
class IbiSeries:
    onsets: np.ndarray
    durations: np.ndarray

    def __len__(self):
        return self.durations.shape[0]

    @property
    def out_of_band(self):
        """Mask of intervals outside the physiological band; flagged, not removed."""
        lo, hi = IBI_BAND
        return (self.durations < lo) | (self.durations > hi)


def _iqr(x):
    q75, q25 = np.percentile(x, [75, 25])
    return q75 - q25


def detect_beats(stream, refractory_s=0.33, prominence_frac=0.3):
    """Pulse peaks of a PPG stream.

    The record is linearly detrended in 10 s pieces; a peak must rise at least
    ``prominence_frac`` times the inter-quartile range of its own 10 s segment
    above its surroundings, and peaks closer than ``refractory_s`` keep only
    the taller one.
    """
    fs = float(stream.nominal_rate)
    x = np.asarray(stream.value, dtype=np.float64)
    n = x.shape[0]
    if fs < MIN_RATE_HZ:
        raise SignalTooShort(f"ppg sampled at {fs} Hz, need >= {MIN_RATE_HZ}")
    if n < MIN_LENGTH_S * fs:
        raise SignalTooShort(f"ppg record of {n / fs:.2f} s, need >= {MIN_LENGTH_S} s")
    seg = int(round(SEGMENT_S * fs))
    whole_iqr = _iqr(x)
    if whole_iqr == 0:
        raise FlatSignal("ppg inter-quartile range is zero")
    xd = x - _trend(x, seg)
    prom = np.empty(n)
    for a in range(0, n, seg):
        b = min(n, a + seg)
        q = _iqr(xd[a:b])
        # a flat segment borrows the whole-record spread
        prom[a:b] = prominence_frac * (q if q > 0 else whole_iqr)
    distance = max(1, math.ceil(refractory_s * fs - 1e-9))
    idx, _ = find_peaks(xd, prominence=(prom, None), distance=distance)
    return BeatSeries(np.asarray(stream.t)[idx].copy())


def _trend(x, seg):
    """Continuous piecewise-linear least-squares fit with knots every ``seg`` samples.

    Fitting each segment on its own leaves jumps at the knots, and a pulse
    sitting on one can lose its peak to the neighbouring sample.
    """
    i = np.arange(x.shape[0], dtype=np.float64)
    knots = np.arange(seg, x.shape[0] - 1, seg, dtype=np.float64)
    return LSQUnivariateSpline(i, x, knots, k=1)(i)


def ibi_series(beats):
    times = np.asarray(beats.times if isinstance(beats, BeatSeries) else beats, dtype=np.float64)
    if times.shape[0] < 2:
        raise TooFewBeats(f"{times.shape[0]} beat(s); need at least 2")
    return IbiSeries(times[:-1].copy(), np.diff(times))


def cardiac_features(window, ibi, min_intervals=3, min_coverage=0.8):
    """hr_max (bpm), hrv (RMSSD, s) and ibi_mean (s) over intervals whose onset lies in the window."""
    missing = {name: np.nan for name in CARDIAC_FEATURES}
    if window.coverage.get("ppg", 1.0) < min_coverage:
        return missing
    inside = (ibi.onsets >= window.start) & (ibi.onsets < window.label_time)
    d = ibi.durations[inside]
    if d.shape[0] < max(min_intervals, 1):
        return missing
    diffs = np.diff(d)
    return {
        "hr_max": float(np.max(60.0 / d)),
        "hrv": float(np.sqrt(np.mean(diffs * diffs))) if diffs.size else 0.0,
        "ibi_mean": float(np.mean(d)),
    }
