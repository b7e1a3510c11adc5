"""Dispersion-threshold fixation detection and per-screen gaze features."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .streams import SCREENS


def gaze_feature_names():
    return ([f"fix_count_{s}" for s in SCREENS] + [f"fix_dur_{s}" for s in SCREENS]
            + [f"fix_disp_{s}" for s in SCREENS])


GAZE_FEATURES = tuple(gaze_feature_names())


@dataclass(frozen=True)
class Fixation:
    start: float
    end: float
    cx: float
    cy: float
    dispersion: float
    screen: str
    n_samples: int = 0

    @property
    def duration(self):
        return self.end - self.start

    @property
    def midpoint(self):
        return 0.5 * (self.start + self.end)


def detect_fixations(stream, dispersion_threshold=0.05, min_duration=0.2, backend=None):
    """I-DT fixations of a gaze stream, in time order.

    A fixation ends one sample period after its last member sample.
    """
    if not dispersion_threshold > 0 or not min_duration > 0:
        raise ValueError("dispersion_threshold and min_duration must be positive")
    k = backend or kernels.active
    if len(stream) == 0:
        return []
    t = np.ascontiguousarray(stream.t, dtype=np.float64)
    x = np.ascontiguousarray(stream.values[:, 0])
    y = np.ascontiguousarray(stream.values[:, 1])
    screen = np.ascontiguousarray(stream.values[:, 2]).astype(np.int64)
    dt = 1.0 / float(stream.nominal_rate)
    starts, stops, disps = k.idt(t, x, y, screen, float(dispersion_threshold), float(min_duration), dt)
    out = []
    for a, b, disp in zip(starts, stops, disps):
        out.append(Fixation(
            start=float(t[a]), end=float(t[b - 1] + dt),
            cx=float(np.mean(x[a:b])), cy=float(np.mean(y[a:b])),
            dispersion=float(disp), screen=SCREENS[screen[a]], n_samples=int(b - a),
        ))
    return out


def gaze_features(window, fixations, duration_agg="mean", min_coverage=0.8):
    """Count, duration and dispersion per screen for fixations whose midpoint is in the window."""
    if duration_agg not in ("mean", "sum"):
        raise ValueError("duration_agg must be 'mean' or 'sum'")
    if window.coverage.get("gaze", 1.0) < min_coverage:
        return {name: np.nan for name in GAZE_FEATURES}
    lo, hi = window.start, window.label_time
    per = {s: [] for s in SCREENS}
    for f in fixations:
        if lo <= f.midpoint < hi:
            per[f.screen].append(f)
    out = {}
    for s in SCREENS:
        fs = per[s]
        out[f"fix_count_{s}"] = float(len(fs))
        if fs:
            durs = [f.duration for f in fs]
            out[f"fix_dur_{s}"] = float(np.mean(durs) if duration_agg == "mean" else np.sum(durs))
            out[f"fix_disp_{s}"] = float(np.mean([f.dispersion for f in fs]))
        else:
            out[f"fix_dur_{s}"] = np.nan
            out[f"fix_disp_{s}"] = np.nan
    return {name: out[name] for name in GAZE_FEATURES}
