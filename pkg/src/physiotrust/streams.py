"""Time base, session assembly and pre-label window extraction."""

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyStream, NonMonotonicTimestamps, RatingOutOfRange

CHANNELS = ("gsr", "ppg", "gaze", "label")
CONDITIONS = ("control", "fa", "miss")
SCREENS = ("center", "left", "right", "ndrt")
SENSOR_CHANNELS = ("gsr", "ppg", "gaze")

# columns of the payload array per channel; gaze screen is stored as an index into SCREENS
ARITY = {"gsr": 1, "ppg": 1, "gaze": 3, "label": 1}
DEFAULT_RATES = {"gsr": 128.0, "ppg": 128.0, "gaze": 15.0, "label": 1.0 / 25.0}


@dataclass(frozen=True, eq=False)
class SampleStream:
    channel: str
    nominal_rate: float
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if self.channel not in ARITY:
            raise ValueError(f"unknown channel {self.channel!r}")
        if values.shape != (t.shape[0], ARITY[self.channel]):
            raise ValueError(
                f"{self.channel}: payload shape {values.shape} does not match "
                f"{t.shape[0]} samples of arity {ARITY[self.channel]}"
            )
        t.setflags(write=False)
        values = np.ascontiguousarray(values)
        values.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.t.shape[0]

    @property
    def value(self):
        """First payload column (the scalar channels' only column)."""
        return self.values[:, 0]

    def slice(self, start, stop):
        return SampleStream(self.channel, self.nominal_rate, self.t[start:stop], self.values[start:stop])

    def equals(self, other):
        return (
            self.channel == other.channel
            and self.nominal_rate == other.nominal_rate
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class Session:
    participant_id: str
    condition: str
    streams: dict
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, channel):
        return self.streams[channel]

    @property
    def labels(self):
        return self.streams["label"]


@dataclass(frozen=True, eq=False)
class Window:
    label_time: float
    rating: int
    width: float
    slices: dict
    coverage: dict

    @property
    def start(self):
        return self.label_time - self.width


def validate_stream(stream):
    if len(stream) == 0:
        raise EmptyStream(stream.channel)
    t = stream.t
    if not np.all(np.isfinite(t)):
        bad = int(np.flatnonzero(~np.isfinite(t))[0])
        raise NonMonotonicTimestamps(stream.channel, bad)
    if t[0] < 0:
        raise ValueError(f"{stream.channel}: negative timestamp {t[0]}")
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise NonMonotonicTimestamps(stream.channel, int(np.flatnonzero(steps <= 0)[0]) + 1)
    if stream.channel == "label":
        r = stream.value
        if np.any((r < 0) | (r > 10) | (r != np.round(r))):
            raise RatingOutOfRange(f"rating payload outside integer range 0-10: {r[(r < 0) | (r > 10) | (r != np.round(r))][0]}")
    if stream.channel == "gaze":
        screen = stream.values[:, 2]
        if np.any((screen < 0) | (screen >= len(SCREENS)) | (screen != np.round(screen))):
            raise ValueError("gaze: screen id outside {0,1,2,3}")
        if not np.all(np.isfinite(stream.values[:, :2])):
            raise ValueError("gaze: non-finite coordinates")


def assemble_session(streams, participant_id, condition, metadata=None):
    """Validate raw streams and bundle them into a Session.

    ``streams`` maps channel name to SampleStream; all four channels are required.
    """
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}, got {condition!r}")
    for channel in CHANNELS:
        if channel not in streams:
            raise EmptyStream(channel)
        stream = streams[channel]
        if stream.channel != channel:
            raise ValueError(f"stream under key {channel!r} is tagged {stream.channel!r}")
        validate_stream(stream)
    return Session(str(participant_id), condition, dict(streams), dict(metadata or {}))


def extract_windows(session, width=25.0):
    """One half-open window [label_time - width, label_time) per label sample."""
    if not width > 0:
        raise ValueError("width must be positive")
    labels = session.labels
    windows = []
    for label_time, rating in zip(labels.t, labels.value):
        label_time = float(label_time)
        lo = label_time - width
        slices = {}
        coverage = {}
        for channel in SENSOR_CHANNELS:
            stream = session.streams[channel]
            i0 = int(np.searchsorted(stream.t, lo, side="left"))
            i1 = int(np.searchsorted(stream.t, label_time, side="left"))
            slices[channel] = stream.slice(i0, i1)
            expected = width * stream.nominal_rate
            coverage[channel] = min(1.0, max(0.0, (i1 - i0) / expected)) if expected > 0 else 0.0
        windows.append(Window(label_time, int(rating), float(width), slices, coverage))
    return windows
