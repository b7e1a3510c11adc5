"""Feature matrix assembly, condition filtering, majority resampling and on-disk formats."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cardio, eda, gaze
from .config import DEFAULTS, section
from .errors import (InsufficientMajority, ParseError, RatingOutOfRange, SchemaMismatch,
                     TooFewBeats, VersionMismatch)
from .streams import (CHANNELS, CONDITIONS, DEFAULT_RATES, SCREENS, SampleStream,
                      assemble_session, extract_windows)

SCHEMA_VERSION = 1

FEATURE_NAMES = (
    "hr_max", "hrv", "ibi_mean",
    "fix_count_center", "fix_count_left", "fix_count_right", "fix_count_ndrt",
    "fix_dur_center", "fix_dur_left", "fix_dur_right", "fix_dur_ndrt",
    "fix_disp_center", "fix_disp_left", "fix_disp_right", "fix_disp_ndrt",
    "gsr_phasic_mean", "gsr_phasic_max",
)

# long-form names for the same quantities, carried into ranking reports
REPORTED_NAMES = {
    "hr_max": "mean_HR_max",
    "hrv": "mean_HRV",
    "fix_count_center": "number_of_fixations_center",
    "fix_count_ndrt": "number_of_fixations_tablet",
    "fix_disp_ndrt": "mean_dispersion_tablet",
    "fix_dur_ndrt": "mean_duration_tablet",
    "gsr_phasic_mean": "mean_GSR",
}

META_COLUMNS = ("participant_id", "condition", "label_time", "rating", "label")
HEADER = META_COLUMNS + FEATURE_NAMES


def binarize_label(rating):
    """1 (trust) when the 0-10 rating is at least 5, else 0."""
    r = float(rating)
    if not (0 <= r <= 10) or r != round(r):
        raise RatingOutOfRange(f"rating {rating!r} is not an integer in 0-10")
    return 1 if r >= 5 else 0


@dataclass(frozen=True)
class FeatureVector:
    participant_id: str
    condition: str
    label_time: float
    rating: int
    label: int
    features: tuple

    def as_dict(self):
        return dict(zip(FEATURE_NAMES, self.features))


class FeatureMatrix:
    """Column-oriented table of labelled windows with 17 feature columns (NaN = missing)."""

    def __init__(self, participant_id, condition, label_time, rating, X, schema=SCHEMA_VERSION, seed=None):
        self.participant_id = np.asarray(participant_id, dtype=object).reshape(-1)
        self.condition = np.asarray(condition, dtype=object).reshape(-1)
        self.label_time = np.asarray(label_time, dtype=np.float64).reshape(-1)
        self.rating = np.asarray(rating, dtype=np.int64).reshape(-1)
        X = np.asarray(X, dtype=np.float64)
        n = self.label_time.shape[0]
        if X.size == 0:
            X = X.reshape(n, len(FEATURE_NAMES))
        if X.shape != (n, len(FEATURE_NAMES)):
            raise SchemaMismatch(f"feature block shape {X.shape}, expected ({n}, {len(FEATURE_NAMES)})")
        if not (self.participant_id.shape[0] == self.condition.shape[0] == self.rating.shape[0] == n):
            raise SchemaMismatch("metadata columns have different lengths")
        for r in self.rating:
            binarize_label(r)
        self.X = X
        self.label = np.asarray([1 if r >= 5 else 0 for r in self.rating], dtype=np.int64)
        self.schema = schema
        self.seed = seed

    feature_names = FEATURE_NAMES

    def __len__(self):
        return self.label_time.shape[0]

    def __getitem__(self, i):
        return FeatureVector(str(self.participant_id[i]), str(self.condition[i]), float(self.label_time[i]),
                             int(self.rating[i]), int(self.label[i]), tuple(float(v) for v in self.X[i]))

    def rows(self):
        return [self[i] for i in range(len(self))]

    def take(self, idx, seed=None):
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureMatrix(self.participant_id[idx], self.condition[idx], self.label_time[idx],
                             self.rating[idx], self.X[idx], self.schema,
                             self.seed if seed is None else seed)

    def class_counts(self):
        """``{0: n_distrust, 1: n_trust}``."""
        return {0: int(np.sum(self.label == 0)), 1: int(np.sum(self.label == 1))}

    def column(self, name):
        return self.X[:, FEATURE_NAMES.index(name)]

    def equals(self, other):
        return (
            len(self) == len(other)
            and list(self.participant_id) == list(other.participant_id)
            and list(self.condition) == list(other.condition)
            and np.array_equal(self.label_time, other.label_time)
            and np.array_equal(self.rating, other.rating)
            and np.array_equal(self.X, other.X, equal_nan=True)
            and self.schema == other.schema
            and self.seed == other.seed
        )

    @classmethod
    def from_vectors(cls, vectors, seed=None):
        vectors = list(vectors)
        for v in vectors:
            if len(v.features) != len(FEATURE_NAMES):
                raise SchemaMismatch(f"feature vector with {len(v.features)} slots")
        return cls([v.participant_id for v in vectors], [v.condition for v in vectors],
                   [v.label_time for v in vectors], [v.rating for v in vectors],
                   np.array([v.features for v in vectors], dtype=np.float64).reshape(-1, len(FEATURE_NAMES)),
                   seed=seed)


def session_features(session, cfg=None):
    """Feature rows (FeatureVector) for every labelled window of one session."""
    cfg = cfg or dict(DEFAULTS)
    width = cfg["window.width_s"]
    min_cov = cfg["window.min_coverage"]
    windows = extract_windows(session, width)

    decomposition = eda.decompose_session(session, section(cfg, "eda"))
    try:
        beats = cardio.detect_beats(session["ppg"], cfg["cardio.refractory_s"], cfg["cardio.prominence_frac"])
        ibi = cardio.ibi_series(beats)
    except TooFewBeats:
        ibi = cardio.IbiSeries(np.zeros(0), np.zeros(0))
    fixations = gaze.detect_fixations(session["gaze"], cfg["gaze.dispersion_threshold"], cfg["gaze.min_duration_s"])

    rows = []
    for w in windows:
        feats = {}
        feats.update(cardio.cardiac_features(w, ibi, cfg["cardio.min_intervals"], min_cov))
        feats.update(gaze.gaze_features(w, fixations, cfg["gaze.duration_agg"], min_cov))
        feats.update(eda.gsr_features(w, decomposition, min_cov))
        if set(feats) != set(FEATURE_NAMES):
            raise SchemaMismatch(f"extractors produced {sorted(feats)}")
        rows.append(FeatureVector(session.participant_id, session.condition, w.label_time, w.rating,
                                  binarize_label(w.rating), tuple(float(feats[n]) for n in FEATURE_NAMES)))
    return rows


def assemble_matrix(sessions, cfg=None):
    """Rows from all sessions ordered by participant id, then label time."""
    rows = []
    for s in sessions:
        rows.extend(session_features(s, cfg))
    rows.sort(key=lambda r: (r.participant_id, r.label_time))
    return FeatureMatrix.from_vectors(rows)


def filter_condition(matrix, excluded=("fa",)):
    excluded = set(excluded)
    unknown = excluded - set(CONDITIONS)
    if unknown:
        raise ValueError(f"unknown conditions: {sorted(unknown)}")
    keep = np.array([c not in excluded for c in matrix.condition], dtype=bool)
    return matrix.take(np.flatnonzero(keep))


def resample_majority(matrix, multiplier, seed=0):
    """Keep every minority row and ``multiplier`` times as many majority rows, drawn without replacement.

    Row order of the input is preserved and the seed is recorded on the result.
    """
    if multiplier < 1 or int(multiplier) != multiplier:
        raise ValueError("multiplier must be an integer >= 1")
    counts = matrix.class_counts()
    minority = 0 if counts[0] <= counts[1] else 1
    majority = 1 - minority
    n_min = counts[minority]
    need = int(multiplier) * n_min
    maj_idx = np.flatnonzero(matrix.label == majority)
    if need > maj_idx.size:
        raise InsufficientMajority(f"{multiplier} x {n_min} = {need} exceeds {maj_idx.size} majority rows")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(maj_idx, size=need, replace=False)
    keep = np.sort(np.concatenate([np.flatnonzero(matrix.label == minority), chosen]))
    return matrix.take(keep, seed=int(seed))


# ---------------------------------------------------------------- file formats

def _fmt(v):
    return "" if np.isnan(v) else repr(float(v))


def write_matrix(matrix, path):
    head = f"#schema={matrix.schema}" + (f",seed={matrix.seed}" if matrix.seed is not None else "")
    lines = [head, ",".join(HEADER)]
    for i in range(len(matrix)):
        meta = [str(matrix.participant_id[i]), str(matrix.condition[i]), repr(float(matrix.label_time[i])),
                str(int(matrix.rating[i])), str(int(matrix.label[i]))]
        lines.append(",".join(meta + [_fmt(v) for v in matrix.X[i]]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _parse_float(field, line, col, path, allow_empty=False):
    if field == "":
        if allow_empty:
            return np.nan
        raise ParseError("empty field", line, col, path)
    try:
        v = float(field)
    except ValueError:
        raise ParseError(f"not a number: {field!r}", line, col, path)
    if not np.isfinite(v):
        raise ParseError(f"non-finite value {field!r}", line, col, path)
    return v


def _parse_comment(text, line, path):
    out = {}
    for item in text[1:].split(","):
        if "=" not in item:
            raise ParseError(f"malformed header comment {text!r}", line, 1, path)
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = int(v)
        except ValueError:
            raise ParseError(f"non-integer {k.strip()} in header comment", line, 1, path)
    return out


def read_matrix(path):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lineno = 0
    meta = {}
    if lines and lines[0].startswith("#"):
        meta = _parse_comment(lines[0], 1, path)
        lineno = 1
    schema = meta.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise VersionMismatch(f"{path}: feature schema {schema}, expected {SCHEMA_VERSION}")
    if lineno >= len(lines):
        raise ParseError("missing header row", lineno + 1, 1, path)
    header = lines[lineno].rstrip("\r").split(",")
    if tuple(header) != HEADER:
        bad = next((i for i, (a, b) in enumerate(zip(header, HEADER)) if a != b), min(len(header), len(HEADER)))
        raise SchemaMismatch(f"{path}: header column {bad + 1} is "
                             f"{header[bad] if bad < len(header) else '<absent>'!r}, "
                             f"expected {HEADER[bad] if bad < len(HEADER) else '<none>'!r}")
    pids, conds, times, ratings, X = [], [], [], [], []
    width = len(HEADER)
    for k, raw in enumerate(lines[lineno + 1:], start=lineno + 2):
        fields = raw.rstrip("\r").split(",")
        if len(fields) != width:
            raise ParseError(f"expected {width} fields, found {len(fields)}", k, min(len(fields), width) + 1, path)
        pid, cond = fields[0], fields[1]
        if cond not in CONDITIONS:
            raise ParseError(f"unknown condition {cond!r}", k, 2, path)
        t = _parse_float(fields[2], k, 3, path)
        try:
            rating = int(fields[3])
        except ValueError:
            raise ParseError(f"rating {fields[3]!r} is not an integer", k, 4, path)
        if not 0 <= rating <= 10:
            raise ParseError(f"rating {rating} outside 0-10", k, 4, path)
        if fields[4] != str(binarize_label(rating)):
            raise ParseError(f"label {fields[4]!r} inconsistent with rating {rating}", k, 5, path)
        row = [_parse_float(f, k, 6 + j, path, allow_empty=True) for j, f in enumerate(fields[5:])]
        pids.append(pid)
        conds.append(cond)
        times.append(t)
        ratings.append(rating)
        X.append(row)
    return FeatureMatrix(pids, conds, times, ratings,
                         np.array(X, dtype=np.float64).reshape(-1, len(FEATURE_NAMES)),
                         schema, meta.get("seed"))


SESSION_FILES = {"gsr": "gsr.csv", "ppg": "ppg.csv", "gaze": "gaze.csv", "label": "labels.csv"}
SESSION_COLUMNS = {
    "gsr": ("t", "sc_microsiemens"),
    "ppg": ("t", "ppg"),
    "gaze": ("t", "x", "y", "screen"),
    "label": ("t", "rating"),
}


def write_session(session, directory):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {
        "participant_id": session.participant_id,
        "condition": session.condition,
        "drive": session.metadata.get("drive", 1),
        "files": dict(SESSION_FILES),
        "rates": {c: session[c].nominal_rate for c in CHANNELS},
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    for channel, name in SESSION_FILES.items():
        s = session[channel]
        lines = [",".join(SESSION_COLUMNS[channel])]
        for t, row in zip(s.t, s.values):
            if channel == "gaze":
                fields = [repr(float(t)), repr(float(row[0])), repr(float(row[1])), SCREENS[int(row[2])]]
            elif channel == "label":
                fields = [repr(float(t)), str(int(row[0]))]
            else:
                fields = [repr(float(t)), repr(float(row[0]))]
            lines.append(",".join(fields))
        (d / name).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _read_channel(path, channel, rate):
    cols = SESSION_COLUMNS[channel]
    try:
        lines = path.read_text(encoding="utf-8").split("\n")
    except OSError as exc:
        raise ParseError(str(exc), path=path)
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or tuple(lines[0].rstrip("\r").split(",")) != cols:
        raise ParseError(f"header must be {','.join(cols)}", 1, 1, path)
    n = len(lines) - 1
    t = np.empty(n)
    vals = np.empty((n, len(cols) - 1))
    for i, raw in enumerate(lines[1:]):
        k = i + 2
        fields = raw.rstrip("\r").split(",")
        if len(fields) != len(cols):
            raise ParseError(f"expected {len(cols)} fields, found {len(fields)}", k,
                             min(len(fields), len(cols)) + 1, path)
        t[i] = _parse_float(fields[0], k, 1, path)
        for j, f in enumerate(fields[1:], start=1):
            if channel == "gaze" and j == 3:
                if f not in SCREENS:
                    raise ParseError(f"unknown screen {f!r}", k, 4, path)
                vals[i, 2] = SCREENS.index(f)
            elif channel == "label":
                try:
                    vals[i, 0] = int(f)
                except ValueError:
                    raise ParseError(f"rating {f!r} is not an integer", k, 2, path)
            else:
                vals[i, j - 1] = _parse_float(f, k, j + 1, path)
    return SampleStream(channel, rate, t, vals)


def read_session(directory):
    d = Path(directory)
    mpath = d / "manifest.json"
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(str(exc), path=mpath)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno, mpath)
    for key in ("participant_id", "condition", "files"):
        if key not in manifest:
            raise ParseError(f"manifest lacks {key!r}", path=mpath)
    rates = {**DEFAULT_RATES, **manifest.get("rates", {})}
    streams = {}
    for channel in CHANNELS:
        name = manifest["files"].get(channel, SESSION_FILES[channel])
        streams[channel] = _read_channel(d / name, channel, float(rates[channel]))
    meta = {"drive": manifest.get("drive", 1)}
    return assemble_session(streams, manifest["participant_id"], manifest["condition"], meta)


def find_sessions(root):
    """Session directories (those holding a manifest.json) below ``root``, sorted by path."""
    root = Path(root)
    if (root / "manifest.json").exists():
        return [root]
    return sorted(p.parent for p in root.rglob("manifest.json"))
