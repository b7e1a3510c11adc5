import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from physiotrust import dataset
from physiotrust.dataset import (FEATURE_NAMES, REPORTED_NAMES, FeatureMatrix, assemble_matrix,
                                 binarize_label, filter_condition, read_matrix, read_session,
                                 resample_majority, write_matrix, write_session)
from physiotrust.errors import (InsufficientMajority, ParseError, RatingOutOfRange, SchemaMismatch,
                                VersionMismatch)
from physiotrust.streams import SampleStream, assemble_session

from conftest import make_session


def random_matrix(n, seed=0, conditions=("control", "fa", "miss"), counts=None):
    rng = np.random.default_rng(seed)
    if counts is not None:
        rating = np.r_[rng.integers(5, 11, counts[1]), rng.integers(0, 5, counts[0])]
        n = rating.size
    else:
        rating = rng.integers(0, 11, n)
    X = rng.normal(size=(n, 17)) * 10.0 ** rng.integers(-3, 4, size=(n, 17))
    X[rng.random(X.shape) < 0.1] = np.nan
    return FeatureMatrix([f"P{i % 37:03d}" for i in range(n)], rng.choice(conditions, n),
                         rng.uniform(0, 1000, n), rating, X)


def test_binarize():
    assert binarize_label(5) == 1 and binarize_label(4) == 0
    assert binarize_label(10) == 1 and binarize_label(0) == 0
    for bad in (-1, 11, 4.5):
        with pytest.raises(RatingOutOfRange):
            binarize_label(bad)
    labels = [binarize_label(r) for r in range(11)]
    assert labels == sorted(labels)


def test_feature_schema():
    assert len(FEATURE_NAMES) == 17 and len(set(FEATURE_NAMES)) == 17
    assert set(REPORTED_NAMES) <= set(FEATURE_NAMES)
    assert REPORTED_NAMES["fix_count_ndrt"] == "number_of_fixations_tablet"
    assert len(set(REPORTED_NAMES.values())) == len(REPORTED_NAMES)


def test_assemble_counts_and_order():
    a = make_session(100.0, pid="P002")
    b = make_session(100.0, pid="P001", condition="miss")
    m = assemble_matrix([a, b])
    assert len(m) == 8 and m.X.shape == (8, 17)
    assert list(m.participant_id) == ["P001"] * 4 + ["P002"] * 4
    assert list(m.label_time) == [25.0, 50.0, 75.0, 100.0] * 2
    row = m[0]
    assert row.as_dict()["hr_max"] == pytest.approx(60.0)
    # the steady gaze is one long fixation, counted once by its midpoint
    assert np.nansum(m.column("fix_count_center")) == 2


def test_sixty_windows():
    s = make_session(1500.0, gsr_rate=32.0, ppg_rate=32.0, gaze_rate=15.0)
    m = assemble_matrix([s])
    assert m.X.shape == (60, 17)


def test_low_gsr_coverage_propagates():
    s = make_session(50.0)
    g = s["gsr"]
    keep = (g.t < 30.0) | (g.t >= 42.5)  # second window keeps half its samples
    gsr = SampleStream("gsr", g.nominal_rate, g.t[keep], g.value[keep])
    s2 = assemble_session({**s.streams, "gsr": gsr}, "P", "control")
    m = assemble_matrix([s2])
    gi = [FEATURE_NAMES.index("gsr_phasic_mean"), FEATURE_NAMES.index("gsr_phasic_max")]
    assert np.all(np.isnan(m.X[1, gi])) and not np.any(np.isnan(m.X[0, gi]))
    other = [i for i in range(17) if i not in gi and not FEATURE_NAMES[i].startswith(("fix_dur", "fix_disp"))]
    assert not np.any(np.isnan(m.X[1, other]))


def test_filter_condition():
    m = random_matrix(300)
    out = filter_condition(m, {"fa"})
    assert set(out.condition) == {"control", "miss"}
    assert filter_condition(m, ()).equals(m)
    assert len(filter_condition(m, ("control", "fa", "miss"))) == 0
    keep = np.flatnonzero(m.condition != "fa")
    assert np.array_equal(out.X, m.X[keep], equal_nan=True)
    assert np.array_equal(out.rating, m.rating[keep])


@pytest.mark.parametrize("mult,trust", [(1, 484), (2, 968), (3, 1452)])
def test_resample_counts(mult, trust):
    m = random_matrix(0, counts=(484, 1745))
    out = resample_majority(m, mult, seed=4)
    assert out.class_counts() == {0: 484, 1: trust}
    assert out.seed == 4
    assert resample_majority(m, mult, seed=4).equals(out)


def test_resample_insufficient():
    m = random_matrix(0, counts=(484, 1745))
    with pytest.raises(InsufficientMajority):
        resample_majority(m, 4, seed=0)


def test_matrix_roundtrip(tmp_path):
    m = random_matrix(1000, seed=11)
    write_matrix(m, tmp_path / "f.csv")
    back = read_matrix(tmp_path / "f.csv")
    assert back.equals(m)
    r = resample_majority(m, 1, seed=9)
    write_matrix(r, tmp_path / "r.csv")
    text = (tmp_path / "r.csv").read_text()
    assert text.startswith("#schema=1,seed=9\n")
    assert read_matrix(tmp_path / "r.csv").equals(r)
    assert "\r" not in text


def test_missing_field_is_empty(tmp_path):
    m = random_matrix(5)
    m.X[2, 4] = np.nan
    write_matrix(m, tmp_path / "f.csv")
    line = (tmp_path / "f.csv").read_text().split("\n")[4]
    assert line.split(",")[5 + 4] == ""
    assert np.isnan(read_matrix(tmp_path / "f.csv").X[2, 4])


def test_short_row_parse_error(tmp_path):
    m = random_matrix(5)
    write_matrix(m, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().split("\n")
    lines[3] = ",".join(lines[3].split(",")[:-1])  # 16 feature fields
    (tmp_path / "f.csv").write_text("\n".join(lines))
    with pytest.raises(ParseError) as e:
        read_matrix(tmp_path / "f.csv")
    assert e.value.line == 4 and e.value.column == 22


def test_bad_number_and_schema(tmp_path):
    m = random_matrix(3)
    write_matrix(m, tmp_path / "f.csv")
    text = (tmp_path / "f.csv").read_text()
    lines = text.split("\n")
    f = lines[2].split(",")
    f[7] = "abc"
    lines[2] = ",".join(f)
    (tmp_path / "g.csv").write_text("\n".join(lines))
    with pytest.raises(ParseError) as e:
        read_matrix(tmp_path / "g.csv")
    assert (e.value.line, e.value.column) == (3, 8)
    (tmp_path / "h.csv").write_text(text.replace("#schema=1", "#schema=2"))
    with pytest.raises(VersionMismatch):
        read_matrix(tmp_path / "h.csv")
    (tmp_path / "i.csv").write_text(text.replace("hr_max", "heart"))
    with pytest.raises(SchemaMismatch):
        read_matrix(tmp_path / "i.csv")


def test_session_roundtrip(tmp_path):
    s = make_session(60.0, ratings=[3, 9], condition="fa")
    write_session(s, tmp_path / "s")
    back = read_session(tmp_path / "s")
    assert back.participant_id == s.participant_id and back.condition == "fa"
    for c in ("gsr", "ppg", "gaze", "label"):
        assert back[c].equals(s[c])
    assert sorted(p.name for p in (tmp_path / "s").iterdir()) == [
        "gaze.csv", "gsr.csv", "labels.csv", "manifest.json", "ppg.csv"]


def test_session_parse_error(tmp_path):
    s = make_session(30.0, ratings=[3])
    write_session(s, tmp_path / "s")
    p = tmp_path / "s" / "gaze.csv"
    lines = p.read_text().split("\n")
    lines[5] = lines[5].replace("center", "dashboard")
    p.write_text("\n".join(lines))
    with pytest.raises(ParseError) as e:
        read_session(tmp_path / "s")
    assert e.value.line == 6 and e.value.column == 4


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 200), st.integers(0, 10_000))
def test_roundtrip_property(n, seed):
    import tempfile, pathlib
    m = random_matrix(n, seed)
    with tempfile.TemporaryDirectory() as d:
        write_matrix(m, pathlib.Path(d) / "f.csv")
        assert read_matrix(pathlib.Path(d) / "f.csv").equals(m)


@settings(max_examples=25, deadline=None)
@given(st.integers(20, 200), st.integers(0, 10_000), st.integers(1, 3))
def test_resample_property(n, seed, mult):
    m = random_matrix(n, seed)
    c = m.class_counts()
    minority = min(c[0], c[1])
    if mult * minority > max(c[0], c[1]):
        with pytest.raises(InsufficientMajority):
            resample_majority(m, mult, seed)
        return
    out = resample_majority(m, mult, seed)
    oc = out.class_counts()
    assert sorted(oc.values()) == sorted([minority, mult * minority])
