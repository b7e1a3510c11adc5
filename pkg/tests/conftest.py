import numpy as np
import pytest

from physiotrust import kernels
from physiotrust.streams import SampleStream, assemble_session


@pytest.fixture(params=kernels.available(), ids=lambda k: k.BACKEND)
def backend(request):
    return request.param


def make_session(duration=100.0, prompt=25.0, ratings=None, pid="P001", condition="control",
                 gsr_rate=128.0, ppg_rate=128.0, gaze_rate=15.0, seed=0):
    """Plain session: constant GSR, 1 Hz pulse train, fixed centre gaze."""
    rng = np.random.default_rng(seed)
    tg = np.arange(int(duration * gsr_rate)) / gsr_rate
    tp = np.arange(int(duration * ppg_rate)) / ppg_rate
    tz = np.arange(int(duration * gaze_rate)) / gaze_rate
    ppg = sum(np.exp(-0.5 * ((tp - b) / 0.08) ** 2) for b in np.arange(0.5, duration, 1.0))
    gaze = np.column_stack([0.5 + 0.001 * rng.random(tz.size), 0.5 + 0.001 * rng.random(tz.size),
                            np.zeros(tz.size)])
    lt = np.arange(1, int(duration / prompt) + 1) * prompt
    if ratings is None:
        ratings = np.full(lt.size, 7)
    streams = {
        "gsr": SampleStream("gsr", gsr_rate, tg, np.full(tg.size, 4.0)),
        "ppg": SampleStream("ppg", ppg_rate, tp, ppg),
        "gaze": SampleStream("gaze", gaze_rate, tz, gaze),
        "label": SampleStream("label", 1 / prompt, lt, np.asarray(ratings)),
    }
    return assemble_session(streams, pid, condition)


@pytest.fixture(scope="session")
def planted():
    """Default synthetic cohort pushed through feature extraction once per test run.

    ``seconds`` holds wall time for generation plus extraction so the
    end-to-end acceptance check can include it in its budget.
    """
    import time

    from physiotrust.dataset import assemble_matrix
    from physiotrust.synth import generate_cohort

    t0 = time.perf_counter()
    cohort = generate_cohort(None, seed=0)
    matrix = assemble_matrix([s for s, _ in cohort])
    return {"cohort": cohort, "matrix": matrix, "seconds": time.perf_counter() - t0}


_ACCEPTANCE = []


class _Criterion:
    def __init__(self, number, title, limit_s):
        self.number, self.title, self.limit_s = number, title, limit_s
        self.notes = []

    def note(self, text):
        self.notes.append(text)


@pytest.fixture
def criterion():
    """Context manager timing one acceptance criterion and recording its verdict.

    The verdict is FAIL if the body raises or the wall time exceeds the limit.
    """
    import contextlib
    import time

    @contextlib.contextmanager
    def run(number, title, limit_s):
        c = _Criterion(number, title, limit_s)
        t0 = time.perf_counter()
        ok = False
        try:
            yield c
            ok = True
        finally:
            elapsed = time.perf_counter() - t0 + getattr(c, "extra_s", 0.0)
            within = elapsed < limit_s
            verdict = "PASS" if ok and within else "FAIL"
            detail = "; ".join(c.notes)
            if not within:
                detail += f"; runtime {elapsed:.1f}s exceeds {limit_s:g}s"
            line = f"criterion {number:>2} {verdict}  {title} ({elapsed:.1f}s / {limit_s:g}s) {detail}"
            _ACCEPTANCE.append((number, line))
            print(line)
        assert within, f"criterion {number} took {elapsed:.1f}s (limit {limit_s}s)"

    return run


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
