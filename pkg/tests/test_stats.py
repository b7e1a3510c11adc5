import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from physiotrust.errors import DegenerateGroups
from physiotrust.stats import f_sf, one_way_anova, tukey_hsd

from oracles import pooled_t


def test_identical_groups():
    a = one_way_anova([[1, 2, 3], [1, 2, 3]])
    assert a.F == 0.0 and a.p == 1.0
    assert (a.df_between, a.df_within) == (1, 4)
    t = tukey_hsd([[1, 2, 3], [1, 2, 3], [1, 2, 3]], draws=20_000)
    assert all(p.p_adjusted >= 0.99 for p in t.pairs)


def test_degenerate():
    with pytest.raises(DegenerateGroups):
        one_way_anova([[0, 0], [1, 1]])
    with pytest.raises(DegenerateGroups):
        one_way_anova([[1, 2, 3]])
    with pytest.raises(DegenerateGroups):
        one_way_anova([[1, 2], [3]])
    with pytest.raises(DegenerateGroups):
        one_way_anova([[1, np.nan], [3, 4]])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 30), st.integers(2, 30))
def test_t_squared_equals_f(seed, na, nb):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(0, 1, na), rng.normal(rng.normal(), 2, nb)
    res = one_way_anova([a, b])
    assert res.F == pytest.approx(pooled_t(a, b) ** 2, rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.floats(-10, 10), st.floats(0.01, 100).flatmap(
    lambda c: st.sampled_from([c, -c])))
def test_affine_invariance(seed, shift, scale):
    rng = np.random.default_rng(seed)
    groups = [rng.normal(m, 1, n) for m, n in zip(rng.normal(size=3), rng.integers(2, 15, 3))]
    base = one_way_anova(groups).F
    assert one_way_anova([g + shift for g in groups]).F == pytest.approx(base, rel=1e-12)
    assert one_way_anova([g * scale for g in groups]).F == pytest.approx(base, rel=1e-12)


def test_scipy_cross_check():
    rng = np.random.default_rng(0)
    for _ in range(20):
        groups = [rng.normal(m, 1, n) for m, n in zip(rng.normal(0, 0.5, 3), rng.integers(3, 20, 3))]
        ref = sps.f_oneway(*groups)
        res = one_way_anova(groups)
        assert res.F == pytest.approx(ref.statistic, rel=1e-10)
        assert res.p == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-15)


def test_p_monotone_in_f():
    Fs = np.linspace(0, 30, 200)
    ps = [f_sf(F, 2, 47) for F in Fs]
    assert all(b <= a for a, b in zip(ps, ps[1:]))
    assert f_sf(22.323, 2, 47) < 0.001
    assert f_sf(3.0, 2, 47) == pytest.approx(sps.f.sf(3.0, 2, 47), rel=1e-10)


def test_tukey_separated_means():
    rng = np.random.default_rng(1)
    groups = [rng.normal(m, 1, 20) for m in (0, 0, 10)]
    for seed in (0, 1):
        t = tukey_hsd(groups, seed=seed)
        sig = {p.pair: p.significant for p in t.pairs}
        assert sig == {(0, 1): False, (0, 2): True, (1, 2): True}
    again = tukey_hsd(groups, seed=0)
    assert [p.p_adjusted for p in again.pairs] == [p.p_adjusted for p in tukey_hsd(groups, seed=0).pairs]


def test_tukey_matches_studentized_range():
    rng = np.random.default_rng(2)
    groups = [rng.normal(m, 1, n) for m, n in ((0, 15), (0.6, 18), (1.0, 12))]
    ours = tukey_hsd(groups, seed=3)
    ref = sps.tukey_hsd(*groups)
    for p in ours.pairs:
        i, j = p.pair
        assert 0.0 <= p.p_adjusted <= 1.0
        assert p.p_adjusted == pytest.approx(ref.pvalue[i, j], abs=0.006)
        assert p.mean_diff == pytest.approx(np.mean(groups[j]) - np.mean(groups[i]))


def test_tukey_symmetry():
    rng = np.random.default_rng(4)
    g = [rng.normal(m, 1, 10) for m in (0, 1, 2)]
    a = tukey_hsd(g, seed=0, draws=20_000)
    b = tukey_hsd(g[::-1], seed=0, draws=20_000)
    pa = {p.pair: p for p in a.pairs}
    for p in b.pairs:
        q = pa[(2 - p.pair[1], 2 - p.pair[0])]
        assert p.q == pytest.approx(q.q, rel=1e-12)
        assert p.mean_diff == pytest.approx(-q.mean_diff, rel=1e-12)
        assert p.p_adjusted == q.p_adjusted
