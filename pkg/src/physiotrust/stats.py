"""One-way ANOVA and a Monte Carlo Tukey-Kramer post-hoc test."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .errors import DegenerateGroups

TUKEY_DRAWS = 100_000
_CHUNK = 10_000


@dataclass(frozen=True)
class AnovaResult:
    F: float
    df_between: int
    df_within: int
    p: float
    group_means: tuple
    group_sizes: tuple
    ms_within: float

    def to_dict(self):
        return {"F": self.F, "df": [self.df_between, self.df_within], "p": self.p,
                "group_means": list(self.group_means), "group_sizes": list(self.group_sizes)}


@dataclass(frozen=True)
class TukeyPair:
    pair: tuple
    mean_diff: float
    q: float
    p_adjusted: float
    significant: bool

    def to_dict(self):
        return {"pair": list(self.pair), "mean_diff": self.mean_diff, "q": self.q,
                "p_adjusted": self.p_adjusted, "significant": self.significant}


@dataclass(frozen=True)
class TukeyResult:
    pairs: tuple
    alpha: float
    draws: int
    seed: int

    def to_dict(self):
        return {"alpha": self.alpha, "draws": self.draws, "seed": self.seed,
                "pairs": [p.to_dict() for p in self.pairs]}


def f_sf(F, dfb, dfw):
    """Upper tail P(F' >= F) of the F distribution via the regularized incomplete beta."""
    if F <= 0:
        return 1.0
    return float(betainc(0.5 * dfw, 0.5 * dfb, dfw / (dfw + dfb * F)))


def _check(groups):
    groups = [np.asarray(g, dtype=np.float64).reshape(-1) for g in groups]
    if len(groups) < 2:
        raise DegenerateGroups("need at least 2 groups")
    for i, g in enumerate(groups):
        if g.size < 2:
            raise DegenerateGroups(f"group {i} has {g.size} sample(s); need at least 2")
        if not np.all(np.isfinite(g)):
            raise DegenerateGroups(f"group {i} contains non-finite values")
    return groups


def one_way_anova(groups):
    groups = _check(groups)
    # exactly rounded sums keep F stable under shifts and rescaling of the data
    sizes = np.array([g.size for g in groups])
    means = np.array([math.fsum(g) / g.size for g in groups])
    n = int(sizes.sum())
    grand = math.fsum(np.concatenate(groups)) / n
    ssb = math.fsum(sizes * (means - grand) ** 2)
    ssw = math.fsum(math.fsum((g - m) ** 2) for g, m in zip(groups, means))
    dfb, dfw = len(groups) - 1, n - len(groups)
    if ssw == 0.0:
        raise DegenerateGroups("all within-group variances are zero")
    F = (ssb / dfb) / (ssw / dfw)
    return AnovaResult(float(F), dfb, dfw, f_sf(F, dfb, dfw), tuple(float(m) for m in means),
                       tuple(int(s) for s in sizes), ssw / dfw)


def _pair_q(means, sizes, msw):
    k = len(means)
    i, j = np.triu_indices(k, 1)
    se = np.sqrt(0.5 * msw * (1.0 / sizes[i] + 1.0 / sizes[j]))
    return i, j, np.abs(means[..., i] - means[..., j]) / se


def tukey_hsd(groups, alpha=0.05, seed=0, draws=TUKEY_DRAWS):
    """Pairwise Tukey-Kramer comparisons with a simulated studentized-range null.

    Each null draw is a full set of normal samples with the observed group
    sizes; only its sufficient statistics are simulated (group means are normal,
    the pooled within sum of squares is a scaled chi-square), which gives the
    same distribution as drawing every sample.  ``p_adjusted`` is the fraction
    of draws whose largest pairwise q reaches the observed q.
    """
    groups = _check(groups)
    a = one_way_anova(groups)
    sizes = np.array(a.group_sizes, dtype=np.float64)
    means = np.array(a.group_means)
    i, j, q_obs = _pair_q(means, sizes, a.ms_within)
    sigma = np.sqrt(a.ms_within)
    exceed = np.zeros(q_obs.size, dtype=np.int64)
    done = 0
    chunk_id = 0
    while done < draws:
        m = min(_CHUNK, draws - done)
        rng = np.random.default_rng([int(seed), chunk_id])
        sim_means = rng.standard_normal((m, sizes.size)) * (sigma / np.sqrt(sizes))
        sim_msw = sigma ** 2 * rng.chisquare(a.df_within, size=m) / a.df_within
        k = sizes.size
        ii, jj = np.triu_indices(k, 1)
        se = np.sqrt(0.5 * sim_msw[:, None] * (1.0 / sizes[ii] + 1.0 / sizes[jj])[None, :])
        qmax = np.max(np.abs(sim_means[:, ii] - sim_means[:, jj]) / se, axis=1)
        exceed += np.sum(qmax[:, None] >= q_obs[None, :], axis=0)
        done += m
        chunk_id += 1
    p = exceed / float(draws)
    pairs = tuple(
        TukeyPair((int(a_), int(b_)), float(means[b_] - means[a_]), float(q), float(pv), bool(pv < alpha))
        for a_, b_, q, pv in zip(i, j, q_obs, p)
    )
    return TukeyResult(pairs, float(alpha), int(draws), int(seed))
