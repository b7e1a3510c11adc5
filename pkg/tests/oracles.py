"""Independent slow reference implementations used to check the library."""

import itertools
import math

import numpy as np


# ---------------------------------------------------------------- Shapley

def cond_expectation(tree, x, S, node=0):
    """Tree output with features outside S integrated out using training covers."""
    f = tree.feature[node]
    if f < 0:
        return tree.value[node]
    l, r = tree.left[node], tree.right[node]
    if f in S:
        v = x[f]
        if np.isnan(v):
            nxt = l if tree.default_left[node] else r
        else:
            nxt = l if v < tree.threshold[node] else r
        return cond_expectation(tree, x, S, nxt)
    return (tree.cover[l] * cond_expectation(tree, x, S, l)
            + tree.cover[r] * cond_expectation(tree, x, S, r)) / tree.cover[node]


def brute_force_shap(tree, x, n_features, scale=1.0):
    """Exact Shapley values by enumerating every coalition of the tree's features."""
    used = sorted(set(int(f) for f in tree.feature if f >= 0))
    m = len(used)
    phi = np.zeros(n_features)
    for i in used:
        others = [u for u in used if u != i]
        for r in range(len(others) + 1):
            w = math.factorial(r) * math.factorial(m - r - 1) / math.factorial(m)
            for S in itertools.combinations(others, r):
                S = set(S)
                phi[i] += w * (cond_expectation(tree, x, S | {i}) - cond_expectation(tree, x, S))
    return scale * phi


# ---------------------------------------------------------------- fixations

def brute_force_idt(t, x, y, screen, threshold, min_duration, period):
    """Greedy maximal-group segmentation, recomputing dispersion from scratch for every candidate."""
    n = len(t)
    out = []
    i = 0
    while i < n:
        j = i + 1
        while j < n:
            xs, ys = x[i:j + 1], y[i:j + 1]
            if len(set(screen[i:j + 1])) > 1:
                break
            if (max(xs) - min(xs)) + (max(ys) - min(ys)) > threshold:
                break
            j += 1
        if t[j - 1] - t[i] + period >= min_duration * (1 - 1e-9):
            out.append((i, j))
            i = j
        else:
            i += 1
    return out


# ---------------------------------------------------------------- statistics

def pooled_t(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    na, nb = a.size, b.size
    sp2 = (np.sum((a - a.mean()) ** 2) + np.sum((b - b.mean()) ** 2)) / (na + nb - 2)
    return (a.mean() - b.mean()) / math.sqrt(sp2 * (1 / na + 1 / nb))


def auc_pairs(y, s):
    """Mann-Whitney probability that a positive outscores a negative (ties count half)."""
    pos = [v for v, l in zip(s, y) if l == 1]
    neg = [v for v, l in zip(s, y) if l == 0]
    tot = 0.0
    for p in pos:
        for q in neg:
            tot += 1.0 if p > q else 0.5 if p == q else 0.0
    return tot / (len(pos) * len(neg))


def rmssd_loop(d):
    acc = 0.0
    for k in range(len(d) - 1):
        acc += (d[k + 1] - d[k]) ** 2
    return math.sqrt(acc / (len(d) - 1))


# ---------------------------------------------------------------- boosting

def best_root_split(X, g, h, lam, gamma, min_child_weight=0.0):
    """Exhaustive root split search: every feature, every gap between distinct values, both missing sides."""
    G, H = g.sum(), h.sum()
    parent = G * G / (H + lam)
    best = (0.0, None)
    for j in range(X.shape[1]):
        col = X[:, j]
        present = ~np.isnan(col)
        vals = np.unique(col[present])
        gm, hm = g[~present].sum(), h[~present].sum()
        for a, b in zip(vals[:-1], vals[1:]):
            thr = 0.5 * (a + b)
            if thr <= a:
                thr = b
            left = present & (col < thr)
            gl, hl = g[left].sum(), h[left].sum()
            for miss_left in (False, True):
                GL = gl + (gm if miss_left else 0.0)
                HL = hl + (hm if miss_left else 0.0)
                GR, HR = G - GL, H - HL
                if HL < min_child_weight or HR < min_child_weight:
                    continue
                gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent) - gamma
                if gain > best[0] + 1e-12:
                    best = (gain, (j, thr))
    return best
