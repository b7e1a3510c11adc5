"""Pure-Python/numpy implementations of the hot kernels.

Every function here has a twin in ``_core.pyx`` with the same signature and
bit-identical results; ``physiotrust.kernels`` picks one at import time.
"""

import numpy as np

BACKEND = "python"

_NEG_INF = -np.inf


def best_split(X, g, h, S, n_present, features, G, H, lam, gamma, min_child_weight, missing_routing):
    """Exact greedy split search over pre-sorted row indices.

    ``S[k, :n_present[k]]`` holds the node's rows with a present value of
    column ``features[k]``, sorted ascending; the remaining entries are its
    rows with a missing value.  Returns ``(gain, column, threshold,
    default_left)``; gain is -inf when no admissible split exists.
    """
    best_gain = _NEG_INF
    best_col = -1
    best_thr = 0.0
    best_left = True
    parent = G * G / (H + lam)
    for k in range(S.shape[0]):
        p = int(n_present[k])
        if p < 2:
            continue
        col = int(features[k])
        idx = S[k, :p]
        xs = X[idx, col]
        gl = np.cumsum(g[idx])[:-1]
        hl = np.cumsum(h[idx])[:-1]
        g_pres = gl[-1] + g[idx[-1]] if p > 1 else g[idx[0]]
        h_pres = hl[-1] + h[idx[-1]] if p > 1 else h[idx[0]]
        g_miss = G - g_pres
        h_miss = H - h_pres
        has_missing = p < S.shape[1]
        valid = xs[:-1] < xs[1:]
        # missing rows sent right
        gr = G - gl
        hr = H - hl
        # default side when nothing (or routing disabled) decides: larger present cover
        cover_left = hl >= (h_pres - hl)
        if has_missing and not missing_routing:
            gl_d = np.where(cover_left, gl + g_miss, gl)
            hl_d = np.where(cover_left, hl + h_miss, hl)
            gain_r = _gain(gl_d, hl_d, G - gl_d, H - hl_d, parent, lam, gamma, min_child_weight, valid)
            gain_l = np.full(gain_r.shape, _NEG_INF)
            left_if_r = cover_left
        elif has_missing:
            gain_r = _gain(gl, hl, gr, hr, parent, lam, gamma, min_child_weight, valid)
            gl2 = gl + g_miss
            hl2 = hl + h_miss
            gain_l = _gain(gl2, hl2, G - gl2, H - hl2, parent, lam, gamma, min_child_weight, valid)
            left_if_r = np.zeros(gain_r.shape, dtype=bool)
        else:
            gain_r = _gain(gl, hl, gr, hr, parent, lam, gamma, min_child_weight, valid)
            gain_l = np.full(gain_r.shape, _NEG_INF)
            left_if_r = cover_left
        both = np.empty(2 * gain_r.size)
        both[0::2] = gain_r
        both[1::2] = gain_l
        j = int(np.argmax(both))
        if both[j] > best_gain:
            best_gain = float(both[j])
            i = j // 2
            best_col = col
            best_thr = _threshold(xs[i], xs[i + 1])
            best_left = bool(left_if_r[i]) if j % 2 == 0 else True
    return best_gain, best_col, best_thr, best_left


def _gain(gl, hl, gr, hr, parent, lam, gamma, mcw, valid):
    ok = valid & (hl >= mcw) & (hr >= mcw) & (hl + lam > 0) & (hr + lam > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent) - gamma
    return np.where(ok, gain, _NEG_INF)


def _threshold(lo, hi):
    thr = (lo + hi) / 2.0
    if not thr > lo:
        thr = hi
    return float(thr)


def grow_tree(X, g, h, S, n_present, features, max_depth, lam, gamma, min_child_weight, missing_routing):
    """Grow one tree depth-first; returns the flat node arrays.

    ``S`` (features x rows, presorted, missing last) is partitioned in place.
    Node sums run sequentially in ascending row order so that they do not
    depend on which column comes first.
    """
    d, m = S.shape
    cap = max(1, min(2 ** (max_depth + 1) - 1, 2 * m - 1))
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    default_left = np.zeros(cap, dtype=np.uint8)
    value = np.zeros(cap)
    cover = np.zeros(cap)
    gain = np.zeros(cap)
    np_store = np.empty((cap, d), dtype=np.int64)
    np_store[0] = n_present
    goes_left = np.zeros(X.shape[0], dtype=bool)
    n_nodes = 1
    stack = [(0, 0, m, 0)]
    while stack:
        node, lo, hi, depth = stack.pop()
        rows = S[0, lo:hi]
        ordered = np.sort(rows)
        G = float(np.cumsum(g[ordered])[-1])
        H = float(np.cumsum(h[ordered])[-1])
        cover[node] = H
        best = None
        if depth < max_depth and hi - lo >= 2:
            cand = best_split(X, g, h, S[:, lo:hi], np_store[node], features, G, H,
                              lam, gamma, min_child_weight, missing_routing)
            if cand[0] > 0:
                best = cand
        if best is None:
            value[node] = -G / (H + lam)
            continue
        sgain, col, thr, dleft = best
        xv = X[rows, col]
        goes_left[rows] = np.where(np.isnan(xv), dleft, xv < thr)
        block = S[:, lo:hi]
        mask = goes_left[block]
        nl = int(np.count_nonzero(mask[0]))
        present = np.arange(hi - lo)[None, :] < np_store[node][:, None]
        lid, rid = n_nodes, n_nodes + 1
        n_nodes += 2
        np_store[lid] = np.count_nonzero(mask & present, axis=1)
        np_store[rid] = np_store[node] - np_store[lid]
        S[:, lo:hi] = np.concatenate([block[mask].reshape(d, nl), block[~mask].reshape(d, hi - lo - nl)], axis=1)
        feature[node] = col
        threshold[node] = thr
        default_left[node] = 1 if dleft else 0
        gain[node] = sgain
        left[node] = lid
        right[node] = rid
        stack.append((rid, lo + nl, hi, depth + 1))
        stack.append((lid, lo, lo + nl, depth + 1))
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            default_left[:n_nodes], value[:n_nodes], cover[:n_nodes], gain[:n_nodes])


def predict_margin(X, feature, threshold, left, right, default_left, value, roots, base, eta):
    """Sequential margin accumulation: base, then += eta * leaf for each tree in order."""
    n = X.shape[0]
    margin = np.full(n, base, dtype=np.float64)
    rows = np.arange(n)
    for root in roots:
        node = np.full(n, root, dtype=np.int64)
        while True:
            f = feature[node]
            inner = f >= 0
            if not inner.any():
                break
            r = rows[inner]
            nd = node[inner]
            xv = X[r, f[inner]]
            go_left = np.where(np.isnan(xv), default_left[nd], xv < threshold[nd])
            node[inner] = np.where(go_left, left[nd], right[nd])
        margin += eta * value[node]
    return margin


def leaf_index(X, feature, threshold, left, right, default_left, root):
    n = X.shape[0]
    rows = np.arange(n)
    node = np.full(n, root, dtype=np.int64)
    while True:
        f = feature[node]
        inner = f >= 0
        if not inner.any():
            return node
        r = rows[inner]
        nd = node[inner]
        xv = X[r, f[inner]]
        go_left = np.where(np.isnan(xv), default_left[nd], xv < threshold[nd])
        node[inner] = np.where(go_left, left[nd], right[nd])


def tree_shap(x, feature, threshold, left, right, default_left, value, cover, root, scale, phi):
    """Add path-dependent Shapley values of one tree for row ``x`` into ``phi``.

    Leaf values are multiplied by ``scale``.  Returns the tree's cover-weighted
    expectation (also scaled).
    """
    # path element: [feature, zero_fraction, one_fraction, pweight]
    _recurse(x, feature, threshold, left, right, default_left, value, cover, scale, phi,
             root, [], 1.0, 1.0, -1)
    return scale * _expectation(feature, left, right, value, cover, root)


def _expectation(feature, left, right, value, cover, node):
    if feature[node] < 0:
        return float(value[node])
    l, r = left[node], right[node]
    c = cover[node]
    return (cover[l] / c) * _expectation(feature, left, right, value, cover, l) + \
        (cover[r] / c) * _expectation(feature, left, right, value, cover, r)


def _extend(path, zero_fraction, one_fraction, feature_index):
    depth = len(path)
    path.append([feature_index, zero_fraction, one_fraction, 1.0 if depth == 0 else 0.0])
    for i in range(depth - 1, -1, -1):
        path[i + 1][3] += one_fraction * path[i][3] * (i + 1) / (depth + 1)
        path[i][3] = zero_fraction * path[i][3] * (depth - i) / (depth + 1)


def _unwind(path, index):
    depth = len(path) - 1
    one = path[index][2]
    zero = path[index][1]
    nxt = path[depth][3]
    for i in range(depth - 1, -1, -1):
        if one != 0:
            tmp = path[i][3]
            path[i][3] = nxt * (depth + 1) / ((i + 1) * one)
            nxt = tmp - path[i][3] * zero * (depth - i) / (depth + 1)
        else:
            path[i][3] = path[i][3] * (depth + 1) / (zero * (depth - i))
    for i in range(index, depth):
        path[i][0] = path[i + 1][0]
        path[i][1] = path[i + 1][1]
        path[i][2] = path[i + 1][2]
    path.pop()


def _unwound_sum(path, index):
    depth = len(path) - 1
    one = path[index][2]
    zero = path[index][1]
    nxt = path[depth][3]
    total = 0.0
    if one != 0:
        for i in range(depth - 1, -1, -1):
            tmp = nxt / ((i + 1) * one)
            total += tmp
            nxt = path[i][3] - tmp * zero * (depth - i)
    else:
        for i in range(depth - 1, -1, -1):
            total += path[i][3] / (zero * (depth - i))
    return total * (depth + 1)


def _recurse(x, feature, threshold, left, right, default_left, value, cover, scale, phi,
             node, parent_path, zero_fraction, one_fraction, feature_index):
    path = [list(e) for e in parent_path]
    _extend(path, zero_fraction, one_fraction, feature_index)
    f = feature[node]
    if f < 0:
        v = scale * value[node]
        for i in range(1, len(path)):
            w = _unwound_sum(path, i)
            phi[path[i][0]] += w * (path[i][2] - path[i][1]) * v
        return
    xv = x[f]
    if xv != xv:
        go_left = bool(default_left[node])
    else:
        go_left = xv < threshold[node]
    hot, cold = (left[node], right[node]) if go_left else (right[node], left[node])
    c = cover[node]
    incoming_zero = 1.0
    incoming_one = 1.0
    for k in range(len(path)):
        if path[k][0] == f:
            incoming_zero = path[k][1]
            incoming_one = path[k][2]
            _unwind(path, k)
            break
    _recurse(x, feature, threshold, left, right, default_left, value, cover, scale, phi,
             hot, path, cover[hot] / c * incoming_zero, incoming_one, f)
    _recurse(x, feature, threshold, left, right, default_left, value, cover, scale, phi,
             cold, path, cover[cold] / c * incoming_zero, 0.0, f)


def idt(t, x, y, screen, dispersion_threshold, min_duration, sample_period):
    """Greedy dispersion-threshold fixation identification.

    Returns ``(starts, stops, dispersions)``: half-open sample ranges of the
    emitted fixations.  A group grows while (x-range + y-range) stays within the
    threshold and the screen id is unchanged; it is emitted when its duration
    (last - first sample time + one sample period) reaches ``min_duration``,
    otherwise scanning resumes one sample later.
    """
    n = len(t)
    starts, stops, disps = [], [], []
    i = 0
    while i < n:
        xmin = xmax = x[i]
        ymin = ymax = y[i]
        j = i + 1
        while j < n and screen[j] == screen[i]:
            nxmin = min(xmin, x[j])
            nxmax = max(xmax, x[j])
            nymin = min(ymin, y[j])
            nymax = max(ymax, y[j])
            if (nxmax - nxmin) + (nymax - nymin) > dispersion_threshold:
                break
            xmin, xmax, ymin, ymax = nxmin, nxmax, nymin, nymax
            j += 1
        duration = t[j - 1] - t[i] + sample_period
        if duration >= min_duration * (1.0 - 1e-9):
            starts.append(i)
            stops.append(j)
            disps.append((xmax - xmin) + (ymax - ymin))
            i = j
        else:
            i += 1
    return (np.asarray(starts, dtype=np.int64), np.asarray(stops, dtype=np.int64),
            np.asarray(disps, dtype=np.float64))
