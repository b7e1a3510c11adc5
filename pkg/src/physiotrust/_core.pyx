# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_fallback.py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, isnan
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"


cdef inline double _gain(double gl, double hl, double gr, double hr, double parent,
                         double lam, double gamma, double mcw) noexcept nogil:
    if hl < mcw or hr < mcw or not (hl + lam > 0) or not (hr + lam > 0):
        return -INFINITY
    return 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent) - gamma


cdef struct Split:
    double gain
    Py_ssize_t col
    double thr
    bint left


cdef Split _search(const double[:, ::1] V, const double[::1] g, const double[::1] h,
                   const cnp.int64_t[:, ::1] S, Py_ssize_t lo, Py_ssize_t hi,
                   const cnp.int64_t *n_present, const cnp.int64_t[::1] features,
                   double G, double H, double lam, double gamma, double mcw,
                   bint missing_routing) noexcept nogil:
    cdef Split best
    cdef double parent = G * G / (H + lam)
    cdef Py_ssize_t k, i, p, col
    cdef double gl, hl, g_pres, h_pres, g_miss, h_miss, gain, xa, xb, gl_d, hl_d
    cdef bint has_missing, cover_left
    cdef cnp.int64_t r
    best.gain = -INFINITY
    best.col = -1
    best.thr = 0.0
    best.left = True
    for k in range(S.shape[0]):
        p = n_present[k]
        if p < 2:
            continue
        col = features[k]
        g_pres = 0.0
        h_pres = 0.0
        for i in range(lo, lo + p):
            r = S[k, i]
            g_pres = g_pres + g[r]
            h_pres = h_pres + h[r]
        g_miss = G - g_pres
        h_miss = H - h_pres
        has_missing = p < hi - lo
        gl = 0.0
        hl = 0.0
        for i in range(lo, lo + p - 1):
            r = S[k, i]
            gl = gl + g[r]
            hl = hl + h[r]
            xa = V[k, i]
            xb = V[k, i + 1]
            if not (xa < xb):
                continue
            cover_left = hl >= (h_pres - hl)
            if has_missing and not missing_routing:
                if cover_left:
                    gl_d = gl + g_miss
                    hl_d = hl + h_miss
                else:
                    gl_d = gl
                    hl_d = hl
                gain = _gain(gl_d, hl_d, G - gl_d, H - hl_d, parent, lam, gamma, mcw)
                if gain > best.gain:
                    best.gain = gain
                    best.col = col
                    best.thr = _threshold(xa, xb)
                    best.left = cover_left
            elif has_missing:
                gain = _gain(gl, hl, G - gl, H - hl, parent, lam, gamma, mcw)
                if gain > best.gain:
                    best.gain = gain
                    best.col = col
                    best.thr = _threshold(xa, xb)
                    best.left = False
                gl_d = gl + g_miss
                hl_d = hl + h_miss
                gain = _gain(gl_d, hl_d, G - gl_d, H - hl_d, parent, lam, gamma, mcw)
                if gain > best.gain:
                    best.gain = gain
                    best.col = col
                    best.thr = _threshold(xa, xb)
                    best.left = True
            else:
                gain = _gain(gl, hl, G - gl, H - hl, parent, lam, gamma, mcw)
                if gain > best.gain:
                    best.gain = gain
                    best.col = col
                    best.thr = _threshold(xa, xb)
                    best.left = cover_left
    return best


def best_split(const double[:, ::1] X, const double[::1] g, const double[::1] h,
               const cnp.int64_t[:, ::1] S, const cnp.int64_t[::1] n_present,
               const cnp.int64_t[::1] features, double G, double H, double lam,
               double gamma, double min_child_weight, bint missing_routing):
    cdef Split best
    cdef Py_ssize_t k, i
    V_a = np.empty((S.shape[0], S.shape[1]), dtype=np.float64)
    cdef double[:, ::1] V = V_a
    with nogil:
        for k in range(S.shape[0]):
            for i in range(S.shape[1]):
                V[k, i] = X[S[k, i], features[k]]
        best = _search(V, g, h, S, 0, S.shape[1], &n_present[0], features, G, H, lam, gamma,
                       min_child_weight, missing_routing)
    return best.gain, best.col, best.thr, bool(best.left)


def grow_tree(const double[:, ::1] X, const double[::1] g, const double[::1] h,
              cnp.int64_t[:, ::1] S, const cnp.int64_t[::1] n_present,
              const cnp.int64_t[::1] features, Py_ssize_t max_depth, double lam, double gamma,
              double min_child_weight, bint missing_routing):
    cdef Py_ssize_t d = S.shape[0], m = S.shape[1]
    cdef Py_ssize_t cap = 2 * m - 1
    if max_depth < 30 and (1 << (max_depth + 1)) - 1 < cap:
        cap = (1 << (max_depth + 1)) - 1
    if cap < 1:
        cap = 1
    feature_a = np.full(cap, -1, dtype=np.int64)
    threshold_a = np.zeros(cap)
    left_a = np.full(cap, -1, dtype=np.int64)
    right_a = np.full(cap, -1, dtype=np.int64)
    default_a = np.zeros(cap, dtype=np.uint8)
    value_a = np.zeros(cap)
    cover_a = np.zeros(cap)
    gain_a = np.zeros(cap)
    np_store_a = np.empty((cap, d), dtype=np.int64)
    np_store_a[0] = n_present
    stack_a = np.empty((cap, 4), dtype=np.int64)
    buf_a = np.empty(max(m, 1), dtype=np.int64)
    vbuf_a = np.empty(max(m, 1), dtype=np.float64)
    V_a = np.empty((d, m), dtype=np.float64)
    goes_a = np.zeros(X.shape[0], dtype=np.uint8)
    member_a = np.zeros(X.shape[0], dtype=np.uint8)
    cdef cnp.int64_t[::1] feature = feature_a, left = left_a, right = right_a, buf = buf_a
    cdef double[::1] threshold = threshold_a, value = value_a, cover = cover_a, gain = gain_a
    cdef cnp.uint8_t[::1] default_left = default_a, goes_left = goes_a, member = member_a
    cdef cnp.int64_t[:, ::1] np_store = np_store_a, stack = stack_a
    cdef double[:, ::1] V = V_a
    cdef double[::1] vbuf = vbuf_a
    cdef Py_ssize_t top = 1, n_nodes = 1, node, lo, hi, depth, i, k, nl, nr, npl, lid, rid
    cdef double G, H, xv
    cdef cnp.int64_t r, rmin, rmax
    cdef Split best
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    stack[0, 3] = 0
    with nogil:
        for k in range(d):
            for i in range(m):
                V[k, i] = X[S[k, i], features[k]]
        while top > 0:
            top -= 1
            node = stack[top, 0]
            lo = stack[top, 1]
            hi = stack[top, 2]
            depth = stack[top, 3]
            # sum in ascending row order, independent of column order
            rmin = S[0, lo]
            rmax = rmin
            for i in range(lo, hi):
                r = S[0, i]
                member[r] = 1
                if r < rmin:
                    rmin = r
                if r > rmax:
                    rmax = r
            G = 0.0
            H = 0.0
            for r in range(rmin, rmax + 1):
                if member[r]:
                    G = G + g[r]
                    H = H + h[r]
                    member[r] = 0
            cover[node] = H
            best.gain = -INFINITY
            if depth < max_depth and hi - lo >= 2:
                best = _search(V, g, h, S, lo, hi, &np_store[node, 0], features, G, H, lam,
                               gamma, min_child_weight, missing_routing)
            if not (best.gain > 0):
                value[node] = -G / (H + lam)
                continue
            for i in range(lo, hi):
                r = S[0, i]
                xv = X[r, best.col]
                if isnan(xv):
                    goes_left[r] = best.left
                else:
                    goes_left[r] = xv < best.thr
            lid = n_nodes
            rid = n_nodes + 1
            n_nodes += 2
            nl = 0
            for k in range(d):
                nl = 0
                nr = 0
                npl = 0
                for i in range(lo, hi):
                    r = S[k, i]
                    if goes_left[r]:
                        S[k, lo + nl] = r
                        V[k, lo + nl] = V[k, i]
                        if i - lo < np_store[node, k]:
                            npl += 1
                        nl += 1
                    else:
                        buf[nr] = r
                        vbuf[nr] = V[k, i]
                        nr += 1
                for i in range(nr):
                    S[k, lo + nl + i] = buf[i]
                    V[k, lo + nl + i] = vbuf[i]
                np_store[lid, k] = npl
                np_store[rid, k] = np_store[node, k] - npl
            feature[node] = best.col
            threshold[node] = best.thr
            default_left[node] = best.left
            gain[node] = best.gain
            left[node] = lid
            right[node] = rid
            stack[top, 0] = rid
            stack[top, 1] = lo + nl
            stack[top, 2] = hi
            stack[top, 3] = depth + 1
            top += 1
            stack[top, 0] = lid
            stack[top, 1] = lo
            stack[top, 2] = lo + nl
            stack[top, 3] = depth + 1
            top += 1
    return (feature_a[:n_nodes], threshold_a[:n_nodes], left_a[:n_nodes], right_a[:n_nodes],
            default_a[:n_nodes], value_a[:n_nodes], cover_a[:n_nodes], gain_a[:n_nodes])


cdef inline double _threshold(double lo, double hi) noexcept nogil:
    cdef double thr = (lo + hi) / 2.0
    if not (thr > lo):
        thr = hi
    return thr


cdef inline Py_ssize_t _descend(const double[:, ::1] X, Py_ssize_t row, const cnp.int64_t[::1] feature,
                                const double[::1] threshold, const cnp.int64_t[::1] left,
                                const cnp.int64_t[::1] right, const cnp.uint8_t[::1] default_left,
                                Py_ssize_t node) noexcept nogil:
    cdef double xv
    while feature[node] >= 0:
        xv = X[row, feature[node]]
        if isnan(xv):
            if default_left[node]:
                node = left[node]
            else:
                node = right[node]
        elif xv < threshold[node]:
            node = left[node]
        else:
            node = right[node]
    return node


def predict_margin(const double[:, ::1] X, const cnp.int64_t[::1] feature, const double[::1] threshold,
                   const cnp.int64_t[::1] left, const cnp.int64_t[::1] right,
                   const cnp.uint8_t[::1] default_left, const double[::1] value,
                   const cnp.int64_t[::1] roots, double base, double eta):
    cdef Py_ssize_t n = X.shape[0], i, k
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] m = out
    cdef double acc
    with nogil:
        for i in range(n):
            acc = base
            for k in range(roots.shape[0]):
                acc += eta * value[_descend(X, i, feature, threshold, left, right, default_left, roots[k])]
            m[i] = acc
    return out


def leaf_index(const double[:, ::1] X, const cnp.int64_t[::1] feature, const double[::1] threshold,
               const cnp.int64_t[::1] left, const cnp.int64_t[::1] right,
               const cnp.uint8_t[::1] default_left, Py_ssize_t root):
    cdef Py_ssize_t n = X.shape[0], i
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _descend(X, i, feature, threshold, left, right, default_left, root)
    return out


# ---------------------------------------------------------------- tree SHAP

cdef struct PathElement:
    Py_ssize_t feature
    double zero_fraction
    double one_fraction
    double pweight


cdef struct TreeView:
    const cnp.int64_t *feature
    const double *threshold
    const cnp.int64_t *left
    const cnp.int64_t *right
    const cnp.uint8_t *default_left
    const double *value
    const double *cover
    const double *x
    double *phi
    double scale


cdef void _extend(PathElement *path, Py_ssize_t depth, double zero_fraction,
                  double one_fraction, Py_ssize_t feature_index) noexcept nogil:
    cdef Py_ssize_t i
    path[depth].feature = feature_index
    path[depth].zero_fraction = zero_fraction
    path[depth].one_fraction = one_fraction
    path[depth].pweight = 1.0 if depth == 0 else 0.0
    for i in range(depth - 1, -1, -1):
        path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / <double>(depth + 1)
        path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / <double>(depth + 1)


cdef void _unwind(PathElement *path, Py_ssize_t depth, Py_ssize_t index) noexcept nogil:
    cdef double one = path[index].one_fraction
    cdef double zero = path[index].zero_fraction
    cdef double nxt = path[depth].pweight
    cdef double tmp
    cdef Py_ssize_t i
    for i in range(depth - 1, -1, -1):
        if one != 0:
            tmp = path[i].pweight
            path[i].pweight = nxt * (depth + 1) / <double>((i + 1) * one)
            nxt = tmp - path[i].pweight * zero * (depth - i) / <double>(depth + 1)
        else:
            path[i].pweight = path[i].pweight * (depth + 1) / <double>(zero * (depth - i))
    for i in range(index, depth):
        path[i].feature = path[i + 1].feature
        path[i].zero_fraction = path[i + 1].zero_fraction
        path[i].one_fraction = path[i + 1].one_fraction


cdef double _unwound_sum(PathElement *path, Py_ssize_t depth, Py_ssize_t index) noexcept nogil:
    cdef double one = path[index].one_fraction
    cdef double zero = path[index].zero_fraction
    cdef double nxt = path[depth].pweight
    cdef double total = 0.0
    cdef double tmp
    cdef Py_ssize_t i
    if one != 0:
        for i in range(depth - 1, -1, -1):
            tmp = nxt / <double>((i + 1) * one)
            total += tmp
            nxt = path[i].pweight - tmp * zero * (depth - i)
    else:
        for i in range(depth - 1, -1, -1):
            total += path[i].pweight / <double>(zero * (depth - i))
    return total * (depth + 1)


cdef void _recurse(TreeView *tv, Py_ssize_t node, PathElement *parent_path, Py_ssize_t depth,
                   double zero_fraction, double one_fraction, Py_ssize_t feature_index) noexcept nogil:
    # parent_path holds depth elements; this level's copy lives right after them
    cdef PathElement *path = parent_path + depth
    cdef Py_ssize_t i, k, f, hot, cold
    cdef double w, v, c, xv, incoming_zero = 1.0, incoming_one = 1.0
    cdef bint go_left
    for i in range(depth):
        path[i] = parent_path[i]
    _extend(path, depth, zero_fraction, one_fraction, feature_index)
    f = tv.feature[node]
    if f < 0:
        v = tv.scale * tv.value[node]
        for i in range(1, depth + 1):
            w = _unwound_sum(path, depth, i)
            tv.phi[path[i].feature] += w * (path[i].one_fraction - path[i].zero_fraction) * v
        return
    xv = tv.x[f]
    if isnan(xv):
        go_left = tv.default_left[node] != 0
    else:
        go_left = xv < tv.threshold[node]
    if go_left:
        hot = tv.left[node]
        cold = tv.right[node]
    else:
        hot = tv.right[node]
        cold = tv.left[node]
    c = tv.cover[node]
    for k in range(depth + 1):
        if path[k].feature == f:
            incoming_zero = path[k].zero_fraction
            incoming_one = path[k].one_fraction
            _unwind(path, depth, k)
            depth -= 1
            break
    _recurse(tv, hot, path, depth + 1, tv.cover[hot] / c * incoming_zero, incoming_one, f)
    _recurse(tv, cold, path, depth + 1, tv.cover[cold] / c * incoming_zero, 0.0, f)


cdef double _expectation(TreeView *tv, Py_ssize_t node) noexcept nogil:
    if tv.feature[node] < 0:
        return tv.value[node]
    cdef Py_ssize_t l = tv.left[node], r = tv.right[node]
    cdef double c = tv.cover[node]
    return (tv.cover[l] / c) * _expectation(tv, l) + (tv.cover[r] / c) * _expectation(tv, r)


cdef Py_ssize_t _max_depth(TreeView *tv, Py_ssize_t node) noexcept nogil:
    if tv.feature[node] < 0:
        return 0
    cdef Py_ssize_t a = _max_depth(tv, tv.left[node]), b = _max_depth(tv, tv.right[node])
    return 1 + (a if a > b else b)


def tree_shap(const double[::1] x, const cnp.int64_t[::1] feature, const double[::1] threshold,
              const cnp.int64_t[::1] left, const cnp.int64_t[::1] right,
              const cnp.uint8_t[::1] default_left, const double[::1] value,
              const double[::1] cover, Py_ssize_t root, double scale, double[::1] phi):
    cdef TreeView tv
    cdef Py_ssize_t D, n_slots
    cdef PathElement *buf
    cdef double expect
    tv.feature = &feature[0]
    tv.threshold = &threshold[0]
    tv.left = &left[0]
    tv.right = &right[0]
    tv.default_left = &default_left[0]
    tv.value = &value[0]
    tv.cover = &cover[0]
    tv.x = &x[0]
    tv.phi = &phi[0]
    tv.scale = scale
    D = _max_depth(&tv, root)
    n_slots = (D + 2) * (D + 3) // 2 + 1
    buf = <PathElement *> malloc(n_slots * sizeof(PathElement))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            _recurse(&tv, root, buf, 0, 1.0, 1.0, -1)
            expect = _expectation(&tv, root)
    finally:
        free(buf)
    return scale * expect


# ---------------------------------------------------------------- I-DT

def idt(const double[::1] t, const double[::1] x, const double[::1] y, const cnp.int64_t[::1] screen,
        double dispersion_threshold, double min_duration, double sample_period):
    cdef Py_ssize_t n = t.shape[0], i = 0, j, m = 0
    cdef double xmin, xmax, ymin, ymax, nxmin, nxmax, nymin, nymax, duration
    starts = np.empty(n, dtype=np.int64)
    stops = np.empty(n, dtype=np.int64)
    disps = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] st = starts
    cdef cnp.int64_t[::1] sp = stops
    cdef double[::1] dp = disps
    with nogil:
        while i < n:
            xmin = x[i]
            xmax = x[i]
            ymin = y[i]
            ymax = y[i]
            j = i + 1
            while j < n and screen[j] == screen[i]:
                nxmin = xmin if xmin < x[j] else x[j]
                nxmax = xmax if xmax > x[j] else x[j]
                nymin = ymin if ymin < y[j] else y[j]
                nymax = ymax if ymax > y[j] else y[j]
                if (nxmax - nxmin) + (nymax - nymin) > dispersion_threshold:
                    break
                xmin = nxmin
                xmax = nxmax
                ymin = nymin
                ymax = nymax
                j += 1
            duration = t[j - 1] - t[i] + sample_period
            if duration >= min_duration * (1.0 - 1e-9):
                st[m] = i
                sp[m] = j
                dp[m] = (xmax - xmin) + (ymax - ymin)
                m += 1
                i = j
            else:
                i += 1
    return starts[:m].copy(), stops[:m].copy(), disps[:m].copy()
