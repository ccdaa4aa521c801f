"""Compiled kernels for exact greedy tree growth and traversal."""

import numpy as np
from numba import njit

# relative gain slack for tie detection: gains closer than this count as equal
TIE_RTOL = 1e-9


@njit(cache=True, nogil=True)
def soft_threshold(G, alpha):
    if G > alpha:
        return G - alpha
    if G < -alpha:
        return G + alpha
    return 0.0


@njit(cache=True, nogil=True)
def _score(G, H, lam, alpha):
    t = soft_threshold(G, alpha)
    return t * t / (H + lam)


@njit(cache=True, nogil=True)
def _beats(gain, best):
    slack = TIE_RTOL * max(1.0, abs(best))
    return gain > best + slack


@njit(cache=True, nogil=True)
def node_best_split(X, g, h, order, feats, lo, hi, lam, alpha, gamma, min_child_weight):
    """Scan every feature of one node and return the best split.

    ``order[fi, lo:hi]`` holds the node's row ids sorted by feature ``feats[fi]``
    with NaN rows last. Returns (feature position, threshold, gain, default_left);
    feature position is -1 when no split has positive gain.
    """
    G = 0.0
    H = 0.0
    for i in range(lo, hi):
        r = order[0, i]
        G += g[r]
        H += h[r]
    parent = _score(G, H, lam, alpha)

    best_fi = -1
    best_thr = 0.0
    best_gain = 0.0
    best_dl = False
    if hi - lo < 2:
        return best_fi, best_thr, best_gain, best_dl

    for fi in range(feats.shape[0]):
        f = feats[fi]
        # locate the missing tail
        end = hi
        while end > lo and np.isnan(X[order[fi, end - 1], f]):
            end -= 1
        Gm = 0.0
        Hm = 0.0
        for i in range(end, hi):
            r = order[fi, i]
            Gm += g[r]
            Hm += h[r]
        has_missing = end < hi

        GL = 0.0
        HL = 0.0
        for i in range(lo, end - 1):
            r = order[fi, i]
            GL += g[r]
            HL += h[r]
            a = X[r, f]
            b = X[order[fi, i + 1], f]
            if a == b:
                continue
            thr = 0.5 * (a + b)
            if thr <= a:
                thr = b
            # missing values routed right
            GR = G - GL
            HR = H - HL
            if HL >= min_child_weight and HR >= min_child_weight and HL + lam > 0 and HR + lam > 0:
                gain = 0.5 * (_score(GL, HL, lam, alpha) + _score(GR, HR, lam, alpha) - parent) - gamma
                if _beats(gain, best_gain):
                    best_fi = fi
                    best_thr = thr
                    best_gain = gain
                    best_dl = False
            if has_missing:
                GL2 = GL + Gm
                HL2 = HL + Hm
                GR2 = G - GL2
                HR2 = H - HL2
                if HL2 >= min_child_weight and HR2 >= min_child_weight and HL2 + lam > 0 and HR2 + lam > 0:
                    gain = 0.5 * (_score(GL2, HL2, lam, alpha) + _score(GR2, HR2, lam, alpha) - parent) - gamma
                    if _beats(gain, best_gain):
                        best_fi = fi
                        best_thr = thr
                        best_gain = gain
                        best_dl = True
    return best_fi, best_thr, best_gain, best_dl


@njit(cache=True, nogil=True)
def grow_tree(X, g, h, order, feats, max_depth, lam, alpha, gamma, min_child_weight):
    """Depth-first exact greedy growth.

    Returns parallel node arrays (feature, threshold, left, right, default_left,
    value, gain, cover). Leaves have feature == -1 and left == right == -1.
    """
    m = order.shape[1]
    cap = 2 ** (max_depth + 1) - 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    default_left = np.zeros(cap, dtype=np.bool_)
    value = np.zeros(cap)
    gain_arr = np.zeros(cap)
    cover = np.zeros(cap)

    goleft = np.zeros(X.shape[0], dtype=np.bool_)
    buf = np.empty(m, dtype=order.dtype)

    # stack of (node, lo, hi, depth)
    stack = np.empty((cap, 4), dtype=np.int64)
    sp = 0
    stack[sp, 0] = 0
    stack[sp, 1] = 0
    stack[sp, 2] = m
    stack[sp, 3] = 0
    sp += 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node = stack[sp, 0]
        lo = stack[sp, 1]
        hi = stack[sp, 2]
        depth = stack[sp, 3]

        G = 0.0
        H = 0.0
        for i in range(lo, hi):
            r = order[0, i]
            G += g[r]
            H += h[r]
        cover[node] = H
        value[node] = -soft_threshold(G, alpha) / (H + lam)

        if depth >= max_depth:
            continue
        fi, thr, gain, dl = node_best_split(X, g, h, order, feats, lo, hi, lam, alpha, gamma, min_child_weight)
        if fi < 0:
            continue
        f = feats[fi]
        for i in range(lo, hi):
            r = order[fi, i]
            x = X[r, f]
            if np.isnan(x):
                goleft[r] = dl
            else:
                goleft[r] = x < thr
        n_left = 0
        for k in range(feats.shape[0]):
            nl = 0
            for i in range(lo, hi):
                r = order[k, i]
                if goleft[r]:
                    buf[lo + nl] = r
                    nl += 1
            nr = 0
            for i in range(lo, hi):
                r = order[k, i]
                if not goleft[r]:
                    buf[lo + nl + nr] = r
                    nr += 1
            for i in range(lo, hi):
                order[k, i] = buf[i]
            n_left = nl

        feature[node] = f
        threshold[node] = thr
        default_left[node] = dl
        gain_arr[node] = gain
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        # push right first so the left subtree is numbered first
        stack[sp, 0] = rc
        stack[sp, 1] = lo + n_left
        stack[sp, 2] = hi
        stack[sp, 3] = depth + 1
        sp += 1
        stack[sp, 0] = lc
        stack[sp, 1] = lo
        stack[sp, 2] = lo + n_left
        stack[sp, 3] = depth + 1
        sp += 1

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        default_left[:n_nodes],
        value[:n_nodes],
        gain_arr[:n_nodes],
        cover[:n_nodes],
    )


@njit(cache=True, nogil=True)
def apply_tree(X, feature, threshold, left, right, default_left):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        node = 0
        while left[node] >= 0:
            x = X[r, feature[node]]
            if np.isnan(x):
                node = left[node] if default_left[node] else right[node]
            elif x < threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out
