"""Compiled kernels for regression trees, forests and out-of-bag permutation scoring.

All randomness flows through an explicit splitmix64 state threaded in and out
of every kernel, so a fit is a pure function of its seed: independent of
numpy/numba global RNG state, of thread scheduling and of call order.

Trees are flat parallel arrays: feature[i] < 0 marks a leaf; otherwise rows
with X[:, feature[i]] <= threshold[i] go to left[i], the rest to right[i].
Leaf predictions are sum(y) / (count + l2_leaf), the regularized leaf weight
(l2_leaf = 0 gives the plain node mean used by forests).
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64
_GOLDEN = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_STREAM = U64(0xD6E8FEB86659FD93)

NO_DEPTH_LIMIT = 1 << 30


@njit(cache=True, inline="always")
def _rng_next(state):
    """splitmix64: returns (new_state, 64 uniform bits)."""
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    z = z ^ (z >> U64(31))
    return state, z


@njit(cache=True, inline="always")
def _rng_unit(state):
    """(new_state, float in [0, 1)) with 53 random bits."""
    state, z = _rng_next(state)
    return state, (z >> U64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def _rng_below(state, n):
    """(new_state, int in [0, n)); modulo bias is negligible for n << 2^64."""
    state, z = _rng_next(state)
    return state, np.int64(z % U64(n))


@njit(cache=True, inline="always")
def mix_seed(state, salt):
    """Independent child stream derived from (state, salt)."""
    s = (state ^ (U64(salt) * _STREAM)) + _GOLDEN
    s, _ = _rng_next(s)
    s, _ = _rng_next(s)
    return s


@njit(cache=True)
def draw_bootstrap(n, state):
    """n draws with replacement; returns (row indices, in-bag mask, state)."""
    idx = np.empty(n, np.int64)
    inbag = np.zeros(n, np.bool_)
    for i in range(n):
        state, j = _rng_below(state, n)
        idx[i] = j
        inbag[j] = True
    return idx, inbag, state


@njit(cache=True)
def grow_tree(X, y, sample, extra_mode, mtry, min_node, max_depth, l2_leaf, state):
    """Grow one regression tree on the rows listed in `sample`.

    Splits minimize the summed child SSE over mtry randomly drawn candidate
    features. In rf mode every midpoint between sorted distinct values is
    scanned; in extra mode one uniform cut is drawn per candidate feature.
    A node becomes a leaf when its size is below min_node, its depth reaches
    max_depth, its targets are constant, or no candidate admits a valid split.

    Returns (feature, threshold, left, right, value, n_nodes, used, state);
    arrays are over-allocated, valid up to n_nodes.
    """
    n = sample.shape[0]
    d = X.shape[1]
    cap = 2 * n + 1

    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap, np.float64)
    used = np.zeros(d, np.bool_)

    order = sample.copy()
    tmp = np.empty(n, np.int64)
    vals = np.empty(n, np.float64)
    ys = np.empty(n, np.float64)
    sv = np.empty(n, np.float64)
    sy = np.empty(n, np.float64)
    pool = np.empty(d, np.int64)

    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)

    n_nodes = 1
    sp = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_depth[0] = 0
    sp = 1

    m = mtry if mtry < d else d

    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        lo = stack_lo[sp]
        hi = stack_hi[sp]
        depth = stack_depth[sp]
        nn = hi - lo

        s = 0.0
        ss = 0.0
        for i in range(nn):
            yi = y[order[lo + i]]
            ys[i] = yi
            s += yi
            ss += yi * yi
        value[node] = s / (nn + l2_leaf)

        if nn < min_node or depth >= max_depth:
            continue
        const = True
        y0 = ys[0]
        for i in range(1, nn):
            if ys[i] != y0:
                const = False
                break
        if const:
            continue

        # partial Fisher-Yates: pool[0:m] are the candidate features
        for j in range(d):
            pool[j] = j
        if m < d:
            for t in range(m):
                state, r = _rng_below(state, d - t)
                j = t + r
                pj = pool[j]
                pool[j] = pool[t]
                pool[t] = pj

        best_score = np.inf
        best_f = -1
        best_thr = 0.0

        for t in range(m):
            f = pool[t]
            for i in range(nn):
                vals[i] = X[order[lo + i], f]

            if extra_mode:
                lo_v = vals[0]
                hi_v = vals[0]
                for i in range(1, nn):
                    v = vals[i]
                    if v < lo_v:
                        lo_v = v
                    if v > hi_v:
                        hi_v = v
                if hi_v <= lo_v:
                    continue
                state, u = _rng_unit(state)
                cut = lo_v + u * (hi_v - lo_v)
                if cut >= hi_v:
                    cut = lo_v
                nl = 0
                sl = 0.0
                ssl = 0.0
                for i in range(nn):
                    if vals[i] <= cut:
                        nl += 1
                        sl += ys[i]
                        ssl += ys[i] * ys[i]
                nr = nn - nl
                sr = s - sl
                ssr = ss - ssl
                score = (ssl - sl * sl / nl) + (ssr - sr * sr / nr)
                if score < best_score:
                    best_score = score
                    best_f = f
                    best_thr = cut
            else:
                # co-sort (vals, ys); insertion sort avoids per-call allocation
                # at the small node sizes that dominate a grown tree
                if nn <= 64:
                    for i in range(nn):
                        sv[i] = vals[i]
                        sy[i] = ys[i]
                    for i in range(1, nn):
                        v = sv[i]
                        w = sy[i]
                        j = i - 1
                        while j >= 0 and sv[j] > v:
                            sv[j + 1] = sv[j]
                            sy[j + 1] = sy[j]
                            j -= 1
                        sv[j + 1] = v
                        sy[j + 1] = w
                else:
                    srt = np.argsort(vals[:nn])
                    for i in range(nn):
                        sv[i] = vals[srt[i]]
                        sy[i] = ys[srt[i]]
                sl = 0.0
                ssl = 0.0
                for i in range(nn - 1):
                    yi = sy[i]
                    sl += yi
                    ssl += yi * yi
                    vi = sv[i]
                    vnext = sv[i + 1]
                    if vi < vnext:
                        nl = i + 1
                        nr = nn - nl
                        sr = s - sl
                        ssr = ss - ssl
                        score = (ssl - sl * sl / nl) + (ssr - sr * sr / nr)
                        if score < best_score:
                            thr = 0.5 * (vi + vnext)
                            if not (vi < thr and thr < vnext):
                                thr = vi  # adjacent floats: keep the rule value <= thr exact
                            best_score = score
                            best_f = f
                            best_thr = thr

        if best_f < 0:
            continue

        # stable partition of order[lo:hi] around the chosen split
        for i in range(nn):
            tmp[i] = order[lo + i]
        k = lo
        for i in range(nn):
            r = tmp[i]
            if X[r, best_f] <= best_thr:
                order[k] = r
                k += 1
        mid = k
        for i in range(nn):
            r = tmp[i]
            if X[r, best_f] > best_thr:
                order[k] = r
                k += 1

        lchild = n_nodes
        rchild = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lchild
        right[node] = rchild
        used[best_f] = True

        stack_node[sp] = lchild
        stack_lo[sp] = lo
        stack_hi[sp] = mid
        stack_depth[sp] = depth + 1
        sp += 1
        stack_node[sp] = rchild
        stack_lo[sp] = mid
        stack_hi[sp] = hi
        stack_depth[sp] = depth + 1
        sp += 1

    return feature, threshold, left, right, value, n_nodes, used, state


@njit(cache=True)
def tree_predict(feature, threshold, left, right, value, X, out):
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]


@njit(cache=True)
def oob_permutation_increases(
    feature, threshold, left, right, value, used, X, y, oob_rows, tree_state, n_repeats, out
):
    """Add this tree's per-feature OOB MSE increases into `out` (length d).

    For each feature the tree actually split on, its values are permuted
    within the OOB rows (a fresh seeded permutation per repeat) and the OOB
    MSE increase over the unpermuted baseline is recorded, averaged over
    repeats. Features the tree never used contribute exactly 0 and are
    skipped: permuting them cannot change any prediction.
    """
    n_oob = oob_rows.shape[0]
    d = X.shape[1]
    Xo = np.empty((n_oob, d))
    yo = np.empty(n_oob)
    for i in range(n_oob):
        r = oob_rows[i]
        for j in range(d):
            Xo[i, j] = X[r, j]
        yo[i] = y[r]

    pred = np.empty(n_oob)
    tree_predict(feature, threshold, left, right, value, Xo, pred)
    base = 0.0
    for i in range(n_oob):
        e = pred[i] - yo[i]
        base += e * e
    base /= n_oob

    saved = np.empty(n_oob)
    for f in range(d):
        if not used[f]:
            continue
        for i in range(n_oob):
            saved[i] = Xo[i, f]
        acc = 0.0
        for rep in range(n_repeats):
            st = mix_seed(tree_state, f * 1048576 + rep)
            for i in range(n_oob - 1, 0, -1):
                st, j = _rng_below(st, i + 1)
                t = Xo[i, f]
                Xo[i, f] = Xo[j, f]
                Xo[j, f] = t
            tree_predict(feature, threshold, left, right, value, Xo, pred)
            mse = 0.0
            for i in range(n_oob):
                e = pred[i] - yo[i]
                mse += e * e
            acc += mse / n_oob
            for i in range(n_oob):
                Xo[i, f] = saved[i]
        out[f] += acc / n_repeats - base
