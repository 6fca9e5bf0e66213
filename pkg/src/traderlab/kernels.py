"""Hot numeric kernels: forest growth/prediction and the max-Sharpe QP.

Everything here is nopython-compatible numpy.  With numba installed (and
``TRADERLAB_NUMBA`` not set to 0) the functions are JIT-compiled; otherwise
the same code runs as plain Python.  Both paths are bit-identical: all
randomness is pre-generated by the callers and passed in as arrays, and no
step depends on sort tie order.

See ``benchmarks/bench_kernels.py`` for a timing comparison of the two
paths.
"""

from __future__ import annotations

import numpy as np

from ._accel import maybe_jit


# -- random forest ------------------------------------------------------------
#
# A tree is a set of parallel node arrays: feature (split feature, -1 at
# leaves), threshold, left/right (child node ids, -1 at leaves) and leaf
# (class id, -1 at internal nodes).  Growth is iterative over an explicit
# stack, partitioning a bootstrap index array in place.


@maybe_jit
def grow_tree(X, y, n_classes, boot, cand,
              feature, threshold, left, right, leaf):
    """Grow one CART tree on a bootstrap sample, Gini impurity splits.

    boot: bootstrap sample indices into X/y.
    cand: (events, k) candidate feature ids consumed one row per
          attempted split, pre-generated by the caller.
    Output arrays must be preallocated with at least 2*len(boot)+1 rows.
    Returns the number of nodes used.
    """
    m = boot.shape[0]
    idx = boot.copy()
    tmp = np.empty(m, np.int64)
    counts = np.zeros(n_classes, np.int64)
    lc = np.zeros(n_classes, np.int64)
    rc = np.zeros(n_classes, np.int64)
    cap = feature.shape[0]
    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = m
    top = 1
    n_nodes = 1
    event = 0
    n_events = cand.shape[0]
    k_cand = cand.shape[1]
    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        size = hi - lo
        for c in range(n_classes):
            counts[c] = 0
        for i in range(lo, hi):
            counts[y[idx[i]]] += 1
        best_count = np.int64(-1)
        majority = 0
        for c in range(n_classes):
            if counts[c] > best_count:
                best_count = counts[c]
                majority = c
        if best_count == size or size < 2:
            feature[node] = -1
            threshold[node] = 0.0
            left[node] = -1
            right[node] = -1
            leaf[node] = majority
            continue

        ev = event
        if ev >= n_events:
            ev = n_events - 1
        event += 1
        best_feat = -1
        best_thr = 0.0
        best_gini = 1.0e300
        vals = np.empty(size, np.float64)
        for kk in range(k_cand):
            f = cand[ev, kk]
            for i in range(size):
                vals[i] = X[idx[lo + i], f]
            order = np.argsort(vals)
            for c in range(n_classes):
                lc[c] = 0
                rc[c] = counts[c]
            nl = 0
            nr = size
            for i in range(size - 1):
                c = y[idx[lo + order[i]]]
                lc[c] += 1
                rc[c] -= 1
                nl += 1
                nr -= 1
                vi = vals[order[i]]
                vj = vals[order[i + 1]]
                if vi < vj:
                    sl = 0.0
                    sr = 0.0
                    for cc in range(n_classes):
                        sl += lc[cc] * lc[cc]
                        sr += rc[cc] * rc[cc]
                    g = (nl - sl / nl + nr - sr / nr) / size
                    if g < best_gini:
                        best_gini = g
                        best_feat = f
                        thr = 0.5 * (vi + vj)
                        if thr >= vj:
                            thr = vi
                        best_thr = thr
        if best_feat < 0:
            feature[node] = -1
            threshold[node] = 0.0
            left[node] = -1
            right[node] = -1
            leaf[node] = majority
            continue

        # stable partition: <= threshold goes left
        nl = 0
        for i in range(lo, hi):
            if X[idx[i], best_feat] <= best_thr:
                tmp[nl] = idx[i]
                nl += 1
        nr = nl
        for i in range(lo, hi):
            if X[idx[i], best_feat] > best_thr:
                tmp[nr] = idx[i]
                nr += 1
        for i in range(size):
            idx[lo + i] = tmp[i]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = lid
        right[node] = rid
        leaf[node] = -1
        stack_node[top] = rid
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        top += 1
        stack_node[top] = lid
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        top += 1
    return n_nodes


@maybe_jit
def forest_predict(X, feature, threshold, left, right, leaf,
                   offsets, n_classes):
    """Majority vote over packed trees; ties broken by lowest class index.

    Trees are concatenated in the node arrays; tree t occupies
    [offsets[t], offsets[t+1]) and child ids are local to the tree.
    """
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.empty(n, np.int64)
    votes = np.zeros(n_classes, np.int64)
    for r in range(n):
        for c in range(n_classes):
            votes[c] = 0
        for t in range(n_trees):
            off = offsets[t]
            node = 0
            while leaf[off + node] < 0:
                if X[r, feature[off + node]] <= threshold[off + node]:
                    node = left[off + node]
                else:
                    node = right[off + node]
            votes[leaf[off + node]] += 1
        best = 0
        best_v = votes[0]
        for c in range(1, n_classes):
            if votes[c] > best_v:
                best_v = votes[c]
                best = c
        out[r] = best
    return out


# -- max-Sharpe QP -------------------------------------------------------------
#
# Long-only max Sharpe via the standard convex reformulation:
#     minimize y' S y   subject to  a'y = 1, y >= 0,   a = mu - rf
# then w = y / sum(y).  Solved with accelerated projected gradient; the
# projection onto {y >= 0, a'y = 1} is exact up to bisection precision.


@maybe_jit
def project_plane_orthant(z, a):
    """Euclidean projection of z onto {y >= 0, a.y = 1}.

    y(lam) = max(0, z + lam*a); g(lam) = a.y(lam) is nondecreasing and
    piecewise linear, so the root of g(lam) = 1 is found by bisection.
    Requires at least one positive entry in a.
    """
    n = z.shape[0]
    lo = -1.0
    hi = 1.0
    g = 0.0
    for _ in range(400):
        g = 0.0
        for i in range(n):
            yi = z[i] + lo * a[i]
            if yi > 0.0:
                g += a[i] * yi
        if g <= 1.0:
            break
        lo *= 2.0
    for _ in range(400):
        g = 0.0
        for i in range(n):
            yi = z[i] + hi * a[i]
            if yi > 0.0:
                g += a[i] * yi
        if g >= 1.0:
            break
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = 0.0
        for i in range(n):
            yi = z[i] + mid * a[i]
            if yi > 0.0:
                g += a[i] * yi
        if g < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 0.0:
            break
    lam = 0.5 * (lo + hi)
    y = np.empty(n, np.float64)
    for i in range(n):
        yi = z[i] + lam * a[i]
        y[i] = yi if yi > 0.0 else 0.0
    return y


@maybe_jit
def max_sharpe_qp(Sigma, a, max_iter, tol):
    """Accelerated projected gradient for min y'Sy on {y>=0, a.y=1}.

    Momentum steps that increase the objective fall back to a plain
    1/L projected-gradient step (monotone descent).  Stops when the
    normalized-weight change drops below tol in the infinity norm.
    """
    n = a.shape[0]
    L = 0.0
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += abs(Sigma[i, j])
        if s > L:
            L = s
    L *= 2.0
    if L <= 0.0:
        L = 1.0
    step = 1.0 / L

    z0 = np.full(n, 1.0 / n)
    y = project_plane_orthant(z0, a)
    v = y.copy()
    f_y = y @ Sigma @ y
    t = 1.0
    w = y / y.sum()
    for _ in range(max_iter):
        grad = 2.0 * (Sigma @ v)
        y_new = project_plane_orthant(v - step * grad, a)
        f_new = y_new @ Sigma @ y_new
        if f_new > f_y:
            grad = 2.0 * (Sigma @ y)
            y_new = project_plane_orthant(y - step * grad, a)
            f_new = y_new @ Sigma @ y_new
            t = 1.0
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        v = y_new + ((t - 1.0) / t_next) * (y_new - y)
        t = t_next
        w_new = y_new / y_new.sum()
        delta = 0.0
        for i in range(n):
            d = abs(w_new[i] - w[i])
            if d > delta:
                delta = d
        y = y_new
        f_y = f_new
        w = w_new
        if delta < tol:
            break
    return y
