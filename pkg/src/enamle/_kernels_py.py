"""Pure numpy tree kernels; the fallback when the compiled module is absent."""

import numpy as np


def best_split(X, y, rows, features, n_classes):
    n = len(rows)
    yr = y[rows]
    total = np.bincount(yr, minlength=n_classes).astype(np.int64)
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    best_feat, best_thr, best_score = -1, 0.0, -1.0
    if n < 2:
        return best_feat, best_thr, best_score
    sizes_l = np.arange(1, n, dtype=np.int64)
    sizes_r = n - sizes_l
    for f in features:
        xs = X[rows, f]
        order = np.argsort(xs, kind="stable")
        onehot[:] = 0
        onehot[np.arange(n), yr[order]] = 1
        left = np.cumsum(onehot, axis=0)[:-1]
        right = total - left
        sq_l = np.einsum("ij,ij->i", left, left)
        sq_r = np.einsum("ij,ij->i", right, right)
        a = xs[order[:-1]]
        b = xs[order[1:]]
        score = sq_l.astype(np.float64) / sizes_l + sq_r.astype(np.float64) / sizes_r
        score[~(a < b)] = -np.inf
        i = int(np.argmax(score))
        if score[i] > best_score:
            mid = (a[i] + b[i]) / 2.0
            if mid >= b[i]:
                mid = a[i]
            best_feat, best_thr, best_score = int(f), float(mid), float(score[i])
    return best_feat, best_thr, best_score


def tree_apply(X, feature, threshold, left, right):
    node = np.zeros(X.shape[0], dtype=np.intp)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[active]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[active] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node
