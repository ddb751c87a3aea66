"""numpy implementations of the tree kernels (fallback when the extension is absent)."""
import numpy as np


def route(feature, threshold, left, right, slot, X):
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int32)
    active = np.flatnonzero(feature[node] >= 0)
    while active.size:
        cur = node[active]
        f = feature[cur]
        go_left = X[active, f] < threshold[cur]
        node[active] = np.where(go_left, left[cur], right[cur])
        active = active[feature[node[active]] >= 0]
    return slot[node].astype(np.int32)


def node_ranges(X, idx):
    sub = X[idx]
    return sub.min(axis=0), sub.max(axis=0)


def class_counts(X, idx, dims, y, n_classes, thresholds):
    H, C = thresholds.shape
    vals = X[np.ix_(idx, dims)]  # (n, H)
    mask = vals[:, :, None] < thresholds[None, :, :]  # (n, H, C)
    onehot = np.zeros((idx.shape[0], n_classes))
    onehot[np.arange(idx.shape[0]), y[idx]] = 1.0
    counts = mask.reshape(idx.shape[0], H * C).T.astype(np.float64) @ onehot
    return np.rint(counts).astype(np.int64).reshape(H, C, n_classes)


def moment_sums(X, idx, dims, Y, thresholds):
    H, C = thresholds.shape
    n = idx.shape[0]
    vals = X[np.ix_(idx, dims)]
    mask = (vals[:, :, None] < thresholds[None, :, :]).reshape(n, H * C).T.astype(np.float64)
    Yn = Y[idx]
    cnt = np.rint(mask.sum(axis=1)).astype(np.int64).reshape(H, C)
    s = (mask @ Yn).reshape(H, C, -1)
    ss = (mask @ (Yn * Yn)).reshape(H, C, -1)
    return cnt, s, ss


def ridge_accumulate(P, slots, X, out):
    order = np.argsort(slots, kind="stable")
    sorted_slots = slots[order]
    bounds = np.flatnonzero(np.diff(sorted_slots)) + 1
    for group in np.split(order, bounds):
        if group.size:
            out[group] += X[group] @ P[slots[group[0]]].T
