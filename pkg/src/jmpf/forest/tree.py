"""Randomised binary decision forests with standard or zero-center splits."""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..numerics import as_matrix, ridge_projection
from ._backend import kernels
from .impurity import (entropy_from_counts, gaussian_from_moments,
                       variance_from_moments)

MIN_GAIN = 1e-12


class SplitMode(str, enum.Enum):
    STANDARD = "standard"
    JMPF = "jmpf"


class Task(str, enum.Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"
    RIDGE = "ridge"


class Impurity(str, enum.Enum):
    ENTROPY = "entropy"
    VARIANCE_SUM = "variance_sum"
    GAUSSIAN_ENTROPY = "gaussian_entropy"


@dataclass(frozen=True)
class ForestConfig:
    """Hyper-parameters of a forest.

    ``num_candidate_dims`` is the number of randomly drawn split dimensions
    per node (#H). ``num_candidate_thresholds`` only applies in
    ``SplitMode.STANDARD``; JMPF splits always use threshold 0.
    """

    num_trees: int = 100
    max_depth: int = 15
    min_samples_split: int = 5
    num_candidate_dims: int = 1
    num_candidate_thresholds: int = 10
    mode: SplitMode = SplitMode.STANDARD
    task: Task = Task.CLASSIFICATION
    ridge_lambda: float = 0.1
    impurity: Impurity | None = None
    seed: int = 0
    min_samples_leaf: int = 1
    bootstrap: bool = True
    gaussian_eps: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "mode", SplitMode(self.mode))
        object.__setattr__(self, "task", Task(self.task))
        if self.impurity is not None:
            object.__setattr__(self, "impurity", Impurity(self.impurity))
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.num_candidate_dims < 1:
            raise ValueError("num_candidate_dims must be >= 1")
        if self.num_candidate_thresholds < 1:
            raise ValueError("num_candidate_thresholds must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")
        if self.impurity is Impurity.ENTROPY and self.task is not Task.CLASSIFICATION:
            raise ValueError("entropy impurity needs class labels")
        if self.task is Task.CLASSIFICATION and self.impurity not in (None, Impurity.ENTROPY):
            raise ValueError(f"{self.impurity.value} impurity needs real-valued targets")

    @property
    def resolved_impurity(self) -> Impurity:
        if self.impurity is not None:
            return self.impurity
        return Impurity.ENTROPY if self.task is Task.CLASSIFICATION else Impurity.VARIANCE_SUM

    def replace(self, **changes) -> "ForestConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SplitNode:
    feature: int
    threshold: float
    gain: float


@dataclass
class Tree:
    """Flat array encoding of one tree.

    Internal nodes have ``feature >= 0``; leaves have ``feature == -1`` and
    ``slot`` pointing into ``leaf_values`` / ``leaf_counts``. Node 0 is the root.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    slot: np.ndarray
    leaf_values: np.ndarray
    leaf_counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return self.leaf_values.shape[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        return kernels.route(self.feature, self.threshold, self.left, self.right, self.slot, X)

    def depths(self) -> np.ndarray:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):  # children always follow their parent
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return depth

    def split_nodes(self) -> list[SplitNode]:
        inner = np.flatnonzero(self.feature >= 0)
        return [SplitNode(int(self.feature[i]), float(self.threshold[i]), float("nan")) for i in inner]


@dataclass
class Forest:
    config: ForestConfig
    trees: list[Tree]
    n_features: int
    n_outputs: int
    squeeze_output: bool = field(default=False)

    @property
    def task(self) -> Task:
        return self.config.task

    def _check(self, X) -> tuple[np.ndarray, bool]:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = np.ascontiguousarray(np.atleast_2d(X))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X, single

    def apply(self, X) -> np.ndarray:
        """Leaf slot per (tree, sample), shape (T, n)."""
        X, _ = self._check(X)
        return np.stack([t.apply(X) for t in self.trees])

    def predict_proba(self, X) -> np.ndarray:
        if self.task is not Task.CLASSIFICATION:
            raise ValueError("predict_proba needs a classification forest")
        X, single = self._check(X)
        acc = np.zeros((X.shape[0], self.n_outputs))
        for t in self.trees:
            acc += t.leaf_values[t.apply(X)]
        acc /= len(self.trees)
        return acc[0] if single else acc

    def predict(self, X):
        X, single = self._check(X)
        if self.task is Task.CLASSIFICATION:
            out = np.argmax(self.predict_proba(X), axis=1)  # ties -> lowest index
        elif self.task is Task.REGRESSION:
            out = np.zeros((X.shape[0], self.n_outputs))
            for t in self.trees:
                out += t.leaf_values[t.apply(X)]
            out /= len(self.trees)
        else:
            out = np.zeros((X.shape[0], self.n_outputs))
            for t in self.trees:
                kernels.ridge_accumulate(t.leaf_values, t.apply(X), X, out)
            out /= len(self.trees)
        if self.task is not Task.CLASSIFICATION and self.squeeze_output:
            out = out[:, 0]
        return out[0] if single else out


class _Grower:
    """Grows one tree; holds the read-only training view and the per-tree RNG."""

    def __init__(self, X, targets, cfg: ForestConfig, n_classes: int):
        self.X = X
        self.cfg = cfg
        self.imp = cfg.resolved_impurity
        self.n_classes = n_classes
        if cfg.task is Task.CLASSIFICATION:
            self.y = targets
            self.Y = None
        else:
            self.y = None
            self.Y = targets

    # node statistics ---------------------------------------------------
    def stats(self, idx):
        if self.y is not None:
            return np.bincount(self.y[idx], minlength=self.n_classes).astype(np.int64)
        Yn = self.Y[idx]
        return (idx.shape[0], Yn.sum(axis=0), (Yn * Yn).sum(axis=0))

    def impurity_of(self, stats, idx) -> float:
        if self.imp is Impurity.ENTROPY:
            return float(entropy_from_counts(stats))
        if self.imp is Impurity.VARIANCE_SUM:
            return float(variance_from_moments(np.asarray(stats[0]), stats[1], stats[2]))
        Yn = self.Y[idx]
        return float(gaussian_from_moments(np.asarray(float(len(idx))), Yn.sum(0), Yn.T @ Yn,
                                           self.cfg.gaussian_eps))

    def is_pure(self, stats) -> bool:
        if self.y is not None:
            return np.count_nonzero(stats) <= 1
        n, s, ss = stats
        return float(variance_from_moments(np.asarray(n), s, ss)) <= 1e-12

    # split search ------------------------------------------------------
    def find_split(self, idx, stats, rng):
        cfg = self.cfg
        lo, hi = kernels.node_ranges(self.X, idx)
        if cfg.mode is SplitMode.JMPF:
            eligible = np.flatnonzero((lo < 0.0) & (hi >= 0.0))
        else:
            eligible = np.flatnonzero(lo < hi)
        if eligible.size == 0:
            return None
        H = min(cfg.num_candidate_dims, eligible.size)
        if H == eligible.size:
            dims = eligible
        elif H == 1:
            dims = eligible[rng.integers(eligible.size)][None]
        else:
            dims = rng.choice(eligible, size=H, replace=False)
        dims = np.ascontiguousarray(dims, dtype=np.int64)
        if cfg.mode is SplitMode.JMPF:
            thr = np.zeros((H, 1))
        else:
            C = cfg.num_candidate_thresholds
            thr = rng.uniform(lo[dims, None], hi[dims, None], size=(H, C))
        n = idx.shape[0]
        parent_h = self.impurity_of(stats, idx)

        if self.imp is Impurity.ENTROPY:
            left = kernels.class_counts(self.X, idx, dims, self.y, self.n_classes, thr)
            right = stats[None, None, :] - left
            nl = left.sum(axis=-1)
            nr = n - nl
            hl = entropy_from_counts(left)
            hr = entropy_from_counts(right)
        elif self.imp is Impurity.VARIANCE_SUM:
            nl, sl, ssl = kernels.moment_sums(self.X, idx, dims, self.Y, thr)
            nr = n - nl
            hl = variance_from_moments(nl, sl, ssl)
            hr = variance_from_moments(nr, stats[1] - sl, stats[2] - ssl)
        else:
            nl, hl, hr = self._gaussian_candidates(idx, dims, thr)
            nr = n - nl

        valid = (nl >= cfg.min_samples_leaf) & (nr >= cfg.min_samples_leaf) & (nl > 0) & (nr > 0)
        if self.imp is Impurity.GAUSSIAN_ENTROPY:
            valid &= (nl >= 2) & (nr >= 2)
        with np.errstate(invalid="ignore"):
            gain = parent_h - (nl * hl + nr * hr) / n
        gain = np.where(valid & np.isfinite(gain), gain, -np.inf)
        best = int(np.argmax(gain))
        h, c = divmod(best, thr.shape[1])
        if not gain[h, c] > MIN_GAIN:
            return None
        return SplitNode(int(dims[h]), float(thr[h, c]), float(gain[h, c]))

    def _gaussian_candidates(self, idx, dims, thr):
        Yn = self.Y[idx]
        q = Yn.shape[1]
        tot_s = Yn.sum(0)
        tot_s2 = Yn.T @ Yn
        vals = self.X[np.ix_(idx, dims)]
        H, C = thr.shape
        nl = np.zeros((H, C), dtype=np.int64)
        sl = np.zeros((H, C, q))
        s2l = np.zeros((H, C, q, q))
        for h in range(H):
            for c in range(C):
                m = vals[:, h] < thr[h, c]
                Ym = Yn[m]
                nl[h, c] = Ym.shape[0]
                sl[h, c] = Ym.sum(0)
                s2l[h, c] = Ym.T @ Ym
        eps = self.cfg.gaussian_eps
        with np.errstate(divide="ignore", invalid="ignore"):
            hl = gaussian_from_moments(nl, sl, s2l, eps)
            hr = gaussian_from_moments(len(idx) - nl, tot_s - sl, tot_s2 - s2l, eps)
        return nl, hl, hr

    # leaves ------------------------------------------------------------
    def leaf_value(self, idx, stats, parent_idx):
        task = self.cfg.task
        if task is Task.CLASSIFICATION:
            return stats / stats.sum()
        if task is Task.REGRESSION:
            return stats[1] / stats[0]
        fit_idx = idx if idx.shape[0] >= 2 or parent_idx is None else parent_idx
        return ridge_projection(self.X[fit_idx], self.Y[fit_idx], self.cfg.ridge_lambda)

    # growth ------------------------------------------------------------
    def grow(self, idx, rng) -> Tree:
        feature, threshold, left, right, slot = [], [], [], [], []
        values, counts = [], []
        cfg = self.cfg

        def new_node():
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            slot.append(-1)
            return len(feature) - 1

        def make_leaf(node, idx, stats, parent_idx):
            slot[node] = len(values)
            values.append(self.leaf_value(idx, stats, parent_idx))
            counts.append(idx.shape[0])

        # explicit stack: (node, idx, stats, depth, parent_idx)
        root = new_node()
        stack = [(root, idx, self.stats(idx), 0, None)]
        while stack:
            node, nidx, st, depth, pidx = stack.pop()
            split = None
            if (depth < cfg.max_depth and nidx.shape[0] >= cfg.min_samples_split
                    and not self.is_pure(st)):
                split = self.find_split(nidx, st, rng)
            if split is None:
                make_leaf(node, nidx, st, pidx)
                continue
            m = self.X[nidx, split.feature] < split.threshold
            lidx, ridx = nidx[m], nidx[~m]
            feature[node] = split.feature
            threshold[node] = split.threshold
            ln, rn = new_node(), new_node()
            left[node], right[node] = ln, rn
            # push right first so the left subtree is laid out first
            stack.append((rn, ridx, self.stats(ridx), depth + 1, nidx))
            stack.append((ln, lidx, self.stats(lidx), depth + 1, nidx))

        return Tree(
            feature=np.asarray(feature, dtype=np.int32),
            threshold=np.asarray(threshold, dtype=np.float64),
            left=np.asarray(left, dtype=np.int32),
            right=np.asarray(right, dtype=np.int32),
            slot=np.asarray(slot, dtype=np.int32),
            leaf_values=np.ascontiguousarray(np.stack(values)),
            leaf_counts=np.asarray(counts, dtype=np.int64),
        )


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    """Independent, reproducible stream for one tree."""
    return np.random.default_rng([int(seed), int(tree_index)])


def _prepare_targets(targets, task: Task, n: int, n_classes: int | None):
    if task is Task.CLASSIFICATION:
        y = np.asarray(targets)
        if y.ndim != 1 or y.shape[0] != n:
            raise ValueError(f"expected {n} class labels, got shape {y.shape}")
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.mod(y, 1) == 0):
                raise ValueError("class labels must be integers")
        y = np.ascontiguousarray(y, dtype=np.int64)
        if y.min() < 0:
            raise ValueError("class labels must be >= 0")
        k = int(y.max()) + 1 if n_classes is None else int(n_classes)
        if y.max() >= k:
            raise ValueError(f"labels must lie in [0, {k})")
        return y, k, False
    Y = np.asarray(targets, dtype=np.float64)
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[0] != n:
        raise ValueError(f"expected {n} target rows, got shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise ValueError("targets contain non-finite values")
    return np.ascontiguousarray(Y), Y.shape[1], squeeze


def train_forest(X, targets, config: ForestConfig | None = None, *,
                 n_classes: int | None = None, n_jobs: int = 1) -> Forest:
    """Grow ``config.num_trees`` trees on bootstrap resamples of ``(X, targets)``.

    Trees draw from independent streams seeded by ``(config.seed, tree_index)``,
    so the result does not depend on ``n_jobs``.
    """
    cfg = config or ForestConfig()
    X = np.ascontiguousarray(as_matrix(X))
    n, d = X.shape
    if n < cfg.min_samples_split:
        raise ValueError(f"need at least min_samples_split={cfg.min_samples_split} samples")
    if cfg.task is Task.RIDGE and cfg.ridge_lambda <= 0:
        raise ValueError("ridge leaves need ridge_lambda > 0")
    targets, n_out, squeeze = _prepare_targets(targets, cfg.task, n, n_classes)
    grower = _Grower(X, targets, cfg, n_out)

    def build(t):
        rng = tree_rng(cfg.seed, t)
        idx = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
        return grower.grow(np.ascontiguousarray(idx, dtype=np.int64), rng)

    if n_jobs == 1:
        trees = [build(t) for t in range(cfg.num_trees)]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            trees = list(pool.map(build, range(cfg.num_trees)))
    return Forest(cfg, trees, d, n_out, squeeze_output=squeeze)


def best_split(X, targets, config: ForestConfig, rng: np.random.Generator,
               idx=None, n_classes: int | None = None) -> SplitNode | None:
    """Best candidate split for the node holding rows ``idx`` (all rows by default).

    Returns ``None`` (no split) when no drawn candidate separates the node or
    the best information gain is not positive.
    """
    X = np.ascontiguousarray(as_matrix(X))
    targets, n_out, _ = _prepare_targets(targets, config.task, X.shape[0], n_classes)
    idx = np.arange(X.shape[0]) if idx is None else np.asarray(idx)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    g = _Grower(X, targets, config, n_out)
    st = g.stats(idx)
    if g.is_pure(st):
        return None
    return g.find_split(idx, st, rng)


def predict(forest: Forest, x):
    """Forest prediction for one feature vector or a batch of rows."""
    return forest.predict(x)
