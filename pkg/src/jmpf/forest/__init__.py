"""Decision forests with standard random thresholds or zero-center (JMPF) splits."""
from ._backend import BACKEND
from .impurity import entropy, gaussian_entropy, info_gain, split_score, variance_sum
from .tree import (Forest, ForestConfig, Impurity, SplitMode, SplitNode, Task, Tree,
                   best_split, predict, train_forest, tree_rng)

__all__ = [
    "BACKEND", "Forest", "ForestConfig", "Impurity", "SplitMode", "SplitNode", "Task",
    "Tree", "best_split", "entropy", "gaussian_entropy", "info_gain", "predict",
    "split_score", "train_forest", "tree_rng", "variance_sum",
]
