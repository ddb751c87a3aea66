"""Feature preprocessing + optional learned rotation + forest, as one predictor."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forest import Forest, ForestConfig, SplitMode, Task, train_forest
from .numerics import as_matrix
from .rotation import DEFAULT_ITERATIONS, RotationModel, itq_fit, rotate


@dataclass(frozen=True)
class Standardizer:
    """Per-column centering and (optionally) unit scaling from training statistics."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X, unit_scale: bool = True) -> "Standardizer":
        X = as_matrix(X)
        mean = X.mean(axis=0)
        if unit_scale:
            scale = X.std(axis=0)
            scale[scale == 0] = 1.0  # constant columns stay at 0
        else:
            scale = np.ones(X.shape[1])
        return cls(mean, scale)

    def transform(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.mean.shape[0]:
            raise ValueError(f"expected {self.mean.shape[0]} columns, got {X.shape[1]}")
        return (X - self.mean) / self.scale


@dataclass
class ForestModel:
    standardizer: Standardizer
    rotation: RotationModel | None
    forest: Forest
    class_labels: list[str] | None = None

    @property
    def task(self) -> Task:
        return self.forest.task

    def features(self, X) -> np.ndarray:
        Z = self.standardizer.transform(np.atleast_2d(X))
        if self.rotation is not None:
            Z = rotate(self.rotation, Z)
        return np.ascontiguousarray(Z)

    def predict(self, X):
        single = np.ndim(X) == 1
        out = self.forest.predict(self.features(X))
        return out[0] if single else out


def fit_forest_model(X, targets, config: ForestConfig, *, use_rotation: bool | None = None,
                     unit_scale: bool = True, itq_iterations: int = DEFAULT_ITERATIONS,
                     n_classes: int | None = None, class_labels=None) -> ForestModel:
    """Standardize, rotate (JMPF mode by default) and grow the forest.

    The rotation is learned once on the whole training set, seeded from
    ``config.seed``.
    """
    if use_rotation is None:
        use_rotation = config.mode is SplitMode.JMPF
    std = Standardizer.fit(X, unit_scale=unit_scale)
    Z = std.transform(X)
    rot = None
    if use_rotation:
        rot = itq_fit(Z, iterations=itq_iterations, seed=config.seed)
        Z = rotate(rot, Z)
    forest = train_forest(np.ascontiguousarray(Z), targets, config, n_classes=n_classes)
    return ForestModel(std, rot, forest, list(class_labels) if class_labels is not None else None)
