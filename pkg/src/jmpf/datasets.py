"""CSV datasets, holdout splits, metrics and the RF-vs-JMPF benchmark harness."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .forest import ForestConfig, SplitMode, Task
from .pipeline import fit_forest_model

MISSING_TOKENS = {"", "?", "na", "nan", "null"}


class DataError(ValueError):
    """Malformed or missing dataset content."""


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray  # class indices (classification) or (n, q) targets
    task: Task
    name: str = "dataset"
    n_classes: int = 0
    class_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.task = Task(self.task)
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError("X and labels/targets have different row counts")
        if self.task is Task.CLASSIFICATION:
            if self.y.size and (self.y.min() < 0 or self.y.max() >= self.n_classes):
                raise DataError("class indices out of range")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def target_dim(self) -> int:
        return 1 if self.y.ndim == 1 else self.y.shape[1]

    def subset(self, idx, name: str | None = None) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.task, name or self.name,
                       self.n_classes, list(self.class_labels))


def _parse_float(cell: str, row: int, col: int) -> float:
    if cell.strip().lower() in MISSING_TOKENS:
        raise DataError(f"missing value at row {row}, column {col}")
    try:
        v = float(cell)
    except ValueError:
        raise DataError(f"non-numeric value {cell!r} at row {row}, column {col}") from None
    if not math.isfinite(v):
        raise DataError(f"non-finite value {cell!r} at row {row}, column {col}")
    return v


def load_csv(path, label_column: int = -1, task: Task | str = Task.CLASSIFICATION,
             has_header: bool = False, name: str | None = None,
             class_labels: list[str] | None = None) -> Dataset:
    """Read a comma-separated file; every non-label column must be numeric.

    Classification labels are mapped to dense indices in first-appearance
    order unless ``class_labels`` fixes the mapping. Rows and columns in error
    messages are 1-based and count the header line.
    """
    task = Task(task)
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh)]
    first = 1
    if has_header and rows:
        rows = rows[1:]
        first = 2
    rows = [(i + first, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0][1])
    if width < 2:
        raise DataError(f"{path}: need at least one feature column and one label column")
    lc = label_column % width
    feats, labels = [], []
    for lineno, r in rows:
        if len(r) != width:
            raise DataError(f"{path}: row {lineno} has {len(r)} fields, expected {width}")
        feats.append([_parse_float(c, lineno, j + 1) for j, c in enumerate(r) if j != lc])
        labels.append((lineno, r[lc].strip()))
    X = np.asarray(feats, dtype=np.float64)
    if task is Task.CLASSIFICATION:
        mapping = {lab: i for i, lab in enumerate(class_labels)} if class_labels else {}
        fixed = bool(class_labels)
        y = np.empty(len(labels), dtype=np.int64)
        for i, (lineno, lab) in enumerate(labels):
            if lab.lower() in MISSING_TOKENS:
                raise DataError(f"missing label at row {lineno}, column {lc + 1}")
            if lab not in mapping:
                if fixed:
                    raise DataError(f"unknown label {lab!r} at row {lineno}")
                mapping[lab] = len(mapping)
            y[i] = mapping[lab]
        names = sorted(mapping, key=mapping.get)
        return Dataset(X, y, task, name or path.stem, len(names), names)
    y = np.asarray([_parse_float(lab, lineno, lc + 1) for lineno, lab in labels])
    return Dataset(X, y[:, None], task, name or path.stem)


def read_features(path, has_header: bool = False) -> np.ndarray:
    """Read an all-numeric CSV (no label column) into an (n, d) matrix."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    first = 1
    if has_header and rows:
        rows, first = rows[1:], 2
    rows = [(i + first, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0][1])
    out = []
    for lineno, r in rows:
        if len(r) != width:
            raise DataError(f"{path}: row {lineno} has {len(r)} fields, expected {width}")
        out.append([_parse_float(c, lineno, j + 1) for j, c in enumerate(r)])
    return np.asarray(out, dtype=np.float64)


def split_holdout(dataset: Dataset, test_fraction: float = 0.25, seed: int = 0):
    """Seeded shuffle, then the last ``round(n * test_fraction)`` rows become the test set."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    n = dataset.n
    n_test = min(max(int(round(n * test_fraction)), 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return (dataset.subset(np.sort(perm[: n - n_test]), f"{dataset.name}-train"),
            dataset.subset(np.sort(perm[n - n_test:]), f"{dataset.name}-test"))


def error_rate(pred, truth) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError("pred and truth must be non-empty with equal shapes")
    return float(np.mean(pred != truth))


def rmse(pred, truth) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError("pred and truth must be non-empty with equal shapes")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


# --- named benchmark datasets ---------------------------------------------

def default_data_dir() -> Path:
    return Path(os.environ.get("JMPF_DATA", "data"))


def _pendigits(root: Path):
    d = root / "pendigits"
    tra, tes = d / "pendigits.tra", d / "pendigits.tes"
    labels = [str(i) for i in range(10)]
    if tra.exists() and tes.exists():
        train = load_csv(tra, name="pendigits", class_labels=labels)
        test = load_csv(tes, name="pendigits", class_labels=labels)
        return train, test
    keel = d / "penbased.csv"
    if keel.exists():
        # KEEL ships one shuffled file; keep the Table 1 sizes 7494 / 3498
        full = load_csv(keel, name="pendigits", class_labels=labels)
        return full.subset(np.arange(7494)), full.subset(np.arange(7494, full.n))
    raise FileNotFoundError(f"pendigits not found under {d} (run scripts/fetch_data.py)")


def _kin8nm(root: Path, seed: int):
    path = root / "kin8nm" / "kin8nm.csv"
    if not path.exists():
        raise FileNotFoundError(f"kin8nm not found at {path} (run scripts/fetch_data.py)")
    full = load_csv(path, task=Task.REGRESSION, has_header=True, name="kin8nm")
    return split_holdout(full, 0.25, seed)


DATASETS = {"pendigits": Task.CLASSIFICATION, "kin8nm": Task.REGRESSION}


def load_named(name: str, data_dir=None, seed: int = 0):
    """(train, test) for a named benchmark. Holdout splits use ``seed``."""
    root = Path(data_dir) if data_dir is not None else default_data_dir()
    if name == "pendigits":
        return _pendigits(root)
    if name == "kin8nm":
        return _kin8nm(root, seed)
    raise KeyError(f"unknown dataset {name!r}; known: {sorted(DATASETS)}")


# --- benchmark harness ----------------------------------------------------

@dataclass
class BenchReport:
    dataset: str
    mode: str
    num_trees: int
    num_candidate_dims: int
    repeats: int
    runs: list[float]
    mean: float
    std: float
    scale: float
    reduction_vs_rf: float | None = None

    def to_json(self) -> str:
        return json.dumps({
            "dataset": self.dataset, "mode": self.mode, "trees": self.num_trees,
            "candidates": self.num_candidate_dims, "repeats": self.repeats,
            "runs": self.runs, "mean": self.mean, "std": self.std, "scale": self.scale,
            "reduction_vs_rf": self.reduction_vs_rf,
        }, sort_keys=True)


def error_scale(value: float) -> float:
    """Largest power of ten that puts ``value`` in [1, 10)."""
    if value <= 0 or not math.isfinite(value):
        return 1.0
    return 10.0 ** math.floor(math.log10(value))


def relative_reduction(baseline: float, value: float) -> float:
    return (baseline - value) / baseline if baseline else 0.0


def evaluate(train: Dataset, test: Dataset, config: ForestConfig, unit_scale: bool = True) -> float:
    """Train on ``train`` and return the test error rate or RMSE."""
    model = fit_forest_model(train.X, train.y if train.task is Task.CLASSIFICATION else train.y[:, 0],
                             config, unit_scale=unit_scale,
                             n_classes=train.n_classes if train.task is Task.CLASSIFICATION else None)
    pred = model.predict(test.X)
    if train.task is Task.CLASSIFICATION:
        return error_rate(pred, test.y)
    return rmse(pred, test.y[:, 0])


def run_benchmark(data, configs: list[ForestConfig], repeats: int = 5, seeds=None,
                  unit_scale: bool = True, name: str | None = None, progress=None) -> list[BenchReport]:
    """Repeat train/test per config and seed; aggregate mean and std.

    ``data`` is a ``(train, test)`` pair or a callable ``seed -> (train, test)``
    (for datasets whose holdout split is re-drawn per repeat). ``seeds``
    defaults to ``0 .. repeats-1``; run ``i`` seeds the forest and the
    rotation with ``seeds[i]``. Each JMPF report carries its relative error
    reduction against the Standard-mode report with the same #H (else the
    first Standard report).
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    seeds = list(range(repeats)) if seeds is None else list(seeds)
    if len(seeds) != repeats:
        raise ValueError("need exactly one seed per repeat")
    reports = []
    for cfg in configs:
        runs = []
        for s in seeds:
            train, test = data(s) if callable(data) else data
            runs.append(evaluate(train, test, cfg.replace(seed=s), unit_scale))
            if progress:
                progress(cfg, s, runs[-1])
        arr = np.asarray(runs)
        ds_name = name or (data(seeds[0])[0].name if callable(data) else data[0].name)
        mean = float(arr.mean())
        reports.append(BenchReport(ds_name, cfg.mode.value, cfg.num_trees, cfg.num_candidate_dims,
                                   repeats, runs, mean, float(arr.std()), error_scale(mean)))
    for r in reports:
        if r.mode == SplitMode.STANDARD.value:
            continue
        base = [b for b in reports if b.mode == SplitMode.STANDARD.value]
        match = [b for b in base if b.num_candidate_dims == r.num_candidate_dims
                 and b.num_trees == r.num_trees]
        if match or base:
            r.reduction_vs_rf = relative_reduction((match or base)[0].mean, r.mean)
    return reports


def format_reports(reports: list[BenchReport]) -> str:
    """Aligned text table: mean +- std at the error scale, bracketed reduction."""
    lines = [f"{'dataset':<12} {'mode':<9} {'#H':>3} {'T':>4}  {'error':<16} {'reduction':>9} {'scale':>7}"]
    for r in reports:
        cell = f"{r.mean / r.scale:.3f}±{r.std / r.scale:.3f}"
        red = "" if r.reduction_vs_rf is None else f"({r.reduction_vs_rf * 100:.0f}%)"
        exp = int(round(math.log10(r.scale)))
        lines.append(f"{r.dataset:<12} {r.mode:<9} {r.num_candidate_dims:>3} {r.num_trees:>4}  "
                     f"{cell:<16} {red:>9} {'1e' + str(exp):>7}")
    return "\n".join(lines)
