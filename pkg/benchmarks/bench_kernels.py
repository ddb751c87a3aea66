#!/usr/bin/env python3
"""Time the compiled forest kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--json]

End-to-end rows train/predict a small forest in a subprocess per backend,
since the backend is fixed at import time (``JMPF_PURE_PYTHON``).
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from jmpf.forest import ForestConfig, SplitMode, Task, train_forest
from jmpf.forest import _kernels_py as py

try:
    from jmpf.forest import _kernels as cy
except ImportError:
    cy = None


def kernel_cases(rng):
    n, d = 20000, 16
    X = np.ascontiguousarray(rng.normal(size=(n, d)))
    idx = np.ascontiguousarray(rng.integers(0, n, size=n), dtype=np.int64)
    dims = np.array([1, 5, 9], dtype=np.int64)
    thr = rng.normal(size=(3, 10))
    y = np.ascontiguousarray(rng.integers(0, 10, size=n), dtype=np.int64)
    Y = np.ascontiguousarray(rng.normal(size=(n, 36)))
    forest = train_forest(X[:4000], Y[:4000, :4],
                          ForestConfig(num_trees=1, task=Task.RIDGE, mode=SplitMode.JMPF,
                                       min_samples_leaf=32, min_samples_split=64))
    t = forest.trees[0]
    slots = py.route(t.feature, t.threshold, t.left, t.right, t.slot, X)
    out = np.zeros((n, 4))
    return {
        "route": lambda k: k.route(t.feature, t.threshold, t.left, t.right, t.slot, X),
        "node_ranges": lambda k: k.node_ranges(X, idx),
        "class_counts": lambda k: k.class_counts(X, idx, dims, y, 10, thr),
        "moment_sums": lambda k: k.moment_sums(X, idx, dims, Y, thr),
        "ridge_accumulate": lambda k: k.ridge_accumulate(t.leaf_values, slots, X, out),
    }


END_TO_END = r"""
import json, time, numpy as np
from jmpf.forest import BACKEND, ForestConfig, SplitMode, train_forest
rng = np.random.default_rng(0)
X = rng.normal(size=(6000, 16)); y = (X[:, :4] > 0) @ [1, 2, 4, 8] % 10
res = {"backend": BACKEND}
for mode in ("standard", "jmpf"):
    t0 = time.perf_counter()
    f = train_forest(X, y, ForestConfig(num_trees=10, mode=mode))
    res[f"train_{mode}"] = time.perf_counter() - t0
    t0 = time.perf_counter(); f.predict(X); res[f"predict_{mode}"] = time.perf_counter() - t0
print(json.dumps(res))
"""


def end_to_end(pure: bool) -> dict:
    env = dict(os.environ, JMPF_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print one JSON object per row")
    args = ap.parse_args(argv)
    if cy is None:
        print("compiled kernels are not built; only the fallback can be timed", file=sys.stderr)

    rows = []
    for name, fn in kernel_cases(np.random.default_rng(0)).items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) if cy else float("nan")
        rows.append((name, t_cy, t_py))
    e_cy = end_to_end(pure=False) if cy else None
    e_py = end_to_end(pure=True)
    for key in ("train_standard", "train_jmpf", "predict_standard", "predict_jmpf"):
        rows.append((key, e_cy[key] if e_cy else float("nan"), e_py[key]))

    if args.json:
        for name, a, b in rows:
            print(json.dumps({"case": name, "cython_s": a, "python_s": b, "speedup": b / a}))
        return
    print(f"{'case':<18} {'cython (ms)':>12} {'python (ms)':>12} {'speedup':>8}")
    for name, a, b in rows:
        print(f"{name:<18} {a * 1e3:>12.2f} {b * 1e3:>12.2f} {b / a:>7.1f}x")


if __name__ == "__main__":
    main()
