#!/usr/bin/env python3
"""Populate the benchmark data directory.

Layout written under ``$JMPF_DATA`` (default ``./data``)::

    pendigits/pendigits.tra, pendigits.tes   UCI files (writer-disjoint split)
    pendigits/penbased.csv                   KEEL copy, used only if UCI is unreachable
    kin8nm/kin8nm.csv                        OpenML copy (8 features + target)
    Set5/, T91/                              images; must be copied in by hand

Usage: python scripts/fetch_data.py [--data-dir DIR] [--only pendigits|kin8nm]
"""
import argparse
import csv
import io
import os
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

UCI_PENDIGITS = "https://archive.ics.uci.edu/ml/machine-learning-databases/pendigits/"


def _get(url, timeout=30):
    with urllib.request.urlopen(url, timeout=timeout) as r:
        return r.read()


def fetch_pendigits(root: Path) -> None:
    out = root / "pendigits"
    out.mkdir(parents=True, exist_ok=True)
    try:
        for name in ("pendigits.tra", "pendigits.tes"):
            (out / name).write_bytes(_get(UCI_PENDIGITS + name))
        print(f"pendigits: UCI files written to {out}")
        return
    except OSError as exc:
        print(f"pendigits: UCI unreachable ({exc}); trying the KEEL copy from PyPI")
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q",
                        "keel-ds==0.2.5", "-d", tmp], check=True)
        wheel = next(Path(tmp).glob("keel_ds-*.whl"))
        raw = zipfile.ZipFile(wheel).read("keel_ds/data/balanced/raw/penbased.dat").decode()
    rows = [[c.strip() for c in line.split(",")] for line in raw.splitlines() if line.strip()]
    with open(out / "penbased.csv", "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    print(f"pendigits: KEEL copy ({len(rows)} rows, shuffled order) written to {out}")


def fetch_kin8nm(root: Path) -> None:
    out = root / "kin8nm"
    out.mkdir(parents=True, exist_ok=True)
    try:
        from sklearn.datasets import fetch_openml
    except ImportError:
        print("kin8nm: scikit-learn is needed for the OpenML download; skipped")
        return
    try:
        ds = fetch_openml(name="kin8nm", version=1, as_frame=False, parser="liac-arff")
    except Exception as exc:  # network errors surface as several types
        print(f"kin8nm: OpenML unreachable ({exc}); place kin8nm.csv in {out} by hand")
        return
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow([f"theta{i + 1}" for i in range(ds.data.shape[1])] + ["y"])
    for row, t in zip(ds.data, ds.target):
        w.writerow([repr(float(v)) for v in row] + [repr(float(t))])
    (out / "kin8nm.csv").write_text(buf.getvalue())
    print(f"kin8nm: {ds.data.shape[0]} rows written to {out}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--data-dir", default=os.environ.get("JMPF_DATA", "data"))
    ap.add_argument("--only", choices=["pendigits", "kin8nm"])
    args = ap.parse_args(argv)
    root = Path(args.data_dir)
    if args.only in (None, "pendigits"):
        fetch_pendigits(root)
    if args.only in (None, "kin8nm"):
        fetch_kin8nm(root)
    for name in ("Set5", "T91"):
        if not (root / name).is_dir():
            print(f"{name}: not present; copy the images into {root / name}/")


if __name__ == "__main__":
    main()
