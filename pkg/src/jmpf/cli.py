"""``jmpf`` command line: forest training/prediction, benchmarks and super-resolution.

Exit codes: 0 success, 1 usage error, 2 data or model error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import (DATASETS, DataError, format_reports, load_csv, load_named,
                       read_features, run_benchmark)
from .forest import ForestConfig, SplitMode, Task
from .imageio import list_images, read_image, to_luminance, write_image
from .modelfile import ModelFileError, load_model, save_model
from .pipeline import ForestModel, fit_forest_model
from .srpipe import (PatchConfig, SRModel, evaluate_image, sr_apply, sr_forest_config,
                     sr_train, sr_upscale_color)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
_MODES = {"rf": SplitMode.STANDARD, "jmpf": SplitMode.JMPF}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _add_forest_flags(p, trees=100, depth=15):
    p.add_argument("--mode", choices=sorted(_MODES), default="jmpf")
    p.add_argument("--trees", type=int, default=trees)
    p.add_argument("--depth", type=int, default=depth)
    p.add_argument("--candidates", type=int, default=1, help="split dimensions drawn per node (#H)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="jmpf", description="Joint maximum purity forests and forest-based super-resolution.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("train", help="train a forest on a CSV file")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--task", choices=["classification", "regression"], default="classification")
    p.add_argument("--label-column", type=int, default=-1)
    p.add_argument("--header", action="store_true", help="first CSV row is a header")
    p.add_argument("--no-scale", action="store_true", help="center features without unit scaling")
    _add_forest_flags(p)

    p = sub.add_parser("predict", help="predict rows of a CSV file with a saved forest")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--out", type=Path, help="write predictions here instead of stdout")
    p.add_argument("--label-column", type=int, default=None,
                   help="column holding labels/targets to drop and score against")
    p.add_argument("--header", action="store_true")

    p = sub.add_parser("bench", help="repeated train/test runs of RF and JMPF")
    p.add_argument("--dataset", required=True, choices=sorted(DATASETS))
    p.add_argument("--data-dir", type=Path)
    p.add_argument("--mode", choices=["rf", "jmpf", "both"], default="both")
    p.add_argument("--trees", type=_int_list, default=[100], help="comma-separated, e.g. 10,50,100")
    p.add_argument("--depth", type=int, default=15)
    p.add_argument("--candidates", type=_int_list, default=[1], help="comma-separated #H values")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0, help="first seed; run i uses seed + i")
    p.add_argument("--no-scale", action="store_true")
    p.add_argument("--json-out", type=Path, help="also write the JSON lines to this file")

    p = sub.add_parser("sr-train", help="train a super-resolution model on a directory of HR images")
    p.add_argument("--images", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--scale", type=int, default=3)
    p.add_argument("--patch", type=int, default=6)
    p.add_argument("--stride", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--pca-energy", type=float, default=0.999)
    p.add_argument("--min-leaf", type=int, default=128)
    p.add_argument("--limit", type=int, help="use only the first N images (sorted by name)")
    _add_forest_flags(p, trees=10)

    p = sub.add_parser("sr-run", help="upscale one image")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--in", dest="inp", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--scale", type=int, help="must match the model's scale if given")

    p = sub.add_parser("sr-eval", help="PSNR of the model and of bicubic on HR images")
    p.add_argument("--model", type=Path, help="omit to score bicubic only")
    p.add_argument("--images", required=True, type=Path)
    p.add_argument("--scale", type=int, help="required without --model")
    p.add_argument("--json-out", type=Path)
    return ap


def _forest_config(args, task: Task) -> ForestConfig:
    return ForestConfig(num_trees=args.trees, max_depth=args.depth, num_candidate_dims=args.candidates,
                        mode=_MODES[args.mode], task=task, seed=args.seed)


def cmd_train(args) -> int:
    task = Task(args.task)
    ds = load_csv(args.data, label_column=args.label_column, task=task, has_header=args.header)
    cfg = _forest_config(args, task)
    if task is Task.CLASSIFICATION:
        model = fit_forest_model(ds.X, ds.y, cfg, unit_scale=not args.no_scale,
                                 n_classes=ds.n_classes, class_labels=ds.class_labels)
    else:
        model = fit_forest_model(ds.X, ds.y[:, 0], cfg, unit_scale=not args.no_scale)
    save_model(args.out, model)
    print(f"trained {cfg.num_trees} {args.mode} trees on {ds.n} rows -> {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    if not isinstance(model, ForestModel):
        raise DataError(f"{args.model} is not a forest model")
    classify = model.task is Task.CLASSIFICATION
    if args.label_column is not None:
        ds = load_csv(args.data, label_column=args.label_column,
                      task=Task.CLASSIFICATION if classify else Task.REGRESSION,
                      has_header=args.header, class_labels=model.class_labels if classify else None)
        X = ds.X
    else:
        X = read_features(args.data, args.header)
        ds = None
    pred = model.predict(X)
    if classify:
        labels = model.class_labels or [str(i) for i in range(model.forest.n_outputs)]
        lines = [labels[i] for i in pred]
    else:
        lines = [repr(float(v)) for v in np.ravel(pred)]
    text = "\n".join(lines) + "\n"
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    if ds is not None:
        if classify:
            print(f"error rate: {float(np.mean(pred != ds.y)):.6f}", file=sys.stderr)
        else:
            print(f"rmse: {float(np.sqrt(np.mean((pred - ds.y[:, 0]) ** 2))):.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    modes = ["rf", "jmpf"] if args.mode == "both" else [args.mode]
    task = DATASETS[args.dataset]
    configs = [ForestConfig(num_trees=t, max_depth=args.depth, num_candidate_dims=h, mode=_MODES[m], task=task)
               for h in args.candidates for t in args.trees for m in modes]
    seeds = [args.seed + i for i in range(args.repeats)]
    if task is Task.REGRESSION:
        data = lambda s: load_named(args.dataset, args.data_dir, seed=s)  # noqa: E731
        data(seeds[0])  # surface a missing file before any training
    else:
        data = load_named(args.dataset, args.data_dir)
    reports = run_benchmark(data, configs, repeats=args.repeats, seeds=seeds,
                            unit_scale=not args.no_scale, name=args.dataset)
    lines = [r.to_json() for r in reports]
    for line in lines:
        print(line)
    print(format_reports(reports))
    if args.json_out:
        args.json_out.write_text("\n".join(lines) + "\n")
    return EXIT_OK


def _load_gray_dir(directory: Path, limit: int | None = None) -> list[tuple[str, np.ndarray]]:
    paths = list_images(directory)
    if limit is not None:
        paths = paths[:limit]
    if not paths:
        raise DataError(f"no images in {directory}")
    return [(p.name, read_image(p)) for p in paths]


def cmd_sr_train(args) -> int:
    patch = PatchConfig(scale=args.scale, patch_size=args.patch, stride=args.stride, pca_energy=args.pca_energy)
    cfg = sr_forest_config(num_trees=args.trees, max_depth=args.depth, num_candidate_dims=args.candidates,
                           mode=_MODES[args.mode], ridge_lambda=args.lam, seed=args.seed,
                           min_samples_leaf=args.min_leaf, min_samples_split=2 * args.min_leaf)
    images = [to_luminance(im) for _, im in _load_gray_dir(args.images, args.limit)]
    model = sr_train(images, patch, cfg)
    save_model(args.out, model)
    print(f"trained on {len(images)} images, {model.meta['n_train_patches']} patches, "
          f"{model.meta['pca_components']} PCA components -> {args.out}", file=sys.stderr)
    return EXIT_OK


def _load_sr_model(path: Path) -> SRModel:
    model = load_model(path)
    if not isinstance(model, SRModel):
        raise DataError(f"{path} is not a super-resolution model")
    return model


def cmd_sr_run(args) -> int:
    model = _load_sr_model(args.model)
    if args.scale is not None and args.scale != model.scale:
        raise UsageError(f"--scale {args.scale} does not match the model scale {model.scale}")
    img = read_image(args.inp)
    out = sr_upscale_color(model, img) if img.ndim == 3 else sr_apply(model, img)
    write_image(args.out, out)
    return EXIT_OK


def cmd_sr_eval(args) -> int:
    model = _load_sr_model(args.model) if args.model else None
    if model is None and args.scale is None:
        raise UsageError("--scale is required without --model")
    if model is not None and args.scale is not None and args.scale != model.scale:
        raise UsageError(f"--scale {args.scale} does not match the model scale {model.scale}")
    scores = [evaluate_image(model, im, name, scale=args.scale) for name, im in _load_gray_dir(args.images)]
    bic = float(np.mean([s.bicubic for s in scores]))
    lines = [f"{'image':<24} {'bicubic':>9} {'model':>9} {'gain':>7}"]
    for s in scores:
        lines.append(f"{s.name:<24} {s.bicubic:>9.3f} {s.model:>9.3f} {s.gain:>7.3f}")
    summary = {"images": len(scores), "bicubic": bic}
    if model is not None:
        mdl = float(np.mean([s.model for s in scores]))
        summary.update(model=mdl, gain=mdl - bic)
        lines.append(f"{'average':<24} {bic:>9.3f} {mdl:>9.3f} {mdl - bic:>7.3f}")
    else:
        lines.append(f"{'average':<24} {bic:>9.3f}")
    print("\n".join(lines))
    records = [{"image": s.name, "bicubic": s.bicubic, "model": None if model is None else s.model}
               for s in scores]
    records.append({"image": "average", **summary})
    blob = "\n".join(json.dumps(r, sort_keys=True) for r in records)
    print(blob)
    if args.json_out:
        args.json_out.write_text(blob + "\n")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "bench": cmd_bench,
            "sr-train": cmd_sr_train, "sr-run": cmd_sr_run, "sr-eval": cmd_sr_eval}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ModelFileError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"jmpf: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
