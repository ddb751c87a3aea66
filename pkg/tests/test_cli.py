import json

import numpy as np
import pytest

from conftest import synthetic_image
from jmpf.cli import main
from jmpf.imageio import read_image, write_image


def test_no_arguments_prints_usage(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["train", "--data", "x.csv", "--out", "m", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_bad_flag_value_is_usage_error(capsys):
    assert main(["bench", "--dataset", "pendigits", "--trees", "ten"]) == 1


def test_missing_files_are_data_errors(tmp_path, capsys):
    assert main(["train", "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path / "m")]) == 2
    assert main(["sr-run", "--model", str(tmp_path / "none"), "--in", "a.png", "--out", "b.png"]) == 2
    (tmp_path / "junk").write_bytes(b"XXXXjunk")
    assert main(["sr-eval", "--model", str(tmp_path / "junk"), "--images", str(tmp_path)]) == 2


def test_bench_missing_dataset_is_data_error(tmp_path, capsys):
    assert main(["bench", "--dataset", "kin8nm", "--data-dir", str(tmp_path)]) == 2
    assert "not found" in capsys.readouterr().err


@pytest.fixture
def csv_pair(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(150, 3))
    y = np.where(X[:, 0] > 0, "pos", "neg")
    train = tmp_path / "train.csv"
    train.write_text("".join(f"{a},{b},{c},{lab}\n" for (a, b, c), lab in zip(X, y)))
    feats = tmp_path / "feats.csv"
    feats.write_text("".join(f"{a},{b},{c}\n" for a, b, c in X[:10]))
    return train, feats, y


def test_train_and_predict(tmp_path, csv_pair, capsys):
    train, feats, y = csv_pair
    model = tmp_path / "m.jmpf"
    assert main(["train", "--data", str(train), "--out", str(model), "--trees", "10",
                 "--mode", "rf", "--seed", "3"]) == 0
    capsys.readouterr()
    assert main(["predict", "--model", str(model), "--data", str(feats)]) == 0
    lines = capsys.readouterr().out.split()
    assert len(lines) == 10 and set(lines) <= {"pos", "neg"}
    assert np.mean(np.array(lines) == y[:10]) >= 0.8
    out = tmp_path / "pred.txt"
    assert main(["predict", "--model", str(model), "--data", str(train), "--label-column", "-1",
                 "--out", str(out)]) == 0
    assert "error rate" in capsys.readouterr().err
    assert len(out.read_text().split()) == 150


def test_train_is_deterministic(tmp_path, csv_pair):
    train, _, _ = csv_pair
    a, b = tmp_path / "a.jmpf", tmp_path / "b.jmpf"
    for p in (a, b):
        assert main(["train", "--data", str(train), "--out", str(p), "--trees", "5", "--seed", "9"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_regression_train_predict(tmp_path, capsys):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(80, 2))
    data = tmp_path / "r.csv"
    data.write_text("x1,x2,t\n" + "".join(f"{a},{b},{a - b}\n" for a, b in X))
    model = tmp_path / "r.jmpf"
    assert main(["train", "--data", str(data), "--out", str(model), "--task", "regression",
                 "--header", "--trees", "5"]) == 0
    assert main(["predict", "--model", str(model), "--data", str(data), "--header",
                 "--label-column", "2"]) == 0
    captured = capsys.readouterr()
    assert len(captured.out.split()) == 80 and "rmse" in captured.err


@pytest.fixture
def image_dirs(tmp_path):
    hr = tmp_path / "hr"
    hr.mkdir()
    for s in range(3):
        write_image(hr / f"img{s}.png", synthetic_image(48, 60, seed=s))
    rgb = np.stack([synthetic_image(20, 24, seed=s) for s in (5, 6, 7)], axis=-1)
    write_image(tmp_path / "lr.png", rgb)
    write_image(tmp_path / "lr.pgm", rgb[..., 0])
    return tmp_path, hr


def test_sr_commands(image_dirs, capsys):
    root, hr = image_dirs
    model = root / "m.jmpf"
    assert main(["sr-train", "--images", str(hr), "--out", str(model), "--scale", "3", "--trees", "2",
                 "--min-leaf", "16", "--lambda", "0.1"]) == 0
    for src, dst in (("lr.png", "hr.png"), ("lr.pgm", "hr.pgm")):
        assert main(["sr-run", "--model", str(model), "--in", str(root / src),
                     "--out", str(root / dst), "--scale", "3"]) == 0
    assert read_image(root / "hr.png").shape == (60, 72, 3)
    assert read_image(root / "hr.pgm").shape == (60, 72)
    assert main(["sr-run", "--model", str(model), "--in", str(root / "lr.png"),
                 "--out", str(root / "x.png"), "--scale", "2"]) == 1
    capsys.readouterr()
    report = root / "eval.jsonl"
    assert main(["sr-eval", "--model", str(model), "--images", str(hr), "--json-out", str(report)]) == 0
    out = capsys.readouterr().out
    assert "average" in out
    records = [json.loads(line) for line in report.read_text().splitlines()]
    assert records[-1]["image"] == "average" and records[-1]["images"] == 3
    assert records[-1]["model"] >= records[-1]["bicubic"]


def test_sr_eval_bicubic_only(image_dirs, capsys):
    _, hr = image_dirs
    assert main(["sr-eval", "--images", str(hr)]) == 1
    assert main(["sr-eval", "--images", str(hr), "--scale", "3"]) == 0
    assert "average" in capsys.readouterr().out


@pytest.mark.slow
def test_bench_on_pendigits_if_present(tmp_path, capsys):
    from jmpf.datasets import default_data_dir

    root = default_data_dir()
    if not ((root / "pendigits" / "penbased.csv").exists() or (root / "pendigits" / "pendigits.tra").exists()):
        pytest.skip("pendigits not downloaded")
    assert main(["bench", "--dataset", "pendigits", "--mode", "jmpf", "--trees", "3", "--repeats", "2",
                 "--seed", "7", "--data-dir", str(root)]) == 0
    out = capsys.readouterr().out.splitlines()
    rec = json.loads(out[0])
    assert rec["mode"] == "jmpf" and rec["repeats"] == 2
    assert any(line.startswith("pendigits") for line in out[1:])


def test_sr_eval_zero_regressor_model_matches_bicubic(tmp_path, capsys):
    from jmpf.modelfile import save_model
    from jmpf.srpipe import PatchConfig, sr_forest_config, sr_train, upscale

    lrs = [synthetic_image(16, 20, seed=s) for s in range(3)]
    model = sr_train([upscale(lr, 3) for lr in lrs], PatchConfig(),
                     sr_forest_config(num_trees=2, min_samples_leaf=8, min_samples_split=16), lr_images=lrs)
    save_model(tmp_path / "zero.jmpf", model)
    hr = tmp_path / "hr"
    hr.mkdir()
    for s in range(2):
        write_image(hr / f"{s}.png", synthetic_image(45, 57, seed=10 + s))
    report = tmp_path / "r.jsonl"
    assert main(["sr-eval", "--model", str(tmp_path / "zero.jmpf"), "--images", str(hr),
                 "--json-out", str(report)]) == 0
    for line in report.read_text().splitlines():
        rec = json.loads(line)
        assert abs(rec["model"] - rec["bicubic"]) < 1e-3
