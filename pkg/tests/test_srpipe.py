import numpy as np
import pytest

from conftest import synthetic_image
from jmpf.srpipe import (PatchConfig, assemble_patches, bicubic_resize, crop_to_multiple,
                         cubic_kernel, derivative_maps, downscale, evaluate_image,
                         extract_patches, patch_starts, psnr, resize_weights, sr_apply,
                         sr_forest_config, sr_train, sr_upscale_color, training_pairs, upscale)


def test_cubic_kernel_interpolates():
    np.testing.assert_array_equal(cubic_kernel([0.0, 1.0, 2.0, -1.0, 2.5]), [1.0, 0.0, 0.0, 0.0, 0.0])
    # partition of unity at any phase
    for t in np.linspace(0, 1, 7):
        assert cubic_kernel(t + np.arange(-2, 2)).sum() == pytest.approx(1.0, abs=1e-12)


def test_resize_constant_and_identity():
    c = np.full((7, 9), 42.0)
    np.testing.assert_allclose(bicubic_resize(c, (21, 27)), 42.0, atol=1e-12)
    np.testing.assert_allclose(bicubic_resize(c, (3, 4)), 42.0, atol=1e-12)
    img = synthetic_image(10, 12)
    np.testing.assert_allclose(bicubic_resize(img, img.shape), img, atol=1e-9)


def test_resize_reproduces_ramps():
    ramp = np.tile(np.arange(16.0), (8, 1))
    up = bicubic_resize(ramp, (16, 32))
    expect = (np.arange(32) + 0.5) / 2 - 0.5
    # edge clamping bends the ramp within 2 source pixels (4 output pixels) of the border
    np.testing.assert_allclose(up[:, 4:-4], np.tile(expect, (16, 1))[:, 4:-4], atol=1e-6)
    assert abs(up[0, 2] - expect[2]) > 1e-3


def test_resize_weights_rows_sum_to_one():
    for n_in, n_out in [(10, 30), (30, 10), (7, 7), (5, 13)]:
        np.testing.assert_allclose(resize_weights(n_in, n_out).sum(axis=1), 1.0, atol=1e-12)


def test_antialias_widens_downscale_kernel():
    W = resize_weights(30, 10)
    assert np.count_nonzero(W[5]) > 4
    W = resize_weights(30, 10, antialias=False)
    assert np.count_nonzero(W[5]) <= 4


def test_crop_to_multiple_is_centred():
    img = np.arange(11 * 14).reshape(11, 14)
    c = crop_to_multiple(img, 3)
    assert c.shape == (9, 12)
    np.testing.assert_array_equal(c, img[1:10, 1:13])
    with pytest.raises(ValueError):
        crop_to_multiple(np.zeros((2, 5)), 3)


def test_derivative_maps_constant_and_ramps():
    np.testing.assert_array_equal(derivative_maps(np.full((8, 8), 5.0)), 0.0)
    ramp = np.tile(np.arange(10.0), (9, 1))
    F = derivative_maps(ramp)
    np.testing.assert_array_equal(F[0][:, 1:-1], 2.0)
    np.testing.assert_array_equal(F[2][:, 2:-2], 0.0)
    np.testing.assert_array_equal(F[1], 0.0)
    Ft = derivative_maps(ramp.T.copy())
    np.testing.assert_array_equal(Ft[1][1:-1], 2.0)
    np.testing.assert_array_equal(Ft[3][2:-2], 0.0)


def test_derivative_maps_rejects_tiny_images():
    with pytest.raises(ValueError):
        derivative_maps(np.zeros((4, 10)))


def test_patch_grid():
    np.testing.assert_array_equal(patch_starts(12, 6, 3), [0, 3, 6])
    np.testing.assert_array_equal(patch_starts(13, 6, 3), [0, 3, 6, 7])
    assert extract_patches(np.zeros((12, 12)), 6, 3).shape == (9, 36)
    with pytest.raises(ValueError):
        patch_starts(5, 6, 3)


def test_patch_vector_layout():
    maps = np.random.default_rng(0).normal(size=(4, 12, 15))
    P = extract_patches(maps, 6, 3)
    xs = patch_starts(15, 6, 3)
    row, col = 1, 2  # grid position -> row-major index
    i = row * len(xs) + col
    expect = maps[:, 3:9, xs[col]:xs[col] + 6].reshape(-1)
    np.testing.assert_array_equal(P[i], expect)


def test_assemble_inverts_extract():
    img = synthetic_image(20, 23)
    P = extract_patches(img, 6, 3)
    back, cover = assemble_patches(P, img.shape, 6, 3)
    np.testing.assert_allclose(back, img, atol=1e-12)
    assert cover.min() >= 1


def test_psnr_reference_values():
    a = np.full((10, 10), 100.0)
    assert psnr(a, a) == float("inf")
    assert psnr(a, a + 16) == pytest.approx(20 * np.log10(255 / 16), abs=1e-12)
    assert psnr(a, a + 16) == pytest.approx(24.05, abs=0.01)
    b = a.copy()
    b[::2] += 1
    b[1::2] -= 1
    assert psnr(a, b) == pytest.approx(48.13, abs=0.01)


def test_psnr_border_crop():
    a = np.zeros((10, 10))
    b = a.copy()
    b[0, :] = 255.0
    assert psnr(a, b, border=1) == float("inf")
    with pytest.raises(ValueError):
        psnr(a, b, border=5)


def test_patch_config_validation():
    with pytest.raises(ValueError):
        PatchConfig(stride=7)
    with pytest.raises(ValueError):
        PatchConfig(scale=1)
    assert PatchConfig().feature_dim == 144 and PatchConfig().target_dim == 36


def _zero_residual_corpus(seed=0):
    lrs = [synthetic_image(16, 20, seed=s) for s in range(seed, seed + 3)]
    return [upscale(lr, 3) for lr in lrs], lrs


def test_zero_residual_corpus_has_zero_targets():
    hrs, lrs = _zero_residual_corpus()
    F, Y = training_pairs(hrs, PatchConfig(), lr_images=lrs)
    assert F.shape[1] == 144 and Y.shape[1] == 36
    assert np.abs(Y).max() == 0.0


def test_zero_residual_model_is_bicubic():
    hrs, lrs = _zero_residual_corpus()
    cfg = sr_forest_config(num_trees=2, min_samples_leaf=8, min_samples_split=16)
    model = sr_train(hrs, PatchConfig(), cfg, lr_images=lrs)
    for t in model.forest.trees:
        assert np.linalg.norm(t.leaf_values, axis=(1, 2)).max() < 1e-6
    lr = synthetic_image(14, 17, seed=9)
    np.testing.assert_allclose(sr_apply(model, lr, clamp=False), upscale(lr, 3), atol=1e-6)


def test_sr_train_bookkeeping_and_gain(images):
    cfg = sr_forest_config(num_trees=3, min_samples_leaf=16, min_samples_split=32)
    model = sr_train(images, PatchConfig(), cfg)
    n = model.meta["n_train_patches"]
    F, _ = training_pairs(images, PatchConfig())
    assert F.shape[0] == n
    Z = model.features(upscale(downscale(crop_to_multiple(images[0], 3), 3), 3))
    assert Z.shape[1] == model.pca.n_components == model.rotation.dim
    for t in model.forest.trees:
        assert t.leaf_counts.sum() == n
        assert np.all(t.threshold[t.feature >= 0] == 0.0)
    for img in images:
        score = evaluate_image(model, img)
        assert score.model >= score.bicubic


def test_sr_apply_is_deterministic_and_sized(images):
    model = sr_train(images[:2], PatchConfig(scale=2, patch_size=4, stride=2),
                     sr_forest_config(num_trees=2, min_samples_leaf=16, min_samples_split=32))
    lr = synthetic_image(15, 11, seed=5)
    a, b = sr_apply(model, lr), sr_apply(model, lr)
    assert a.shape == (30, 22)
    np.testing.assert_array_equal(a, b)
    assert a.min() >= 0.0 and a.max() <= 255.0
    rgb = np.stack([lr, lr[::-1], 255 - lr], axis=-1).astype(np.uint8)
    out = sr_upscale_color(model, rgb)
    assert out.shape == (30, 22, 3) and out.dtype == np.uint8


def test_standard_baseline_and_raw_target(images):
    cfg = sr_forest_config(num_trees=2, mode="standard", min_samples_leaf=16, min_samples_split=32)
    model = sr_train(images[:2], PatchConfig(target="raw"), cfg, use_rotation=False)
    np.testing.assert_array_equal(model.rotation.R, np.eye(model.rotation.dim))
    out = sr_apply(model, synthetic_image(12, 12, seed=3))
    assert out.shape == (36, 36)


def test_lr_images_must_match_hr():
    with pytest.raises(ValueError):
        training_pairs([np.zeros((30, 30))], PatchConfig(), lr_images=[np.zeros((9, 10))])
    with pytest.raises(ValueError):
        training_pairs([], PatchConfig())


def test_bicubic_only_evaluation():
    s = evaluate_image(None, synthetic_image(30, 33), scale=3)
    assert np.isfinite(s.bicubic) and np.isnan(s.model)
