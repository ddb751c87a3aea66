import numpy as np
import pytest

from jmpf.imageio import (list_images, read_image, rgb_to_ycbcr, to_luminance, to_uint8,
                          write_image, ycbcr_to_rgb)


def test_luminance_of_reference_colours():
    px = np.array([[[255, 255, 255], [0, 0, 0], [128, 128, 128]]], dtype=np.uint8)
    y = to_luminance(px)[0]
    assert y[0] == pytest.approx(235.0, abs=1e-9)
    assert y[1] == pytest.approx(16.0, abs=1e-9)
    assert y[2] == pytest.approx(16 + 219 * 128 / 255, abs=1e-9)  # 125.929


def test_luminance_passes_gray_through():
    g = np.arange(12, dtype=np.uint8).reshape(3, 4)
    np.testing.assert_array_equal(to_luminance(g), g.astype(float))
    with pytest.raises(ValueError):
        to_luminance(np.zeros((2, 2, 4)))


def test_ycbcr_inverts():
    rgb = np.random.default_rng(0).integers(0, 256, size=(5, 7, 3)).astype(float)
    np.testing.assert_allclose(ycbcr_to_rgb(rgb_to_ycbcr(rgb)), rgb, atol=1e-9)


def test_to_uint8_rounds_and_clips():
    np.testing.assert_array_equal(to_uint8(np.array([-3.0, 0.4, 0.6, 254.5, 300.0])),
                                  [0, 0, 1, 254, 255])


@pytest.mark.parametrize("suffix", [".pgm", ".png"])
def test_gray_round_trip(tmp_path, suffix):
    img = np.random.default_rng(1).integers(0, 256, size=(9, 13)).astype(np.uint8)
    path = tmp_path / f"g{suffix}"
    write_image(path, img)
    np.testing.assert_array_equal(read_image(path), img)


@pytest.mark.parametrize("suffix", [".ppm", ".png"])
def test_rgb_round_trip(tmp_path, suffix):
    img = np.random.default_rng(2).integers(0, 256, size=(6, 5, 3)).astype(np.uint8)
    path = tmp_path / f"c{suffix}"
    write_image(path, img)
    np.testing.assert_array_equal(read_image(path), img)


def test_pgm_header_comments_and_maxval(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n2 2\n# another\n15\n" + bytes([0, 5, 10, 15]))
    np.testing.assert_array_equal(read_image(path), [[0, 85], [170, 255]])


def test_pgm_sixteen_bit(tmp_path):
    path = tmp_path / "d.pgm"
    raster = np.array([0, 65535, 32768], dtype=">u2").tobytes()
    path.write_bytes(b"P5 3 1 65535\n" + raster)
    np.testing.assert_array_equal(read_image(path), [[0, 255, 128]])


def test_pgm_rejects_other_formats(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_bytes(b"P2\n1 1\n255\n0\n")
    with pytest.raises(ValueError):
        read_image(path)


def test_list_images_sorted_and_filtered(tmp_path):
    for name in ("b.png", "a.pgm", "notes.txt"):
        (tmp_path / name).write_bytes(b"")
    assert [p.name for p in list_images(tmp_path)] == ["a.pgm", "b.png"]
    with pytest.raises(FileNotFoundError):
        list_images(tmp_path / "missing")
