"""8-bit image I/O (binary PGM natively, PNG and friends through Pillow) and colour transforms."""
from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

IMAGE_SUFFIXES = {".png", ".pgm", ".ppm", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg"}


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ValueError("truncated PNM header")
    return data[start:pos], pos


def read_pnm(path) -> np.ndarray:
    """Binary PGM (P5) or PPM (P6) reader; 16-bit samples are rescaled to 0..255."""
    data = Path(path).read_bytes()
    magic, pos = _read_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"{path}: not a binary PGM/PPM file")
    w, pos = _read_token(data, pos)
    h, pos = _read_token(data, pos)
    maxval, pos = _read_token(data, pos)
    w, h, maxval = int(w), int(h), int(maxval)
    pos += 1  # single whitespace byte before the raster
    channels = 1 if magic == b"P5" else 3
    count = w * h * channels
    if maxval < 256:
        raster = np.frombuffer(data, dtype=np.uint8, count=count, offset=pos)
    else:
        raster = np.frombuffer(data, dtype=">u2", count=count, offset=pos)
        raster = np.rint(raster.astype(np.float64) * 255.0 / maxval).astype(np.uint8)
    if maxval < 255:
        raster = np.rint(raster.astype(np.float64) * 255.0 / maxval).astype(np.uint8)
    shape = (h, w) if channels == 1 else (h, w, 3)
    return raster.reshape(shape).copy()


def write_pnm(path, img: np.ndarray) -> None:
    img = to_uint8(img)
    magic = b"P5" if img.ndim == 2 else b"P6"
    h, w = img.shape[:2]
    _atomic_write(path, magic + f"\n{w} {h}\n255\n".encode() + img.tobytes())


def read_image(path) -> np.ndarray:
    """Load an image as uint8, shape (H, W) for grayscale or (H, W, 3) for colour."""
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".ppm", ".pnm"):
        return read_pnm(path)
    from PIL import Image

    with Image.open(path) as im:
        if im.mode in ("L", "1", "I;16", "I"):
            arr = np.asarray(im.convert("L"))
        else:
            arr = np.asarray(im.convert("RGB"))
    return arr.copy()


def write_image(path, img: np.ndarray) -> None:
    """Write an 8-bit image atomically (temp file + rename); format from the suffix."""
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".ppm", ".pnm"):
        write_pnm(path, img)
        return
    from PIL import Image

    arr = to_uint8(img)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", suffix=path.suffix)
    os.close(fd)
    try:
        Image.fromarray(arr).save(tmp)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def list_images(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"image directory not found: {d}")
    return sorted(p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def to_uint8(img) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype == np.uint8:
        return img
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


# BT.601 studio-swing YCbCr on 8-bit RGB
_YCC = np.array([[65.481, 128.553, 24.966],
                 [-37.797, -74.203, 112.0],
                 [112.0, -93.786, -18.214]]) / 255.0
_YCC_OFFSET = np.array([16.0, 128.0, 128.0])


def rgb_to_ycbcr(rgb) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    return rgb @ _YCC.T + _YCC_OFFSET


def ycbcr_to_rgb(ycc) -> np.ndarray:
    ycc = np.asarray(ycc, dtype=np.float64)
    return (ycc - _YCC_OFFSET) @ np.linalg.inv(_YCC).T


def to_luminance(img) -> np.ndarray:
    """Y channel (16..235 range) of an RGB image; grayscale input is returned as float."""
    img = np.asarray(img)
    if img.ndim == 2:
        return img.astype(np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) RGB, got shape {img.shape}")
    return rgb_to_ycbcr(img)[..., 0]
