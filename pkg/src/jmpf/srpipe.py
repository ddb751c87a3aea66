"""Single-image super-resolution with a ridge-leaf JMPF forest.

Images are 2-D float64 arrays (rows, cols) holding intensities on the 0..255
scale; colour inputs are reduced to luminance before they get here.

Training: HR image -> bicubic down by ``scale`` -> bicubic back up (the "mid"
image) -> four derivative maps of mid -> per-patch feature vectors
(4 * p * p) paired with the HR - mid residual patch (p * p). Features go
through PCA (energy threshold) and an ITQ rotation before the forest.
Inference reverses this and averages overlapping residual patches.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .forest import Forest, ForestConfig, SplitMode, Task, train_forest
from .numerics import PcaBasis, pca_apply, pca_fit
from .rotation import DEFAULT_ITERATIONS, RotationModel, itq_fit, rotate

FILTER_SUPPORT = 5


# --- bicubic resampling ---------------------------------------------------

def cubic_kernel(x, a: float = -0.5) -> np.ndarray:
    """Keys cubic convolution kernel (Catmull-Rom for a = -0.5), support [-2, 2]."""
    ax = np.abs(np.asarray(x, dtype=np.float64))
    ax2, ax3 = ax * ax, ax * ax * ax
    inner = (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0
    outer = a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a
    return np.where(ax <= 1.0, inner, np.where(ax < 2.0, outer, 0.0))


def resize_weights(n_in: int, n_out: int, antialias: bool = True) -> np.ndarray:
    """(n_out, n_in) matrix taking a 1-D signal to ``n_out`` samples.

    Pixel centres are aligned (half-pixel convention) and out-of-range taps
    clamp to the edge sample. When shrinking with ``antialias`` the kernel is
    stretched by the scale factor, matching MATLAB ``imresize``.
    """
    if n_in < 1 or n_out < 1:
        raise ValueError("sizes must be positive")
    scale = n_out / n_in
    kscale = scale if (antialias and scale < 1.0) else 1.0
    width = 4.0 / kscale
    u = (np.arange(n_out) + 0.5) / scale - 0.5
    left = np.floor(u - width / 2.0).astype(np.int64)
    taps = int(np.ceil(width)) + 2
    idx = left[:, None] + np.arange(taps)[None, :]
    w = kscale * cubic_kernel(kscale * (u[:, None] - idx))
    w /= w.sum(axis=1, keepdims=True)
    idx = np.clip(idx, 0, n_in - 1)
    W = np.zeros((n_out, n_in))
    np.add.at(W, (np.repeat(np.arange(n_out), taps), idx.ravel()), w.ravel())
    return W


def bicubic_resize(img, out_shape: tuple[int, int], antialias: bool = True) -> np.ndarray:
    """Separable bicubic resize of a 2-D image to ``out_shape = (rows, cols)``."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    rows, cols = out_shape
    Wr = resize_weights(img.shape[0], rows, antialias)
    Wc = resize_weights(img.shape[1], cols, antialias)
    return Wr @ img @ Wc.T


def crop_to_multiple(img, scale: int) -> np.ndarray:
    """Centre crop so both sides are multiples of ``scale``."""
    img = np.asarray(img)
    h, w = img.shape[:2]
    hh, ww = h - h % scale, w - w % scale
    if hh == 0 or ww == 0:
        raise ValueError(f"image {h}x{w} is smaller than the scale factor {scale}")
    top, left = (h - hh) // 2, (w - ww) // 2
    return img[top:top + hh, left:left + ww]


def downscale(hr, scale: int) -> np.ndarray:
    h, w = hr.shape
    if h % scale or w % scale:
        raise ValueError(f"image {h}x{w} is not a multiple of scale {scale}")
    return bicubic_resize(hr, (h // scale, w // scale))


def upscale(lr, scale: int) -> np.ndarray:
    h, w = lr.shape
    return bicubic_resize(lr, (h * scale, w * scale))


# --- features and patches -------------------------------------------------

def derivative_maps(img) -> np.ndarray:
    """First and second derivative responses, shape (4, rows, cols).

    Order: horizontal [-1, 0, 1], its transpose, horizontal [1, 0, -2, 0, 1],
    its transpose. Applied as correlation with edge-clamped borders.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    h, w = img.shape
    if h < FILTER_SUPPORT or w < FILTER_SUPPORT:
        raise ValueError(f"image {h}x{w} is smaller than the {FILTER_SUPPORT}-tap filter support")
    P = np.pad(img, 2, mode="edge")

    def at(dy, dx):
        return P[2 + dy:2 + dy + h, 2 + dx:2 + dx + w]

    return np.stack([
        at(0, 1) - at(0, -1),
        at(1, 0) - at(-1, 0),
        at(0, -2) - 2.0 * img + at(0, 2),
        at(-2, 0) - 2.0 * img + at(2, 0),
    ])


def patch_starts(n: int, patch: int, stride: int) -> np.ndarray:
    """Top-left offsets along one axis; the last patch is snapped to the border."""
    if n < patch:
        raise ValueError(f"extent {n} is smaller than the patch size {patch}")
    starts = list(range(0, n - patch + 1, stride))
    if starts[-1] != n - patch:
        starts.append(n - patch)
    return np.asarray(starts, dtype=np.int64)


def extract_patches(maps, patch: int, stride: int) -> np.ndarray:
    """Flatten patches of a (c, rows, cols) stack into (n_patches, c * patch * patch).

    Patches are in row-major grid order; within a vector the channel index
    varies slowest, then patch row, then patch column.
    """
    maps = np.asarray(maps, dtype=np.float64)
    if maps.ndim == 2:
        maps = maps[None]
    c, h, w = maps.shape
    ys, xs = patch_starts(h, patch, stride), patch_starts(w, patch, stride)
    win = sliding_window_view(maps, (patch, patch), axis=(1, 2))  # (c, h', w', p, p)
    sel = win[:, ys][:, :, xs]  # (c, ny, nx, p, p)
    return np.ascontiguousarray(sel.transpose(1, 2, 0, 3, 4).reshape(len(ys) * len(xs), c * patch * patch))


def assemble_patches(values, shape: tuple[int, int], patch: int, stride: int):
    """Overlap-average (n_patches, patch*patch) values back onto an image.

    Returns ``(image, coverage)``; pixels no patch covers are 0 with coverage 0.
    """
    h, w = shape
    ys, xs = patch_starts(h, patch, stride), patch_starts(w, patch, stride)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (len(ys) * len(xs), patch * patch):
        raise ValueError(f"expected {(len(ys) * len(xs), patch * patch)} patch values, got {values.shape}")
    grid = values.reshape(len(ys), len(xs), patch, patch)
    acc = np.zeros(shape)
    cover = np.zeros(shape)
    # grid starts are distinct, so each (dy, dx) plane scatters without collisions
    for dy in range(patch):
        for dx in range(patch):
            sl = np.ix_(ys + dy, xs + dx)
            acc[sl] += grid[:, :, dy, dx]
            cover[sl] += 1.0
    out = np.divide(acc, cover, out=np.zeros(shape), where=cover > 0)
    return out, cover


# --- model ----------------------------------------------------------------

@dataclass(frozen=True)
class PatchConfig:
    """``target`` is "residual" (HR minus bicubic) or "raw" (HR intensities)."""

    scale: int = 3
    patch_size: int = 6
    stride: int = 3
    pca_energy: float = 0.999
    target: str = "residual"

    def __post_init__(self):
        if self.scale < 2:
            raise ValueError("scale must be >= 2")
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        if not 1 <= self.stride <= self.patch_size:
            raise ValueError("stride must be in [1, patch_size] so patches cover the image")
        if not 0.0 < self.pca_energy <= 1.0:
            raise ValueError("pca_energy must be in (0, 1]")
        if self.target not in ("residual", "raw"):
            raise ValueError("target must be 'residual' or 'raw'")

    @property
    def feature_dim(self) -> int:
        return 4 * self.patch_size ** 2

    @property
    def target_dim(self) -> int:
        return self.patch_size ** 2


def sr_forest_config(**overrides) -> ForestConfig:
    """Forest defaults for super-resolution: 10 ridge-leaf JMPF trees of depth 15."""
    base = dict(num_trees=10, max_depth=15, mode=SplitMode.JMPF, task=Task.RIDGE,
                ridge_lambda=0.1, min_samples_split=256, min_samples_leaf=128)
    base.update(overrides)
    return ForestConfig(**base)


@dataclass
class SRModel:
    patch: PatchConfig
    pca: PcaBasis
    rotation: RotationModel
    forest: Forest
    meta: dict = field(default_factory=dict)

    @property
    def scale(self) -> int:
        return self.patch.scale

    def features(self, mid) -> np.ndarray:
        F = extract_patches(derivative_maps(mid), self.patch.patch_size, self.patch.stride)
        return np.ascontiguousarray(rotate(self.rotation, pca_apply(self.pca, F)))


def training_pairs(hr_images, patch: PatchConfig, lr_images=None):
    """Stack (features, targets) over a corpus.

    ``lr_images`` (same length as ``hr_images``) replaces the bicubic
    degradation; each LR image must be exactly ``1/scale`` of the cropped HR.
    """
    if lr_images is not None and len(lr_images) != len(hr_images):
        raise ValueError("lr_images must pair one-to-one with hr_images")
    if len(hr_images) == 0:
        raise ValueError("no training images")
    s, p, st = patch.scale, patch.patch_size, patch.stride
    feats, targets = [], []
    for i, hr in enumerate(hr_images):
        hr = crop_to_multiple(np.asarray(hr, dtype=np.float64), s)
        if lr_images is None:
            lr = downscale(hr, s)
        else:
            lr = np.asarray(lr_images[i], dtype=np.float64)
            if lr.shape != (hr.shape[0] // s, hr.shape[1] // s):
                raise ValueError(f"lr image {i} has shape {lr.shape}, expected {(hr.shape[0] // s, hr.shape[1] // s)}")
        mid = upscale(lr, s)
        feats.append(extract_patches(derivative_maps(mid), p, st))
        tgt = hr - mid if patch.target == "residual" else hr
        targets.append(extract_patches(tgt, p, st))
    return np.concatenate(feats), np.concatenate(targets)


def sr_train(hr_images, patch: PatchConfig | None = None, forest: ForestConfig | None = None, *,
             lr_images=None, use_rotation: bool = True, itq_iterations: int = DEFAULT_ITERATIONS,
             n_jobs: int = 1) -> SRModel:
    """Fit PCA, the ITQ rotation and a ridge-leaf forest on a list of HR luminance images.

    With ``use_rotation=False`` the rotation is the identity (used for the
    Standard-RF baseline).
    """
    patch = patch or PatchConfig()
    forest = forest or sr_forest_config()
    if forest.task is not Task.RIDGE:
        forest = forest.replace(task=Task.RIDGE)
    F, Y = training_pairs(hr_images, patch, lr_images)
    pca = pca_fit(F, energy=patch.pca_energy)
    Z = pca_apply(pca, F)
    if use_rotation:
        rot = itq_fit(Z, iterations=itq_iterations, seed=forest.seed)
    else:
        k = Z.shape[1]
        rot = RotationModel(np.zeros(k), np.eye(k), np.zeros(1), 0, forest.seed)
    Z = np.ascontiguousarray(rotate(rot, Z))
    trees = train_forest(Z, Y, forest, n_jobs=n_jobs)
    meta = {"n_train_patches": int(F.shape[0]), "pca_components": int(pca.n_components)}
    return SRModel(patch, pca, rot, trees, meta)


def sr_apply(model: SRModel, lr, clamp: bool = True) -> np.ndarray:
    """Upscale a 2-D LR luminance image by ``model.scale``."""
    lr = np.asarray(lr, dtype=np.float64)
    if lr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {lr.shape}")
    p, st = model.patch.patch_size, model.patch.stride
    mid = upscale(lr, model.scale)
    pred = model.forest.predict(model.features(mid))
    field_, cover = assemble_patches(pred, mid.shape, p, st)
    if model.patch.target == "residual":
        out = mid + field_
    else:
        out = np.where(cover > 0, field_, mid)
    return np.clip(out, 0.0, 255.0) if clamp else out


def sr_upscale_color(model: SRModel, rgb_lr) -> np.ndarray:
    """Y through the model, chroma by plain bicubic; returns uint8 RGB."""
    from .imageio import rgb_to_ycbcr, to_uint8, ycbcr_to_rgb

    ycc = rgb_to_ycbcr(rgb_lr)
    y = sr_apply(model, ycc[..., 0])
    cb = upscale(ycc[..., 1], model.scale)
    cr = upscale(ycc[..., 2], model.scale)
    return to_uint8(ycbcr_to_rgb(np.stack([y, cb, cr], axis=-1)))


# --- evaluation -----------------------------------------------------------

def psnr(a, b, border: int = 0, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB after cropping ``border`` pixels per side; inf if equal."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if border:
        if 2 * border >= min(a.shape[:2]):
            raise ValueError("border crop leaves no pixels")
        a = a[border:-border, border:-border]
        b = b[border:-border, border:-border]
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)


@dataclass(frozen=True)
class ImageScore:
    name: str
    bicubic: float
    model: float

    @property
    def gain(self) -> float:
        return self.model - self.bicubic


def evaluate_image(model: SRModel | None, hr, name: str = "", scale: int | None = None) -> ImageScore:
    """Bicubic and model PSNR on the luminance of one HR image.

    The image is cropped to a multiple of the scale, degraded by bicubic
    downscaling, and scored with ``scale`` border pixels ignored. Both
    reconstructions are clamped to [0, 255]. ``model=None`` scores bicubic only.
    """
    from .imageio import to_luminance

    s = model.scale if model is not None else scale
    if s is None:
        raise ValueError("scale is required when no model is given")
    y = crop_to_multiple(to_luminance(hr), s)
    lr = downscale(y, s)
    bic = psnr(np.clip(upscale(lr, s), 0.0, 255.0), y, border=s)
    sr = psnr(sr_apply(model, lr), y, border=s) if model is not None else float("nan")
    return ImageScore(name, bic, sr)
