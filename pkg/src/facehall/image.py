"""Image planes, resampling, quality metrics, and PNG I/O.

A plane is a 2-D float64 numpy array in row-major (height, width) order
with samples nominally in [0, 1].  Color images are kept as luma plus
two chroma planes so the enhancement stages can run on luma alone.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from PIL import Image

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


@dataclass
class ColorImage:
    """Luma plane plus optional chroma planes (None for grayscale)."""

    y: np.ndarray
    cb: Optional[np.ndarray] = None
    cr: Optional[np.ndarray] = None

    def __post_init__(self):
        self.y = _check_plane(self.y, "y")
        if (self.cb is None) != (self.cr is None):
            raise ValueError("cb and cr must be given together")
        if self.cb is not None:
            self.cb = _check_plane(self.cb, "cb")
            self.cr = _check_plane(self.cr, "cr")
            if self.cb.shape != self.y.shape or self.cr.shape != self.y.shape:
                raise ValueError("chroma planes must match the luma shape")

    @property
    def height(self) -> int:
        return self.y.shape[0]

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def is_gray(self) -> bool:
        return self.cb is None


@dataclass
class Patch:
    """A square pixel neighborhood flattened row-major."""

    center: Tuple[int, int]
    size: int
    values: np.ndarray


def _check_plane(a, name="plane"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    return a


def clamp01(plane):
    return np.clip(plane, 0.0, 1.0)


def cubic_kernel(t):
    """Piecewise-cubic interpolation kernel (a = -0.5).

    Reproduces linear ramps and has w(0) = 1, w(+-1) = w(+-2) = 0, so
    resizing to identical dimensions is the identity.
    """
    at = np.abs(np.asarray(t, dtype=np.float64))
    w = np.zeros_like(at)
    near = at <= 1.0
    far = (at > 1.0) & (at < 2.0)
    an = at[near]
    w[near] = (1.5 * an - 2.5) * an * an + 1.0
    af = at[far]
    w[far] = ((-0.5 * af + 2.5) * af - 4.0) * af + 2.0
    if w.ndim == 0:
        return float(w)
    return w


def _axis_weights(n_src, n_dst):
    """Dense (n_dst, n_src) interpolation matrix for one axis.

    Sample centers are aligned (src_x = (dst_x + 0.5) * n_src/n_dst - 0.5)
    and out-of-range taps are clamped to the edge sample (replicate).
    """
    scale = n_src / n_dst
    x = (np.arange(n_dst, dtype=np.float64) + 0.5) * scale - 0.5
    base = np.floor(x).astype(np.int64)
    frac = x - base
    weights = np.zeros((n_dst, n_src), dtype=np.float64)
    rows = np.arange(n_dst)
    for offset in range(-1, 3):
        taps = np.clip(base + offset, 0, n_src - 1)
        np.add.at(weights, (rows, taps), cubic_kernel(frac - offset))
    return weights


def bicubic_resize(plane, out_shape):
    """Resize a plane with cubic interpolation; output clamped to [0, 1].

    out_shape is (height, width).
    """
    plane = _check_plane(plane)
    out_h, out_w = int(out_shape[0]), int(out_shape[1])
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output dims must be positive, got {out_h}x{out_w}")
    h, w = plane.shape
    wr = _axis_weights(h, out_h)
    wc = _axis_weights(w, out_w)
    out = wr @ plane @ wc.T
    return clamp01(out)


def downsample(plane, factor):
    """Shrink a plane by an integer factor via bicubic resampling.

    Dimensions that do not divide evenly are first padded by edge
    replication on the bottom/right, so the output is ceil(dim/factor).
    """
    plane = _check_plane(plane)
    factor = int(factor)
    if factor < 2:
        raise ValueError(f"downsample factor must be >= 2, got {factor}")
    h, w = plane.shape
    pad_h = (-h) % factor
    pad_w = (-w) % factor
    if pad_h or pad_w:
        plane = np.pad(plane, ((0, pad_h), (0, pad_w)), mode="edge")
    return bicubic_resize(plane, ((h + pad_h) // factor, (w + pad_w) // factor))


def mse(a, b):
    a = _check_plane(a, "a")
    b = _check_plane(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(a, b, peak=1.0):
    """Peak signal-to-noise ratio in dB; +inf when the planes are equal."""
    err = mse(a, b)
    if err == 0.0:
        return float("inf")
    return float(10.0 * np.log10((peak * peak) / err))


def _gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-0.5 * (offsets / sigma) ** 2)
    g /= g.sum()
    return np.outer(g, g)


def ssim(a, b):
    """Mean structural similarity over all fully-contained windows.

    Gaussian-weighted 11x11 local statistics on the [0, 1] scale; both
    planes must be at least the window size in each dimension.
    """
    a = _check_plane(a, "a")
    b = _check_plane(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(
            f"planes must be at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape}"
        )
    w = _gaussian_window()

    def local_mean(x):
        wins = sliding_window_view(x, (SSIM_WINDOW, SSIM_WINDOW))
        return np.einsum("ijkl,kl->ij", wins, w)

    mu_a = local_mean(a)
    mu_b = local_mean(b)
    var_a = local_mean(a * a) - mu_a * mu_a
    var_b = local_mean(b * b) - mu_b * mu_b
    cov = local_mean(a * b) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def extract_patch(plane, center, size):
    """Square patch around (row, col); out-of-bounds samples replicate edges."""
    plane = _check_plane(plane)
    size = int(size)
    if size < 1 or size % 2 == 0:
        raise ValueError(f"patch size must be odd and positive, got {size}")
    row, col = int(center[0]), int(center[1])
    h, w = plane.shape
    if not (0 <= row < h and 0 <= col < w):
        raise ValueError(f"patch center {center} outside {h}x{w} plane")
    half = size // 2
    rows = np.clip(np.arange(row - half, row + half + 1), 0, h - 1)
    cols = np.clip(np.arange(col - half, col + half + 1), 0, w - 1)
    values = plane[np.ix_(rows, cols)].reshape(-1).copy()
    return Patch(center=(row, col), size=size, values=values)


# Full-range BT.601 conversion, luma Y = 0.299 R + 0.587 G + 0.114 B.
# Both directions are derived from the same luma weights so the pair is
# an exact algebraic inverse (roundtrip error at float rounding level).
_KR, _KG, _KB = 0.299, 0.587, 0.114


def rgb_to_ycbcr(rgb):
    """(h, w, 3) RGB in [0, 1] -> (y, cb, cr) planes, chroma offset by 0.5."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = _KR * r + _KG * g + _KB * b
    cb = (b - y) / (2.0 * (1.0 - _KB)) + 0.5
    cr = (r - y) / (2.0 * (1.0 - _KR)) + 0.5
    return y, cb, cr


def ycbcr_to_rgb(y, cb, cr):
    r = y + 2.0 * (1.0 - _KR) * (cr - 0.5)
    b = y + 2.0 * (1.0 - _KB) * (cb - 0.5)
    g = (y - _KR * r - _KB * b) / _KG
    return np.stack([r, g, b], axis=-1)


def load_image(path) -> ColorImage:
    """Read a PNG (or other PIL-readable file) into [0, 1] planes."""
    with Image.open(path) as im:
        if im.mode in ("1", "L", "I", "I;16", "F"):
            arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
            return ColorImage(y=arr)
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    y, cb, cr = rgb_to_ycbcr(arr)
    return ColorImage(y=y, cb=cb, cr=cr)


def save_image(img: ColorImage, path):
    """Write 8-bit PNG; values are clamped then rounded."""
    if img.is_gray:
        data = np.round(clamp01(img.y) * 255.0).astype(np.uint8)
        Image.fromarray(data, mode="L").save(path)
        return
    rgb = ycbcr_to_rgb(img.y, img.cb, img.cr)
    data = np.round(clamp01(rgb) * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path)
