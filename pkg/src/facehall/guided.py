"""Guided filtering and detail transfer.

The guided filter fits q = a*I + b per window by regularized local
regression on the guide I and averages the coefficients over windows.
Window means use exact pixel counts near the borders (no fixed
divisor), which keeps constants exactly invariant at the edges.

Detail transfer takes the smooth base of the deep component under the
guidance of the extracted structure and adds back the structure's own
high-frequency residue.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

DEFAULT_RADIUS = 8
DEFAULT_EPS = 1e-3


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:
        raise ValueError(f"planes must be 2-D with equal shapes: {a.shape} vs {b.shape}")
    return a, b


def _window_sum_last(x, radius):
    """Clipped sliding-window sums along the last axis (contiguous input)."""
    n = x.shape[-1]
    width = 2 * radius + 1
    out = np.empty_like(x)
    lo, hi = radius, n - radius - 1
    if lo <= hi:
        out[..., lo : hi + 1] = sliding_window_view(x, width, axis=-1).sum(axis=-1)
    for i in range(n):
        if lo <= i <= hi:
            continue
        out[..., i] = x[..., max(0, i - radius) : min(n, i + radius + 1)].sum(axis=-1)
    return out


def box_sum(plane, radius):
    """Sum over the (2r+1)-square window around each pixel, clipped at edges."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError(f"expected a 2-D plane, got {plane.shape}")
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    rows = _window_sum_last(np.ascontiguousarray(plane), radius)
    cols = _window_sum_last(np.ascontiguousarray(rows.T), radius)
    return np.ascontiguousarray(cols.T)


def box_count(shape, radius):
    """Exact per-pixel window pixel counts for the clipped box."""
    h, w = shape

    def axis_counts(n):
        idx = np.arange(n, dtype=np.float64)
        return np.minimum(idx + radius, n - 1) - np.maximum(idx - radius, 0) + 1.0

    return np.outer(axis_counts(h), axis_counts(w))


def box_mean(plane, radius):
    plane = np.asarray(plane, dtype=np.float64)
    return box_sum(plane, radius) / box_count(plane.shape, radius)


def guided_filter(plane, guide, radius=DEFAULT_RADIUS, eps=DEFAULT_EPS):
    """Edge-preserving smoothing of `plane` steered by `guide`.

    eps >= 0; zero is allowed only when every guide window has variance.
    Filtering a plane with itself at eps = 0 is the identity, and a
    constant plane passes through unchanged for any guide.
    """
    p, guide = _check_pair(plane, guide)
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    if eps < 0.0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    counts = box_count(p.shape, radius)
    mean_i = box_sum(guide, radius) / counts
    mean_p = box_sum(p, radius) / counts
    mean_ip = box_sum(guide * p, radius) / counts
    mean_ii = box_sum(guide * guide, radius) / counts
    cov_ip = mean_ip - mean_i * mean_p
    var_i = mean_ii - mean_i * mean_i
    a = cov_ip / (var_i + eps)
    b = mean_p - a * mean_i
    mean_a = box_sum(a, radius) / counts
    mean_b = box_sum(b, radius) / counts
    return mean_a * guide + mean_b


def transfer_details(
    deep, extracted, radius=DEFAULT_RADIUS, eps=DEFAULT_EPS, clamp=True
):
    """Fuse a deep component with extracted structure.

    base   = guided_filter(deep, guide=extracted)
    smooth = guided_filter(extracted, guide=extracted)
    output = base + (extracted - smooth), clamped to [0, 1]

    The sum is grouped as (base - smooth) + extracted so that feeding
    the same plane in twice returns it bit-for-bit before the clamp.
    """
    deep, extracted = _check_pair(deep, extracted)
    base = guided_filter(deep, extracted, radius, eps)
    smooth = guided_filter(extracted, extracted, radius, eps)
    out = (base - smooth) + extracted
    if clamp:
        return np.clip(out, 0.0, 1.0)
    return out
