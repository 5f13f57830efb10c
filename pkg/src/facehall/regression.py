"""Ridge regression over matched exemplar patches.

For a query patch q and its K nearest deep patches stacked as the
columns of T, the combination weights solve

    (T'T + lam*I) F = T'q

by Cholesky factorization (never explicit inversion), and the output
patch is the same combination of the matched high-resolution patches.
The default lam equals the pixel count of a patch.
"""

from typing import Optional

import numpy as np
import scipy.linalg
from numpy.lib.stride_tricks import sliding_window_view

from .config import HallucinationConfig
from .errors import SingularSystemError
from .patchdb import PatchDatabase, knn, query_distances


def solve(neighbors, query, lam: float):
    """Ridge coefficients for neighbor rows (K, m) against a query (m,)."""
    t = np.asarray(neighbors, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if t.ndim != 2 or t.shape[1] != q.size:
        raise ValueError(f"neighbors {t.shape} do not match query length {q.size}")
    if lam < 0.0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    gram = t @ t.T
    gram[np.diag_indices_from(gram)] += lam
    rhs = t @ q
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"normal equations are singular: {exc}")
    return scipy.linalg.cho_solve(factor, rhs)


def synthesize(neighbors_hr, coeffs):
    """Weighted combination of high-resolution neighbor rows."""
    t = np.asarray(neighbors_hr, dtype=np.float64)
    f = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    if t.ndim != 2 or t.shape[0] != f.size:
        raise ValueError(f"{t.shape[0]} neighbors vs {f.size} coefficients")
    return (f[:, None] * t).sum(axis=0)


def extract_structure(
    deep_plane, db: PatchDatabase, cfg: Optional[HallucinationConfig] = None
):
    """Patch-by-patch structure plane for a deep component.

    Patch centers step by cfg.stride over the valid interior (plus the
    final valid position on each axis), so every query is a real window
    of the plane; synthesized patches accumulate into an average over
    overlaps.  Pixels no patch covers (possible only when stride >
    patch size) fall back to the deep component value.  Output is
    clamped to [0, 1].
    """
    cfg = cfg or HallucinationConfig()
    deep_plane = np.asarray(deep_plane, dtype=np.float64)
    if deep_plane.ndim != 2:
        raise ValueError(f"expected a 2-D plane, got {deep_plane.shape}")
    n = cfg.patch_size
    if n != db.patch_size:
        raise ValueError(
            f"config patch size {n} does not match database patch size {db.patch_size}"
        )
    if len(db) < cfg.k:
        raise ValueError(f"database has {len(db)} entries, need at least k={cfg.k}")
    half = n // 2
    h, w = deep_plane.shape
    if h < n or w < n:
        raise ValueError(f"plane {h}x{w} smaller than patch size {n}")
    lam = cfg.lambda_value
    windows = sliding_window_view(deep_plane, (n, n))  # (h-n+1, w-n+1, n, n)
    acc = np.zeros((h, w), dtype=np.float64)
    count = np.zeros((h, w), dtype=np.float64)
    for r in center_grid(h, n, cfg.stride):
        for c in center_grid(w, n, cfg.stride):
            qv = windows[r - half, c - half].reshape(-1)
            cand = _window_candidates(db, r, c, cfg)
            idx, _ = knn(db, qv, cfg.k, alpha=cfg.alpha, candidates=cand)
            coeffs = solve(db.deep[idx], qv, lam)
            patch = synthesize(db.hr[idx], coeffs).reshape(n, n)
            acc[r - half : r + half + 1, c - half : c + half + 1] += patch
            count[r - half : r + half + 1, c - half : c + half + 1] += 1.0
    with np.errstate(invalid="ignore"):
        out = np.where(count > 0.0, acc / count, deep_plane)
    return np.clip(out, 0.0, 1.0)


def center_grid(dim: int, patch_size: int, stride: int):
    """Patch-center positions along one axis.

    Centers step by stride over the valid interior; the final valid
    center is always included so the far edge stays covered whenever
    stride <= patch_size.
    """
    half = patch_size // 2
    last = dim - half - 1
    centers = list(range(half, last + 1, stride))
    if centers[-1] != last:
        centers.append(last)
    return centers


def _window_candidates(db: PatchDatabase, r: int, c: int, cfg: HallucinationConfig):
    """Entry indices within the optional spatial search window."""
    radius = cfg.window_radius
    if radius is None:
        return None
    rows = db.rows.astype(np.int64)
    cols = db.cols.astype(np.int64)
    near = (np.abs(rows - r) <= radius) & (np.abs(cols - c) <= radius)
    cand = np.flatnonzero(near)
    if cand.size < cfg.k:
        return None  # window too sparse here; search everything
    return cand
