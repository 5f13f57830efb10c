"""Exemplar patch databases and K-nearest-neighbor search.

Entries pair a patch from an upsampled ("deep") component with the
patch at the same position in the true high-resolution component.
Similarity blends normalized cross-correlation with mean absolute
difference:

    d = alpha * (1 - ncc) + (1 - alpha) * mean|p - q|

NCC of a zero-variance patch is defined as 0.  Distances here are
computed with elementwise reductions (never matrix products) so the
batched search path is bit-identical to the scalar `similarity`.
"""

import struct
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import CategoryMismatchError, FormatError
from .image import Patch
from .regions import CATEGORIES

DEFAULT_ALPHA = 0.2
DEFAULT_K = 5

_MAGIC = b"LCGEPDB1"


def _patch_values(p) -> np.ndarray:
    if isinstance(p, Patch):
        return np.asarray(p.values, dtype=np.float64)
    v = np.asarray(p, dtype=np.float64)
    return v.reshape(-1)


def similarity(p, q, alpha: float = DEFAULT_ALPHA) -> float:
    """Blended patch distance in [0, 2*alpha + (1 - alpha)]."""
    pv = _patch_values(p)
    qv = _patch_values(q)
    if pv.shape != qv.shape:
        raise ValueError(f"patch size mismatch: {pv.size} vs {qv.size}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    pc = pv - np.mean(pv)
    qc = qv - np.mean(qv)
    pn = np.sqrt(np.sum(pc * pc))
    qn = np.sqrt(np.sum(qc * qc))
    if pn == 0.0 or qn == 0.0:
        ncc = 0.0
    else:
        ncc = np.clip(np.sum(pc * qc) / (pn * qn), -1.0, 1.0)
    d_abs = np.mean(np.abs(pv - qv))
    return float(alpha * (1.0 - ncc) + (1.0 - alpha) * d_abs)


@dataclass
class PatchDatabase:
    """Dense exemplar patches for one component category.

    Entries are sorted by (source_id, row, col); row/col are patch
    centers inside the source component crop.
    """

    category: str
    patch_size: int
    source_ids: List[str]
    source_index: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    deep: np.ndarray  # (n_entries, patch_size**2)
    hr: np.ndarray

    _centered: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    _norms: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category '{self.category}'")
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise ValueError(f"patch size must be odd, got {self.patch_size}")
        m = self.patch_size * self.patch_size
        if self.deep.ndim != 2 or self.deep.shape[1] != m:
            raise ValueError(f"deep matrix must be (n, {m}), got {self.deep.shape}")
        if self.hr.shape != self.deep.shape:
            raise ValueError("deep and hr matrices must match in shape")
        n = self.deep.shape[0]
        if not (self.source_index.shape == self.rows.shape == self.cols.shape == (n,)):
            raise ValueError("entry metadata arrays must have one row per entry")

    def __len__(self) -> int:
        return self.deep.shape[0]

    def _search_arrays(self):
        # centered rows and their norms, cached on first search
        if self._centered is None:
            self._centered = self.deep - self.deep.mean(axis=1)[:, None]
            self._norms = np.sqrt((self._centered * self._centered).sum(axis=1))
        return self._centered, self._norms


def patch_blocks(deep_plane, hr_plane, patch_size: int):
    """All interior patches of one component pair, row-major.

    Returns (deep_matrix, hr_matrix, rows, cols) with patch centers at
    margin floor(patch_size/2) from every edge, stride 1.
    """
    deep_plane = np.asarray(deep_plane, dtype=np.float64)
    hr_plane = np.asarray(hr_plane, dtype=np.float64)
    if deep_plane.shape != hr_plane.shape:
        raise ValueError(
            f"component shape mismatch: {deep_plane.shape} vs {hr_plane.shape}"
        )
    n = int(patch_size)
    h, w = deep_plane.shape
    if h < n or w < n:
        raise ValueError(f"component {h}x{w} smaller than patch size {n}")
    half = n // 2

    def windows(plane):
        return sliding_window_view(plane, (n, n)).reshape(-1, n * n).copy()

    grid_r, grid_c = np.meshgrid(
        np.arange(half, h - half, dtype=np.uint32),
        np.arange(half, w - half, dtype=np.uint32),
        indexing="ij",
    )
    return windows(deep_plane), windows(hr_plane), grid_r.reshape(-1), grid_c.reshape(-1)


def build_db(
    pairs: Sequence[Tuple[str, np.ndarray, np.ndarray]],
    category: str,
    patch_size: int,
) -> PatchDatabase:
    """Database over (source_id, deep component, hr component) triples."""
    if not pairs:
        raise ValueError("no component pairs given")
    blocks = []
    for sid, deep_plane, hr_plane in pairs:
        blocks.append((sid,) + patch_blocks(deep_plane, hr_plane, patch_size))
    return db_from_blocks(category, patch_size, blocks)


def db_from_blocks(category: str, patch_size: int, blocks) -> PatchDatabase:
    """Assemble a database from precomputed per-source patch blocks.

    blocks: iterable of (source_id, deep_matrix, hr_matrix, rows, cols).
    """
    blocks = sorted(blocks, key=lambda b: b[0])
    ids = [b[0] for b in blocks]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate source ids")
    sizes = [b[1].shape[0] for b in blocks]
    index = np.repeat(np.arange(len(ids), dtype=np.uint32), sizes)
    return PatchDatabase(
        category=category,
        patch_size=patch_size,
        source_ids=ids,
        source_index=index,
        rows=np.concatenate([b[3] for b in blocks]).astype(np.uint32),
        cols=np.concatenate([b[4] for b in blocks]).astype(np.uint32),
        deep=np.concatenate([b[1] for b in blocks], axis=0),
        hr=np.concatenate([b[2] for b in blocks], axis=0),
    )


def _distance_block(deep, centered, norms, queries, alpha):
    """Distances entry x query, bit-identical to scalar `similarity`."""
    q_mean = queries.mean(axis=1)
    qc = queries - q_mean[:, None]
    qn = np.sqrt((qc * qc).sum(axis=1))
    num = (centered[:, None, :] * qc[None, :, :]).sum(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ncc = num / (norms[:, None] * qn[None, :])
    ncc = np.where((norms[:, None] == 0.0) | (qn[None, :] == 0.0), 0.0, ncc)
    ncc = np.clip(ncc, -1.0, 1.0)
    d_abs = np.abs(deep[:, None, :] - queries[None, :, :]).mean(axis=2)
    return alpha * (1.0 - ncc) + (1.0 - alpha) * d_abs


def query_distances(
    db: PatchDatabase, queries, alpha: float = DEFAULT_ALPHA, candidates=None
):
    """(n_candidates, n_queries) distance matrix; queries are (b, n*n) rows."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[1] != db.patch_size**2:
        raise ValueError(
            f"query length {queries.shape[1]} does not match patch size {db.patch_size}"
        )
    centered, norms = db._search_arrays()
    if candidates is not None:
        return _distance_block(
            db.deep[candidates], centered[candidates], norms[candidates], queries, alpha
        )
    return _distance_block(db.deep, centered, norms, queries, alpha)


def knn(
    db: PatchDatabase,
    query,
    k: int = DEFAULT_K,
    alpha: float = DEFAULT_ALPHA,
    candidates=None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact k-nearest entries (indices, distances), ties by entry order.

    candidates optionally restricts the search to the given entry
    indices; returned indices are always into the full database.
    """
    if len(db) == 0:
        raise ValueError("empty database")
    pool = len(db) if candidates is None else len(candidates)
    if not 1 <= k <= pool:
        raise ValueError(f"k={k} out of range for {pool} candidates")
    qv = _patch_values(query)
    dist = query_distances(db, qv[None, :], alpha, candidates)[:, 0]
    order = np.argsort(dist, kind="stable")[:k]
    if candidates is not None:
        return np.asarray(candidates)[order], dist[order]
    return order, dist[order]


def save_db(db: PatchDatabase, path):
    """Binary little-endian database file (magic LCGEPDB1)."""
    blob = bytearray()
    blob += _MAGIC
    blob += struct.pack(
        "<BHIQ", CATEGORIES.index(db.category), db.patch_size, len(db.source_ids), len(db)
    )
    for sid in db.source_ids:
        raw = sid.encode("utf-8")
        blob += struct.pack("<H", len(raw)) + raw
    blob += db.source_index.astype("<u4").tobytes()
    blob += db.rows.astype("<u4").tobytes()
    blob += db.cols.astype("<u4").tobytes()
    blob += db.deep.astype("<f8").tobytes()
    blob += db.hr.astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_db(path, expected_category: Optional[str] = None) -> PatchDatabase:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(_MAGIC)] != _MAGIC:
        raise FormatError(f"{path}: bad magic, not a patch database")
    off = len(_MAGIC)
    try:
        cat_code, patch_size, n_sources, n_entries = struct.unpack_from("<BHIQ", blob, off)
    except struct.error:
        raise FormatError(f"{path}: truncated header")
    off += struct.calcsize("<BHIQ")
    if cat_code >= len(CATEGORIES):
        raise FormatError(f"{path}: invalid category code {cat_code}")
    source_ids = []
    for _ in range(n_sources):
        try:
            (length,) = struct.unpack_from("<H", blob, off)
        except struct.error:
            raise FormatError(f"{path}: truncated source table")
        off += 2
        if off + length > len(blob):
            raise FormatError(f"{path}: truncated source table")
        source_ids.append(blob[off : off + length].decode("utf-8"))
        off += length

    def take(dtype, count, shape):
        nonlocal off
        itemsize = np.dtype(dtype).itemsize
        end = off + itemsize * count
        if end > len(blob):
            raise FormatError(f"{path}: truncated entry payload")
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=off).reshape(shape)
        off = end
        return arr.copy()

    m = patch_size * patch_size
    index = take("<u4", n_entries, (n_entries,))
    rows = take("<u4", n_entries, (n_entries,))
    cols = take("<u4", n_entries, (n_entries,))
    deep = take("<f8", n_entries * m, (n_entries, m))
    hr = take("<f8", n_entries * m, (n_entries, m))
    if off != len(blob):
        raise FormatError(f"{path}: {len(blob) - off} trailing bytes")
    if n_entries and index.max(initial=0) >= max(n_sources, 1):
        raise FormatError(f"{path}: source index out of range")
    try:
        db = PatchDatabase(
            category=CATEGORIES[cat_code],
            patch_size=patch_size,
            source_ids=source_ids,
            source_index=index,
            rows=rows,
            cols=cols,
            deep=deep,
            hr=hr,
        )
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}")
    if expected_category is not None and db.category != expected_category:
        raise CategoryMismatchError(
            f"{path}: holds '{db.category}' patches, expected '{expected_category}'"
        )
    return db
