"""Self-contained synthetic face dataset.

Renders parametric face images (elliptical head, eyes with iris and
highlight, eyebrows, nose, mouth) with per-subject jitter in geometry
and color, writes 8-bit PNGs plus landmark text files, and emits a
tab-separated manifest: image_path<TAB>landmark_path<TAB>split.

Coordinates in landmark files are x = column, y = row; "left" means
viewer left.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
from PIL import Image


@dataclass
class ManifestEntry:
    image_path: Path
    landmark_path: Path
    split: str


def _alpha_ellipse(xx, yy, cx, cy, rx, ry, feather=1.0):
    d = np.sqrt(((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2)
    return np.clip((1.0 - d) * min(rx, ry) / feather + 0.5, 0.0, 1.0)


def _alpha_capsule(xx, yy, p0, p1, radius, feather=1.0):
    x0, y0 = p0
    x1, y1 = p1
    vx, vy = x1 - x0, y1 - y0
    length_sq = vx * vx + vy * vy
    if length_sq == 0.0:
        dist = np.sqrt((xx - x0) ** 2 + (yy - y0) ** 2)
    else:
        t = np.clip(((xx - x0) * vx + (yy - y0) * vy) / length_sq, 0.0, 1.0)
        dist = np.sqrt((xx - (x0 + t * vx)) ** 2 + (yy - (y0 + t * vy)) ** 2)
    return np.clip((radius - dist) / feather + 0.5, 0.0, 1.0)


def _paint(img, color, alpha):
    img *= (1.0 - alpha)[..., None]
    img += alpha[..., None] * np.asarray(color, dtype=np.float64)


_HAIR_COLORS = [(0.22, 0.15, 0.10), (0.10, 0.09, 0.09), (0.62, 0.50, 0.30), (0.35, 0.18, 0.10)]
_IRIS_COLORS = [(0.28, 0.45, 0.70), (0.35, 0.22, 0.13), (0.30, 0.52, 0.35), (0.45, 0.48, 0.52)]


def render_face(width: int, height: int, rng) -> Tuple[np.ndarray, Dict[str, List[Tuple[int, int]]]]:
    """One face image in [0, 1] RGB plus its landmark points."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.empty((height, width, 3), dtype=np.float64)

    def jit(lo, hi):
        return float(rng.uniform(lo, hi))

    def jcolor(base, spread=0.05):
        c = np.asarray(base) + rng.uniform(-spread, spread, size=3)
        return np.clip(c, 0.02, 0.98)

    # background: vertical gradient
    top = jcolor((0.55, 0.62, 0.72), 0.08)
    bottom = jcolor((0.33, 0.38, 0.46), 0.08)
    t = (yy / max(height - 1, 1))[..., None]
    img[:] = top * (1.0 - t) + bottom * t

    cx = width * (0.5 + jit(-0.015, 0.015))
    cy = height * (0.52 + jit(-0.015, 0.015))
    head_rx = width * 0.30 * (1.0 + jit(-0.06, 0.06))
    head_ry = height * 0.40 * (1.0 + jit(-0.06, 0.06))
    skin = jcolor((0.87, 0.72, 0.60))
    hair = jcolor(_HAIR_COLORS[int(rng.integers(len(_HAIR_COLORS)))], 0.04)
    iris = jcolor(_IRIS_COLORS[int(rng.integers(len(_IRIS_COLORS)))], 0.05)
    lips = jcolor((0.66, 0.30, 0.30), 0.06)

    head_alpha = _alpha_ellipse(xx, yy, cx, cy, head_rx, head_ry, feather=1.5)
    _paint(img, skin, head_alpha)
    # radial shading and a faint skin texture keep the face from being flat
    d = np.sqrt(((xx - cx) / head_rx) ** 2 + ((yy - cy) / head_ry) ** 2)
    img *= (1.0 - 0.20 * np.clip(d, 0.0, 1.0) ** 2 * head_alpha)[..., None]
    fx = jit(2.5, 4.5) / width
    fy = jit(2.0, 3.5) / height
    phase = jit(0.0, 6.28)
    texture = 0.012 * np.sin(2.0 * np.pi * (xx * fx + yy * fy) + phase)
    img += (texture * head_alpha)[..., None]

    _paint(img, hair, _alpha_ellipse(xx, yy, cx, cy - head_ry * 0.60, head_rx * 1.04, head_ry * 0.55, 1.5))

    eye_dx = head_rx * 0.45 * (1.0 + jit(-0.08, 0.08))
    eye_y = cy - head_ry * 0.22 * (1.0 + jit(-0.10, 0.10))
    eye_rx = head_rx * 0.18 * (1.0 + jit(-0.08, 0.08))
    eye_ry = eye_rx * (0.50 + jit(-0.05, 0.05))
    landmarks: Dict[str, List[Tuple[int, int]]] = {k: [] for k in (
        "left_eye", "right_eye", "left_eyebrow", "right_eyebrow", "nose", "mouth", "face_outline",
    )}

    brow_color = np.clip(hair * 0.8, 0.0, 1.0)
    brow_dy = eye_ry + head_ry * 0.10 * (1.0 + jit(-0.15, 0.15))
    brow_half = eye_rx * 1.15
    brow_r = max(1.2, height * 0.012 * (1.0 + jit(-0.2, 0.2)))
    brow_tilt = head_ry * jit(-0.02, 0.02)

    for side, name_eye, name_brow in ((-1, "left_eye", "left_eyebrow"), (1, "right_eye", "right_eyebrow")):
        ex = cx + side * eye_dx
        _paint(img, (0.93, 0.93, 0.91), _alpha_ellipse(xx, yy, ex, eye_y, eye_rx, eye_ry))
        iris_r = eye_ry * 0.80
        _paint(img, iris, _alpha_ellipse(xx, yy, ex, eye_y, iris_r, iris_r))
        pupil_r = iris_r * 0.45
        _paint(img, (0.05, 0.05, 0.06), _alpha_ellipse(xx, yy, ex, eye_y, pupil_r, pupil_r))
        _paint(img, (0.97, 0.97, 0.97), _alpha_ellipse(
            xx, yy, ex - iris_r * 0.35, eye_y - iris_r * 0.35, iris_r * 0.28, iris_r * 0.28
        ))
        landmarks[name_eye] = [
            (ex - eye_rx, eye_y), (ex + eye_rx, eye_y), (ex, eye_y - eye_ry), (ex, eye_y + eye_ry),
        ]
        by = eye_y - brow_dy
        p0 = (ex - brow_half, by + side * brow_tilt)
        p1 = (ex + brow_half, by - side * brow_tilt)
        _paint(img, brow_color, _alpha_capsule(xx, yy, p0, p1, brow_r))
        landmarks[name_brow] = [p0, p1, (ex, by)]

    nose_top = (cx, eye_y + eye_ry * 1.3)
    nose_tip = (cx, cy + head_ry * 0.14 * (1.0 + jit(-0.10, 0.10)))
    _paint(img, skin * 0.82, _alpha_capsule(xx, yy, nose_top, nose_tip, max(1.0, width * 0.008)))
    nostril_dx = head_rx * 0.10 * (1.0 + jit(-0.1, 0.1))
    nostril_r = max(1.0, width * 0.009)
    for side in (-1, 1):
        _paint(img, skin * 0.45, _alpha_ellipse(
            xx, yy, cx + side * nostril_dx, nose_tip[1], nostril_r, nostril_r * 0.8
        ))
    landmarks["nose"] = [
        nose_top, nose_tip, (cx - nostril_dx, nose_tip[1]), (cx + nostril_dx, nose_tip[1]),
    ]

    mouth_y = cy + head_ry * 0.45 * (1.0 + jit(-0.06, 0.06))
    mouth_half = head_rx * 0.38 * (1.0 + jit(-0.10, 0.10))
    lip_r = max(1.2, height * 0.011)
    _paint(img, lips * 0.55, _alpha_capsule(xx, yy, (cx - mouth_half, mouth_y), (cx + mouth_half, mouth_y), lip_r))
    lower_ry = height * 0.020 * (1.0 + jit(-0.15, 0.15))
    _paint(img, lips, _alpha_ellipse(xx, yy, cx, mouth_y + lower_ry + lip_r * 0.4, mouth_half * 0.72, lower_ry))
    landmarks["mouth"] = [
        (cx - mouth_half, mouth_y), (cx + mouth_half, mouth_y),
        (cx, mouth_y - lip_r), (cx, mouth_y + 2.0 * lower_ry),
    ]

    for angle in np.linspace(0.0, 2.0 * np.pi, 8, endpoint=False):
        landmarks["face_outline"].append(
            (cx + head_rx * np.cos(angle), cy + head_ry * np.sin(angle))
        )

    def as_pixel(pt):
        x = int(np.clip(round(pt[0]), 0, width - 1))
        y = int(np.clip(round(pt[1]), 0, height - 1))
        return (x, y)

    return np.clip(img, 0.0, 1.0), {k: [as_pixel(p) for p in v] for k, v in landmarks.items()}


def generate_dataset(
    out_dir, subjects: int = 20, width: int = 160, height: int = 128, seed: int = 0
) -> Path:
    """Render a dataset into out_dir; returns the manifest path."""
    if subjects < 1:
        raise ValueError(f"subjects must be >= 1, got {subjects}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seq = np.random.SeedSequence(seed)
    lines = []
    for i, child in enumerate(seq.spawn(subjects)):
        rng = np.random.default_rng(child)
        rgb, landmarks = render_face(width, height, rng)
        stem = f"face_{i:03d}"
        data = np.round(rgb * 255.0).astype(np.uint8)
        Image.fromarray(data, mode="RGB").save(out_dir / f"{stem}.png")
        with open(out_dir / f"{stem}.txt", "w", encoding="utf-8") as fh:
            fh.write(f"# landmarks for {stem} ({width}x{height})\n")
            for name, pts in landmarks.items():
                for x, y in pts:
                    fh.write(f"{name} {x} {y}\n")
        lines.append(f"{stem}.png\t{stem}.txt\tall\n")
    manifest = out_dir / "manifest.tsv"
    with open(manifest, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)
    return manifest


def load_manifest(path) -> List[ManifestEntry]:
    """Read a manifest; relative paths resolve against its directory."""
    path = Path(path)
    base = path.parent
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ValueError(
                    f"{path}: line {line_no}: expected 3 tab-separated fields, got {len(fields)}"
                )
            img, lm, split = fields
            entries.append(
                ManifestEntry(
                    image_path=base / img if not os.path.isabs(img) else Path(img),
                    landmark_path=base / lm if not os.path.isabs(lm) else Path(lm),
                    split=split.strip(),
                )
            )
    if not entries:
        raise ValueError(f"{path}: manifest has no entries")
    return entries
