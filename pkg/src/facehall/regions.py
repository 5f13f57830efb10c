"""Facial component regions: landmark parsing, rectangle building, stitching.

Landmark files are plain text, one "name x y" triple per line with
x = column and y = row in pixels; lines starting with '#' are ignored.
Components are padded bounding rectangles around landmark groups, and
the remainder region covers everything the four components do not.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

import numpy as np

from .errors import CoverageError, LandmarkError

LANDMARK_NAMES = frozenset(
    {
        "left_eye",
        "right_eye",
        "left_eyebrow",
        "right_eyebrow",
        "nose",
        "mouth",
        "face_outline",
    }
)
REQUIRED_LANDMARKS = (
    "left_eye",
    "right_eye",
    "left_eyebrow",
    "right_eyebrow",
    "nose",
    "mouth",
)
CATEGORIES = ("eyes", "eyebrows", "nose", "mouth", "remainder")
COMPONENT_CATEGORIES = CATEGORIES[:4]

# landmark groups feeding each component rectangle
_CATEGORY_SOURCES = {
    "eyes": ("left_eye", "right_eye"),
    "eyebrows": ("left_eyebrow", "right_eyebrow"),
    "nose": ("nose",),
    "mouth": ("mouth",),
}

DEFAULT_PAD = 8


@dataclass
class LandmarkSet:
    """Named landmark points, each an (n, 2) array of (x, y) pixels."""

    points: Dict[str, np.ndarray]

    def group(self, names: Iterable[str]) -> np.ndarray:
        parts = [self.points[n] for n in names if n in self.points]
        return np.concatenate(parts, axis=0)


@dataclass
class ComponentRegion:
    """A category's padded rectangle plus a full-canvas binary mask.

    rect is (x0, y0, x1, y1) with inclusive pixel bounds.
    """

    category: str
    rect: Tuple[int, int, int, int]
    mask: np.ndarray


def parse_landmarks(text: str, width: int, height: int) -> LandmarkSet:
    """Parse landmark text, validating names and coordinate bounds."""
    points: Dict[str, List[Tuple[float, float]]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise LandmarkError(
                f"expected 'name x y', got {len(tokens)} fields", line_no
            )
        name, xs, ys = tokens
        if name not in LANDMARK_NAMES:
            raise LandmarkError(f"unknown landmark name '{name}'", line_no)
        try:
            x = float(xs)
            y = float(ys)
        except ValueError:
            raise LandmarkError(f"non-numeric coordinates '{xs} {ys}'", line_no)
        if not (0 <= x < width and 0 <= y < height):
            raise LandmarkError(
                f"point ({x:g}, {y:g}) outside {width}x{height} image", line_no
            )
        points.setdefault(name, []).append((x, y))
    missing = [n for n in REQUIRED_LANDMARKS if n not in points]
    if missing:
        raise LandmarkError(f"missing landmarks: {', '.join(missing)}")
    return LandmarkSet(
        points={n: np.array(pts, dtype=np.float64) for n, pts in points.items()}
    )


def load_landmarks(path, width: int, height: int) -> LandmarkSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_landmarks(fh.read(), width, height)


def _padded_rect(pts, width, height, pad):
    x0 = max(0, int(np.floor(pts[:, 0].min())) - pad)
    y0 = max(0, int(np.floor(pts[:, 1].min())) - pad)
    x1 = min(width - 1, int(np.ceil(pts[:, 0].max())) + pad)
    y1 = min(height - 1, int(np.ceil(pts[:, 1].max())) + pad)
    return (x0, y0, x1, y1)


def build_regions(
    landmarks: LandmarkSet, width: int, height: int, pad: int = DEFAULT_PAD
) -> Dict[str, ComponentRegion]:
    """Component rectangles (padded, clamped) plus the remainder region.

    Component masks are the filled rectangles; the remainder mask is the
    complement of their union over the full canvas, so together the five
    masks always cover every pixel.
    """
    if pad < 0:
        raise ValueError(f"pad must be non-negative, got {pad}")
    regions: Dict[str, ComponentRegion] = {}
    covered = np.zeros((height, width), dtype=bool)
    for category in COMPONENT_CATEGORIES:
        pts = landmarks.group(_CATEGORY_SOURCES[category])
        rect = _padded_rect(pts, width, height, pad)
        x0, y0, x1, y1 = rect
        mask = np.zeros((height, width), dtype=bool)
        mask[y0 : y1 + 1, x0 : x1 + 1] = True
        covered |= mask
        regions[category] = ComponentRegion(category=category, rect=rect, mask=mask)
    regions["remainder"] = ComponentRegion(
        category="remainder",
        rect=(0, 0, width - 1, height - 1),
        mask=~covered,
    )
    return regions


def crop(plane: np.ndarray, region: ComponentRegion) -> np.ndarray:
    x0, y0, x1, y1 = region.rect
    return plane[y0 : y1 + 1, x0 : x1 + 1].copy()


def stitch(
    pieces: List[Tuple[ComponentRegion, np.ndarray]], width: int, height: int
) -> np.ndarray:
    """Recombine per-region planes; overlaps average with uniform weights."""
    acc = np.zeros((height, width), dtype=np.float64)
    count = np.zeros((height, width), dtype=np.float64)
    for region, piece in pieces:
        x0, y0, x1, y1 = region.rect
        rect_h, rect_w = y1 - y0 + 1, x1 - x0 + 1
        if piece.shape != (rect_h, rect_w):
            raise ValueError(
                f"{region.category} piece shape {piece.shape} does not match "
                f"rect {rect_w}x{rect_h}"
            )
        weight = region.mask[y0 : y1 + 1, x0 : x1 + 1].astype(np.float64)
        acc[y0 : y1 + 1, x0 : x1 + 1] += piece * weight
        count[y0 : y1 + 1, x0 : x1 + 1] += weight
    uncovered = count == 0
    if uncovered.any():
        ys, xs = np.nonzero(uncovered)
        raise CoverageError(
            f"{uncovered.sum()} uncovered pixels, first at (x={xs[0]}, y={ys[0]})"
        )
    return acc / count
