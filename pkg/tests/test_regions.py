import numpy as np
import pytest

from facehall.errors import CoverageError, LandmarkError
from facehall.regions import (
    CATEGORIES,
    COMPONENT_CATEGORIES,
    REQUIRED_LANDMARKS,
    build_regions,
    crop,
    parse_landmarks,
    stitch,
)

GOOD_TEXT = """\
# demo face
left_eye 20 30
left_eye 34 30
right_eye 60 30
right_eye 74 30
left_eyebrow 20 20
left_eyebrow 34 20
right_eyebrow 60 20
right_eyebrow 74 20
nose 47 40
nose 47 52
mouth 36 66
mouth 58 66
mouth 47 62
"""


class TestParsing:
    def test_groups_by_name(self):
        lms = parse_landmarks(GOOD_TEXT, 96, 80)
        assert lms.points["left_eye"].shape == (2, 2)
        assert lms.points["mouth"].shape == (3, 2)
        assert np.array_equal(lms.points["nose"][1], (47.0, 52.0))

    def test_comment_and_blank_lines_ignored(self):
        text = "\n\n# only a comment\n" + GOOD_TEXT
        lms = parse_landmarks(text, 96, 80)
        assert set(REQUIRED_LANDMARKS) <= set(lms.points)

    def test_unknown_name_rejected_with_line_number(self):
        text = GOOD_TEXT + "chin 40 70\n"
        with pytest.raises(LandmarkError) as err:
            parse_landmarks(text, 96, 80)
        assert "line 15" in str(err.value)
        assert "chin" in str(err.value)

    def test_wrong_token_count(self):
        with pytest.raises(LandmarkError) as err:
            parse_landmarks("left_eye 10\n", 96, 80)
        assert "line 1" in str(err.value)

    def test_non_numeric_coordinate(self):
        with pytest.raises(LandmarkError):
            parse_landmarks("left_eye ten 30\n", 96, 80)

    def test_out_of_bounds_coordinate(self):
        with pytest.raises(LandmarkError) as err:
            parse_landmarks(GOOD_TEXT + "nose 96 40\n", 96, 80)
        assert "line 15" in str(err.value)

    def test_missing_required_group(self):
        text = "\n".join(
            line for line in GOOD_TEXT.splitlines() if not line.startswith("mouth")
        )
        with pytest.raises(LandmarkError) as err:
            parse_landmarks(text, 96, 80)
        assert "mouth" in str(err.value)


class TestRegions:
    def setup_method(self):
        self.lms = parse_landmarks(GOOD_TEXT, 96, 80)
        self.regions = build_regions(self.lms, 96, 80, pad=8)

    def test_all_categories_present(self):
        assert set(self.regions) == set(CATEGORIES)

    def test_component_rect_is_padded_bbox(self):
        x0, y0, x1, y1 = self.regions["eyes"].rect
        # eye landmarks span x 20..74, y 30..30, padded by 8
        assert (x0, y0, x1, y1) == (12, 22, 82, 38)

    def test_rect_clamped_to_canvas(self):
        regions = build_regions(self.lms, 96, 80, pad=50)
        x0, y0, x1, y1 = regions["mouth"].rect
        assert x0 == 0 and y0 >= 0
        assert x1 == 95 and y1 == 79

    def test_component_mask_matches_rect(self):
        reg = self.regions["nose"]
        x0, y0, x1, y1 = reg.rect
        expect = np.zeros((80, 96), dtype=bool)
        expect[y0 : y1 + 1, x0 : x1 + 1] = True
        assert np.array_equal(reg.mask, expect)

    def test_remainder_is_complement_of_components(self):
        union = np.zeros((80, 96), dtype=bool)
        for cat in COMPONENT_CATEGORIES:
            union |= self.regions[cat].mask
        assert np.array_equal(self.regions["remainder"].mask, ~union)
        assert self.regions["remainder"].rect == (0, 0, 95, 79)

    def test_masks_cover_canvas(self):
        total = np.zeros((80, 96), dtype=int)
        for reg in self.regions.values():
            total += reg.mask.astype(int)
        assert np.all(total >= 1)


class TestCropStitch:
    def setup_method(self):
        self.lms = parse_landmarks(GOOD_TEXT, 96, 80)
        self.regions = build_regions(self.lms, 96, 80, pad=8)

    def test_crop_shape(self):
        reg = self.regions["mouth"]
        x0, y0, x1, y1 = reg.rect
        rng = np.random.default_rng(0)
        plane = rng.random((80, 96))
        piece = crop(plane, reg)
        assert piece.shape == (y1 - y0 + 1, x1 - x0 + 1)
        assert np.array_equal(piece, plane[y0 : y1 + 1, x0 : x1 + 1])

    def test_stitch_reconstructs_plane(self):
        # cropping every region and stitching back averages overlaps of
        # identical values; equal up to one rounding step per pixel
        rng = np.random.default_rng(1)
        plane = rng.random((80, 96))
        pieces = [(reg, crop(plane, reg)) for reg in self.regions.values()]
        out = stitch(pieces, 96, 80)
        assert np.max(np.abs(out - plane)) < 1e-15

    def test_stitch_averages_overlaps(self):
        lms = self.lms
        regions = build_regions(lms, 96, 80, pad=8)
        pieces = []
        for cat in CATEGORIES:
            reg = regions[cat]
            val = 1.0 if cat == "eyes" else 0.0
            pieces.append((reg, np.full(crop(np.zeros((80, 96)), reg).shape, val)))
        out = stitch(pieces, 96, 80)
        ex, ey = 20, 30  # inside eyes and remainder-free eye bbox only
        assert out[ey, ex] == 1.0

    def test_uncovered_pixels_raise(self):
        reg = self.regions["eyes"]
        with pytest.raises(CoverageError) as err:
            stitch([(reg, crop(np.zeros((80, 96)), reg))], 96, 80)
        assert "uncovered" in str(err.value)


class TestEdgeGeometry:
    def test_single_point_groups(self):
        # one landmark per group still produces non-empty rects
        lines = []
        for name in REQUIRED_LANDMARKS:
            lines.append(f"{name} 48 40")
        lms = parse_landmarks("\n".join(lines), 96, 80)
        regions = build_regions(lms, 96, 80, pad=4)
        for cat in COMPONENT_CATEGORIES:
            x0, y0, x1, y1 = regions[cat].rect
            assert x1 >= x0 and y1 >= y0

    def test_zero_pad(self):
        lms = parse_landmarks(GOOD_TEXT, 96, 80)
        regions = build_regions(lms, 96, 80, pad=0)
        x0, y0, x1, y1 = regions["eyes"].rect
        assert (x0, y0, x1, y1) == (20, 30, 74, 30)
