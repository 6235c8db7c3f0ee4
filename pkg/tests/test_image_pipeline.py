"""Tests for blur, enhancement, thinning, junction detection and the rank lattice."""

import numpy as np
import pytest

from gridwarp.core.image_pipeline import (
    ARM_CLEARANCE,
    binarize,
    build_lattice,
    count_arms,
    detect_intersections,
    drop_small_components,
    extract_intersections,
    gaussian_blur,
    image_contrast,
    intersections_to_column_profiles,
    junction_candidates,
    log_enhance,
    refine_intersections,
    ridge_response,
    skeletonize,
)
from gridwarp.core.synth_scene import render_scene
from gridwarp.errors import ExtractionError, InvalidInputError
from gridwarp.models.scene import NoiseConfig, SceneConfig


def plus_sign(size=31, arm=10):
    img = np.zeros((size, size), dtype=bool)
    mid = size // 2
    img[mid, mid - arm : mid + arm + 1] = True
    img[mid - arm : mid + arm + 1, mid] = True
    return img


def regular_points(n_cols, n_rows, x0=20.0, dx=30.0, y0=10.0, dy=15.0):
    return np.array([(x0 + dx * c, y0 + dy * r) for r in range(n_rows) for c in range(n_cols)])


def thick_cross(size=41, width=3, margin=5):
    img = np.zeros((size, size), dtype=bool)
    lo = size // 2 - width // 2
    img[lo : lo + width, margin : size - margin] = True
    img[margin : size - margin, lo : lo + width] = True
    return img


def crossing(shape=(64, 64), at=(31.3, 32.6), angles=(20.0, 110.0), width=3.0):
    """Anti-aliased lines through ``at`` = (x, y) at the given angles in degrees."""
    rows, cols = np.mgrid[: shape[0], : shape[1]]
    img = np.zeros(shape)
    for a in np.radians(angles):
        dist = np.abs((cols - at[0]) * np.sin(a) - (rows - at[1]) * np.cos(a))
        img = np.maximum(img, np.clip(0.5 * width + 0.5 - dist, 0.0, 1.0))
    return img


class TestBlur:
    def test_constant_image_unchanged(self):
        img = np.full((12, 9), 0.3)
        assert np.allclose(gaussian_blur(img, 1.5), 0.3, atol=1e-12)

    def test_impulse_center_weight(self):
        img = np.zeros((15, 15))
        img[7, 7] = 1.0
        out = gaussian_blur(img, 1.0)
        k = np.arange(-3, 4)
        w = np.exp(-0.5 * k * k)
        w0 = 1.0 / w.sum()
        assert out[7, 7] == pytest.approx(w0 * w0, abs=1e-12)
        assert out[7, 7] == pytest.approx(0.159241, abs=1e-6)

    def test_impulse_response_is_symmetric(self):
        img = np.zeros((15, 15))
        img[7, 7] = 1.0
        out = gaussian_blur(img, 2.0)
        assert np.allclose(out, out.T)
        assert np.allclose(out, out[::-1, ::-1])

    def test_invalid_sigma(self):
        with pytest.raises(InvalidInputError):
            gaussian_blur(np.zeros((4, 4)), 0.0)


class TestEnhanceAndBinarize:
    def test_flat_response_is_half(self):
        assert np.all(log_enhance(np.full((10, 10), 0.7), 1.5) == 0.5)

    def test_bright_line_comes_out_high(self):
        img = np.zeros((21, 21))
        img[10, :] = 1.0
        out = log_enhance(img, 1.0)
        assert out.min() == 0.0 and out.max() == 1.0
        assert np.all(out[10] > out[3])

    def test_step_edge_gives_straddling_extrema(self):
        img = np.zeros((16, 40))
        img[:, 20:] = 1.0
        profile = log_enhance(img, 2.0)[8]
        low, high = int(np.argmin(profile)), int(np.argmax(profile))
        # dark side dips, bright side peaks, both within three sigma of the edge at 19.5
        assert low < 19.5 < high
        assert 19.5 - low <= 6.0 and high - 19.5 <= 6.0

    def test_ridge_response_of_blurred_image(self, rng):
        img = rng.random((30, 30))
        assert np.array_equal(ridge_response(gaussian_blur(img, 1.5)), log_enhance(img, 1.5))

    def test_binarize(self):
        out = binarize(np.array([[0.2, 0.5], [0.45, 0.9]]), 0.45)
        assert out.tolist() == [[False, True], [True, True]]

    @pytest.mark.parametrize("threshold", [0.0, 1.0, -0.1])
    def test_threshold_must_be_inside_unit_interval(self, threshold):
        with pytest.raises(InvalidInputError):
            binarize(np.zeros((3, 3)), threshold)

    def test_non_finite_image_rejected(self):
        with pytest.raises(InvalidInputError):
            binarize(np.array([[0.1, np.nan]]), 0.5)


class TestSkeletonize:
    def test_thin_line_unchanged(self):
        img = np.zeros((20, 20), dtype=bool)
        img[10, 3:17] = True
        assert np.array_equal(skeletonize(img), img)

    def test_bar_thins_to_one_row(self):
        img = np.zeros((21, 31), dtype=bool)
        img[8:13, 3:28] = True
        skel = skeletonize(img)
        assert np.all(skel[:, 8:23].sum(axis=0) == 1)
        assert not skel[:8].any() and not skel[13:].any()

    def test_empty_image(self):
        img = np.zeros((5, 5), dtype=bool)
        assert not skeletonize(img).any()

    def test_thick_cross_keeps_one_four_way_junction(self):
        img = thick_cross()
        skel = skeletonize(img)
        assert not (skel & ~img).any()
        points = detect_intersections(skel, 4.0, min_branch_length=3)
        assert points.shape == (1, 2)
        assert np.hypot(*(points[0] - (20.0, 20.0))) <= 1.5
        assert count_arms(skel, (points[0][1], points[0][0]), 5) == 4

    def test_idempotent(self, rng):
        for _ in range(100):
            img = rng.random((20, 20)) < 0.5
            once = skeletonize(img)
            assert np.array_equal(skeletonize(once), once)


class TestIntersections:
    def test_straight_line_has_no_junctions(self):
        img = np.zeros((20, 20), dtype=bool)
        img[10, 2:18] = True
        assert not junction_candidates(img).any()
        assert detect_intersections(img, 4.0).shape == (0, 2)

    def test_plus_sign(self):
        points = detect_intersections(plus_sign(), 4.0, min_branch_length=3)
        assert points.shape == (1, 2)
        assert np.hypot(*(points[0] - (15.0, 15.0))) <= 1.0

    def test_plus_sign_has_four_arms(self):
        assert count_arms(plus_sign(), (15.0, 15.0), 3) == 4

    def test_split_junction_counts_once(self):
        # two three-way junctions two pixels apart, as thinning leaves at a crossing
        img = np.zeros((31, 31), dtype=bool)
        img[15, 2:29] = True
        img[2:16, 14] = True
        img[15:29, 16] = True
        points = detect_intersections(img, 4.0, min_branch_length=3)
        assert points.shape == (1, 2)
        assert np.hypot(*(points[0] - (15.0, 15.0))) <= 1.0

    def test_arms_are_counted_past_the_clearance(self):
        img = plus_sign()
        assert count_arms(img, (15.0, 15.0), 3, core=ARM_CLEARANCE + 2.0) == 4
        # arms end ten pixels out
        assert count_arms(img, (15.0, 15.0), 3, core=8.0) == 0

    def test_short_spur_is_filtered(self):
        img = np.zeros((31, 31), dtype=bool)
        img[15, 2:29] = True
        img[14, 15] = True
        assert len(detect_intersections(img, 4.0)) == 1
        assert len(detect_intersections(img, 4.0, min_branch_length=3)) == 0

    def test_nearby_candidates_merge(self):
        img = plus_sign()
        img[:, 17] = False
        img[5:26, 17] = True
        points = detect_intersections(img, 4.0)
        assert len(points) == 1
        assert 15.0 <= points[0][0] <= 17.0

    def test_points_sorted_by_y_then_x(self):
        img = np.zeros((41, 41), dtype=bool)
        for r in (10, 30):
            img[r, 2:39] = True
        for c in (10, 30):
            img[2:39, c] = True
        points = detect_intersections(img, 4.0)
        assert points.tolist() == [[10.0, 10.0], [30.0, 10.0], [10.0, 30.0], [30.0, 30.0]]

    def test_merge_radius_below_one_rejected(self):
        with pytest.raises(InvalidInputError):
            detect_intersections(plus_sign(), 0.5)

    def test_contrast(self):
        img = np.zeros((10, 10))
        img[:5] = 1.0
        assert image_contrast(img) == pytest.approx(1.0)
        assert image_contrast(np.full((10, 10), 0.4)) == 0.0

    def test_blank_frame_raises(self):
        with pytest.raises(ExtractionError):
            extract_intersections(np.zeros((64, 64)))

    def test_drawn_grid_is_detected(self):
        img = np.zeros((80, 80))
        for k in (20, 40, 60):
            img[k - 1 : k + 2, 10:71] = 1.0
            img[10:71, k - 1 : k + 2] = 1.0
        points = extract_intersections(img)
        assert len(points) == 9
        expected = np.array([(x, y) for y in (20, 40, 60) for x in (20, 40, 60)], dtype=float)
        assert np.abs(points - expected).max() <= 1.5

    def test_tilted_crossing_is_located_to_subpixel(self):
        points = extract_intersections(crossing())
        assert points.shape == (1, 2)
        assert np.hypot(*(points[0] - (31.3, 32.6))) <= 0.5

    def test_same_image_same_points(self):
        cfg = SceneConfig.default(noise=NoiseConfig(image_sigma=0.03), seed=3)
        img = render_scene(cfg)
        assert np.array_equal(extract_intersections(img, cfg.pipeline), extract_intersections(img, cfg.pipeline))

    @pytest.mark.slow
    def test_quarter_turn_moves_points_with_the_image(self, flat_cfg):
        img = render_scene(flat_cfg)
        width = img.shape[1]
        points = extract_intersections(img, flat_cfg.pipeline)
        turned = extract_intersections(np.rot90(img), flat_cfg.pipeline)
        assert len(points) == len(turned) == 49
        # np.rot90 sends (x, y) to (y, width - 1 - x)
        moved = np.stack([points[:, 1], width - 1 - points[:, 0]], axis=1)
        gaps = np.hypot(*(moved[:, None, :] - turned[None, :, :]).transpose(2, 0, 1)).min(axis=1)
        assert gaps.max() <= 0.25


class TestComponents:
    def test_specks_are_dropped(self):
        img = np.zeros((20, 40), dtype=bool)
        img[10, 2:38] = True
        img[2:4, 2:4] = True
        out = drop_small_components(img, 30)
        assert out[10].sum() == 36
        assert not out[:5].any()

    def test_diagonal_pixels_are_one_component(self):
        img = np.eye(12, dtype=bool)
        assert drop_small_components(img, 12).sum() == 12

    def test_zero_size_keeps_everything(self):
        img = np.zeros((5, 5), dtype=bool)
        img[1, 1] = True
        assert np.array_equal(drop_small_components(img, 0), img)


class TestRefinement:
    def test_offset_start_settles_on_the_crossing(self):
        blurred = gaussian_blur(crossing(), 1.5)
        refined = refine_intersections(blurred, np.array([[32.8, 31.6]]), 4.0)
        assert np.hypot(*(refined[0] - (31.3, 32.6))) <= 0.1

    def test_blank_background_leaves_point_in_place(self):
        blurred = gaussian_blur(crossing(shape=(120, 120)), 1.5)
        refined = refine_intersections(blurred, np.array([[100.0, 20.0]]), 4.0)
        assert refined.tolist() == [[100.0, 20.0]]

    def test_window_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            refine_intersections(np.zeros((8, 8)), np.zeros((1, 2)), 0.0)


class TestLattice:
    def test_regular_grid(self):
        lattice = build_lattice(regular_points(5, 6), 5, 6, 100.0)
        assert lattice.shape == (6, 5)
        assert lattice.detected.all()
        assert np.allclose(lattice.profiles.data[:, 0], (10.0 + 15.0 * np.arange(6)) / 100.0)
        assert sorted(lattice.source.ravel().tolist()) == list(range(30))

    def test_shifted_column(self):
        points = regular_points(5, 6)
        points[points[:, 0] == 80.0, 1] += 7.0
        profiles = intersections_to_column_profiles(points, 5, 6, 100.0)
        assert np.allclose(profiles.data[:, 2] - profiles.data[:, 1], 0.07)

    def test_missing_interior_point_is_interpolated(self):
        points = regular_points(5, 6)
        missing = (points[:, 0] == 50.0) & (points[:, 1] == 55.0)
        lattice = build_lattice(points[~missing], 5, 6, 100.0)
        assert not lattice.detected[3, 1]
        assert lattice.n_detected == 29
        assert lattice.source[3, 1] == -1
        assert np.hypot(*(lattice.pixels[3, 1] - (50.0, 55.0))) <= 1.0

    def test_missing_last_point_is_extrapolated(self):
        points = regular_points(5, 6)
        missing = (points[:, 0] == 110.0) & (points[:, 1] == 85.0)
        lattice = build_lattice(points[~missing], 5, 6, 100.0)
        assert lattice.pixels[5, 3, 1] == pytest.approx(85.0)

    def test_extra_point_is_dropped(self):
        points = np.vstack([regular_points(5, 6), [[50.0, 56.0]]])
        lattice = build_lattice(points, 5, 6, 100.0)
        assert lattice.n_detected == 30
        assert 30 not in lattice.source

    def test_labels_follow_points(self):
        points = regular_points(3, 4)
        labels = np.array([(r + 1, c + 1) for r in range(4) for c in range(3)])
        order = np.random.default_rng(5).permutation(len(points))
        lattice = build_lattice(points[order], 3, 4, 100.0, labels=labels[order])
        assert lattice.labels[2, 1].tolist() == [3, 2]

    def test_too_few_points(self):
        with pytest.raises(ExtractionError):
            build_lattice(regular_points(2, 1), 3, 3, 100.0)
