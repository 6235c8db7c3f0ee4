"""Tests for height-map evaluation."""

import numpy as np
import pytest

from gridwarp.core.metrics import config_digest, evaluate
from gridwarp.errors import InvalidInputError
from gridwarp.models.geometry import HeightMap
from gridwarp.models.scene import SceneConfig


def flat_map(n_rows, n_cols, z=0.0):
    points = np.zeros((n_rows, n_cols, 3))
    points[..., 2] = z
    return HeightMap(points=points)


def test_identical_maps():
    truth = flat_map(7, 7, 0.002)
    report = evaluate(flat_map(7, 7, 0.002), truth)
    assert report.rmse == 0.0
    assert report.median_abs_error == 0.0
    assert report.success_rate == 1.0
    assert report.inlier_rate == 1.0
    assert report.n_nodes == report.n_valid == 49


def test_single_outlier():
    """One node off by 10 mm among 100 gives RMSE 1 mm and a zero median."""
    truth = flat_map(10, 10)
    result = flat_map(10, 10)
    result.points[4, 4, 2] = 0.010
    report = evaluate(result, truth)
    assert report.rmse == pytest.approx(1e-3)
    assert report.median_abs_error == 0.0
    assert report.inlier_rate == pytest.approx(0.99)
    assert report.success_rate == 1.0


def test_half_invalid():
    truth = flat_map(4, 4)
    result = flat_map(4, 4)
    result.valid[:2] = False
    report = evaluate(result, truth)
    assert report.success_rate == 0.5
    assert report.inlier_rate == 0.5
    assert report.n_valid == 8
    assert report.rmse == 0.0


def test_nothing_valid():
    result = HeightMap.empty(3, 3)
    report = evaluate(result, flat_map(3, 3))
    assert report.rmse is None
    assert report.median_abs_error is None
    assert report.success_rate == 0.0


def test_tolerance_is_inclusive():
    result = flat_map(1, 2)
    result.points[0, 0, 2] = 0.0005
    result.points[0, 1, 2] = 0.002
    report = evaluate(result, flat_map(1, 2), tolerance=0.0005)
    assert report.inlier_rate == 0.5


def test_shape_mismatch():
    with pytest.raises(InvalidInputError):
        evaluate(flat_map(3, 3), flat_map(3, 4))


def test_non_positive_tolerance():
    with pytest.raises(InvalidInputError):
        evaluate(flat_map(2, 2), flat_map(2, 2), tolerance=0.0)


def test_timings_and_digest_are_recorded():
    digest = config_digest(SceneConfig.default())
    report = evaluate(flat_map(2, 2), flat_map(2, 2), timings={"extract": 0.25, "match": 0.5}, digest=digest)
    assert report.seconds_per_frame == pytest.approx(0.75)
    assert report.timings == {"extract": 0.25, "match": 0.5}
    assert report.config_digest == digest
    assert report.schema_version == 1


def test_config_digest_is_stable():
    a = config_digest(SceneConfig.default())
    assert a == config_digest(SceneConfig.default())
    assert len(a) == 64
    assert a != config_digest(SceneConfig.default(seed=1))
