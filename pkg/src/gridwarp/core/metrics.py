"""Height-map accuracy against ground truth."""

import hashlib
import json
import logging
from typing import Dict, Optional

import numpy as np

from gridwarp.errors import InvalidInputError
from gridwarp.models.geometry import HeightMap
from gridwarp.models.report import RunReport
from gridwarp.models.scene import SceneConfig

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1.0e-3


def config_digest(cfg: SceneConfig) -> str:
    """SHA-256 of the canonical JSON form of a scene config."""
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def evaluate(
    heightmap: HeightMap,
    truth: HeightMap,
    tolerance: float = DEFAULT_TOLERANCE,
    timings: Optional[Dict[str, float]] = None,
    digest: Optional[str] = None,
) -> RunReport:
    """RMSE and median absolute height error over valid nodes, plus success and inlier rates.

    ``success_rate`` is valid nodes over all nodes. ``inlier_rate`` counts
    only valid nodes whose height is within ``tolerance`` of the truth.
    """
    if heightmap.shape != truth.shape:
        raise InvalidInputError(
            f"height map is {heightmap.shape[0]}x{heightmap.shape[1]}, "
            f"ground truth is {truth.shape[0]}x{truth.shape[1]}"
        )
    if not tolerance > 0:
        raise InvalidInputError(f"tolerance must be positive, got {tolerance}")
    n_nodes = int(heightmap.valid.size)
    scored = heightmap.valid & truth.valid
    errors = heightmap.points[..., 2][scored] - truth.points[..., 2][scored]
    n_valid = int(heightmap.valid.sum())
    rmse = float(np.sqrt(np.mean(errors * errors))) if errors.size else None
    median = float(np.median(np.abs(errors))) if errors.size else None
    inliers = int(np.count_nonzero(np.abs(errors) <= tolerance))

    total_time = sum(timings.values()) if timings else None
    report = RunReport(
        rmse=rmse,
        median_abs_error=median,
        success_rate=n_valid / n_nodes if n_nodes else 0.0,
        inlier_rate=inliers / n_nodes if n_nodes else 0.0,
        height_tolerance=tolerance,
        n_nodes=n_nodes,
        n_valid=n_valid,
        timings=dict(timings or {}),
        seconds_per_frame=total_time,
        config_digest=digest,
    )
    logger.info(
        "evaluated %d nodes: success %.3f, inliers %.3f", n_nodes, report.success_rate, report.inlier_rate
    )
    return report
