"""Reconstruction results, evaluation reports and benchmark rows."""

from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from gridwarp.models.geometry import HeightMap
from gridwarp.models.lattice import Lattice
from gridwarp.models.warp import GridMatchResult

REPORT_SCHEMA_VERSION = 1

Match = Tuple[Tuple[int, int], Tuple[float, float]]


class Correspondence(str, Enum):
    """How detected intersections are assigned to display nodes."""

    GRID = "grid"
    NEAREST = "nearest"
    LOCAL_MIN = "local_min"
    EXACT = "exact"


class Reconstruction(BaseModel):
    """Height map plus everything needed to trace how it was obtained."""

    heightmap: HeightMap
    matches: List[Match]
    points: np.ndarray
    correspondence: Correspondence
    reference: Optional[Lattice] = None
    observed: Optional[Lattice] = None
    match: Optional[GridMatchResult] = None
    timings: Dict[str, float] = {}

    model_config = {"arbitrary_types_allowed": True}


class RunReport(BaseModel):
    """Accuracy of a reconstructed height map against ground truth.

    Errors are taken over nodes the reconstruction marks valid; they are
    ``None`` when no node is valid.
    """

    schema_version: int = REPORT_SCHEMA_VERSION
    rmse: Optional[float] = Field(default=None, ge=0)
    median_abs_error: Optional[float] = Field(default=None, ge=0)
    success_rate: float = Field(ge=0, le=1)
    inlier_rate: float = Field(ge=0, le=1)
    height_tolerance: float = Field(gt=0)
    n_nodes: int = Field(ge=0)
    n_valid: int = Field(ge=0)
    timings: Dict[str, float] = {}
    seconds_per_frame: Optional[float] = None
    config_digest: Optional[str] = None


class BenchRow(BaseModel):
    """Mean wall time of one matching run on ``n x n`` grids."""

    n: int = Field(ge=1)
    trials: int = Field(ge=1)
    mean_seconds: float = Field(ge=0)
