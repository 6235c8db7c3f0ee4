"""Data models for gridwarp."""

from .geometry import DisplayGrid, HeightMap, Intrinsics, Plane, Pose, Ray
from .lattice import Lattice
from .report import BenchRow, Correspondence, Reconstruction, RunReport
from .scene import (
    Block,
    Bump,
    CameraConfig,
    GroundTruth,
    NoiseConfig,
    ObservedPixels,
    PipelineConfig,
    RenderConfig,
    SceneConfig,
    Terrain,
)
from .warp import (
    ColumnGrid,
    ColumnMapping,
    CostKind,
    DistanceLandscape,
    EndpointMode,
    GridMatchResult,
    RiverMethod,
    RiverPath,
    WarpPath,
)

__all__ = [
    "BenchRow",
    "Block",
    "Bump",
    "CameraConfig",
    "ColumnGrid",
    "ColumnMapping",
    "Correspondence",
    "CostKind",
    "DisplayGrid",
    "DistanceLandscape",
    "EndpointMode",
    "GridMatchResult",
    "GroundTruth",
    "HeightMap",
    "Intrinsics",
    "Lattice",
    "NoiseConfig",
    "ObservedPixels",
    "PipelineConfig",
    "Plane",
    "Pose",
    "Ray",
    "Reconstruction",
    "RenderConfig",
    "RiverMethod",
    "RiverPath",
    "RunReport",
    "SceneConfig",
    "Terrain",
    "WarpPath",
]
