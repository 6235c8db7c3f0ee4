"""Synthetic scene description: terrain, camera, noise, rendering and pipeline knobs."""

from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from gridwarp.models.geometry import DisplayGrid, HeightMap, Intrinsics, Pose, Vec3
from gridwarp.models.warp import CostKind, EndpointMode, RiverMethod


class Block(BaseModel):
    """Axis-aligned box standing on the ground."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    height: float = Field(ge=0)

    model_config = {"extra": "forbid", "frozen": True}

    @model_validator(mode="after")
    def _check_footprint(self) -> "Block":
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("block footprint must have positive extent")
        return self


class Bump(BaseModel):
    """Raised-cosine bump: ``amplitude * (1 + cos(pi r / radius)) / 2`` for ``r < radius``."""

    center: Tuple[float, float]
    radius: float = Field(gt=0)
    amplitude: float = Field(ge=0)

    model_config = {"extra": "forbid", "frozen": True}


class Terrain(BaseModel):
    """Ground relief over the square ``[-extent, extent]^2``; base height 0."""

    blocks: List[Block] = []
    bumps: List[Bump] = []
    extent: float = Field(default=0.05, gt=0)

    model_config = {"extra": "forbid", "frozen": True}

    @model_validator(mode="after")
    def _blocks_inside(self) -> "Terrain":
        e = self.extent
        for k, b in enumerate(self.blocks):
            if b.x_min < -e or b.x_max > e or b.y_min < -e or b.y_max > e:
                raise ValueError(f"blocks[{k}] footprint leaves the scene bounds +-{e}")
        return self

    @classmethod
    def flat(cls) -> "Terrain":
        return cls()

    def height_at(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Terrain height, vectorized over matching ``x``/``y`` arrays.

        Blocks combine by maximum, bumps add on top. Block footprints are
        half-open, ``[x_min, x_max) x [y_min, y_max)``.
        """
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        z = np.zeros(np.broadcast(x, y).shape)
        for b in self.blocks:
            inside = (x >= b.x_min) & (x < b.x_max) & (y >= b.y_min) & (y < b.y_max)
            z = np.where(inside, np.maximum(z, b.height), z)
        for bump in self.bumps:
            r = np.hypot(x - bump.center[0], y - bump.center[1])
            profile = 0.5 * (1.0 + np.cos(np.pi * np.minimum(r / bump.radius, 1.0)))
            z = z + bump.amplitude * profile
        return z

    def peak(self) -> float:
        """Upper bound on the terrain height."""
        tallest = max((b.height for b in self.blocks), default=0.0)
        return tallest + sum(bump.amplitude for bump in self.bumps)


class CameraConfig(BaseModel):
    """Camera placement by look-at; the default sits high above the grid, offset toward -y."""

    center: Vec3 = (0.0, -0.05, 0.5)
    target: Vec3 = (0.0, 0.0, 0.0)

    model_config = {"extra": "forbid", "frozen": True}

    def pose(self) -> Pose:
        return Pose.look_at(self.center, self.target)


class NoiseConfig(BaseModel):
    """Noise sources; all default to zero."""

    pixel_sigma: float = Field(default=0.0, ge=0)
    image_sigma: float = Field(default=0.0, ge=0)
    dropout: float = Field(default=0.0, ge=0, lt=1)
    texture_amplitude: float = Field(default=0.0, ge=0)
    texture_scale_px: float = Field(default=2.0, gt=0)

    model_config = {"extra": "forbid", "frozen": True}


class RenderConfig(BaseModel):
    """Raster settings for the camera image."""

    width: int = Field(default=320, ge=64)
    height: int = Field(default=320, ge=64)
    line_width_px: float = Field(default=3.0, gt=0)
    brightness: float = Field(default=1.0, gt=0, le=1)
    samples_per_cell: int = Field(default=8, ge=1)
    overhang: float = Field(default=0.5, ge=0)

    model_config = {"extra": "forbid", "frozen": True}


class PipelineConfig(BaseModel):
    """Extraction, matching and triangulation parameters."""

    blur_sigma: float = Field(default=1.5, gt=0)
    threshold: float = Field(default=0.45, gt=0, lt=1)
    merge_radius: float = Field(default=4.0, ge=1)
    min_branch_length: int = Field(default=3, ge=0)
    min_component_size: int = Field(default=30, ge=0)
    refine_window: float = Field(default=4.0, ge=0)
    min_contrast: float = Field(default=0.05, ge=0)
    cost: CostKind = CostKind.ABSOLUTE
    mode: EndpointMode = EndpointMode.FIXED
    method: RiverMethod = RiverMethod.DP
    max_residual: float = Field(default=2.0e-4, gt=0)
    nn_gate: float = Field(default=0.5, gt=0)
    height_tolerance: float = Field(default=1.0e-3, gt=0)

    model_config = {"extra": "forbid", "frozen": True}


class SceneConfig(BaseModel):
    """Complete description of a synthetic projector-camera scene."""

    grid: DisplayGrid
    intrinsics: Intrinsics
    camera: CameraConfig
    terrain: Terrain = Terrain()
    fov_limit_deg: float = Field(default=10.0, gt=0, lt=90)
    noise: NoiseConfig = NoiseConfig()
    render: RenderConfig = RenderConfig()
    pipeline: PipelineConfig = PipelineConfig()
    seed: int = Field(default=0, ge=0, lt=2**64)

    model_config = {"extra": "forbid", "frozen": True}

    @classmethod
    def default(cls, **overrides: object) -> "SceneConfig":
        """Desk-scale default: 7x7 grid, 4 mm pitch, display 3 cm above the floor."""
        values = {
            "grid": DisplayGrid.centered(7, 7, 0.004, 0.03),
            "intrinsics": Intrinsics(fx=4500.0, fy=4500.0, cx=159.5, cy=159.5),
            "camera": CameraConfig(),
        }
        values.update(overrides)
        return cls(**values)

    @property
    def pose(self) -> Pose:
        return self.camera.pose()


class GroundTruth(BaseModel):
    """Exact per-node ground points, their pixels and the true height map."""

    points: np.ndarray
    pixels: np.ndarray
    visible: np.ndarray
    heightmap: HeightMap

    model_config = {"arbitrary_types_allowed": True}

    @property
    def shape(self) -> Tuple[int, int]:
        return (int(self.points.shape[0]), int(self.points.shape[1]))


class ObservedPixels(BaseModel):
    """Per-node pixels as a detector would report them; ``present`` marks survivors."""

    pixels: np.ndarray
    present: np.ndarray

    model_config = {"arbitrary_types_allowed": True}
