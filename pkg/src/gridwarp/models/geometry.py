"""Camera, ray, plane and display-grid models.

World frame: z up, nominal ground plane z = 0, display plane z = h.
"""

from typing import Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

Vec3 = Tuple[float, float, float]


def _unit(value: object, what: str) -> np.ndarray:
    vec = np.array(value, dtype=np.float64).reshape(-1)
    if vec.shape != (3,) or not np.all(np.isfinite(vec)):
        raise ValueError(f"{what} must be a finite 3-vector")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValueError(f"{what} must be nonzero")
    return vec / norm


class Intrinsics(BaseModel):
    """Pinhole intrinsics in pixels."""

    fx: float = Field(gt=0)
    fy: float = Field(gt=0)
    cx: float
    cy: float
    skew: float = 0.0

    model_config = {"extra": "forbid", "frozen": True}

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, self.skew, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


class Pose(BaseModel):
    """World-to-camera rigid transform ``X_cam = R X + t``."""

    R: np.ndarray
    t: np.ndarray

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("R", mode="before")
    @classmethod
    def _check_rotation(cls, value: object) -> np.ndarray:
        R = np.array(value, dtype=np.float64)
        if R.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if not np.allclose(R.T @ R, np.eye(3), rtol=0.0, atol=1e-9):
            raise ValueError("rotation must be orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation must have determinant +1")
        return R

    @field_validator("t", mode="before")
    @classmethod
    def _check_translation(cls, value: object) -> np.ndarray:
        t = np.array(value, dtype=np.float64).reshape(-1)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise ValueError("translation must be a finite 3-vector")
        return t

    @classmethod
    def identity(cls) -> "Pose":
        return cls(R=np.eye(3), t=np.zeros(3))

    @classmethod
    def look_at(cls, center: Vec3, target: Vec3) -> "Pose":
        """Camera at ``center`` with its optical axis through ``target``.

        The image x axis is kept in the vertical plane containing world +x,
        so a camera looking straight down sees +x to the right.
        """
        c = np.asarray(center, dtype=np.float64)
        z_cam = _unit(np.asarray(target, dtype=np.float64) - c, "viewing direction")
        x_cam = np.cross(z_cam, [0.0, 1.0, 0.0])
        if np.linalg.norm(x_cam) < 1e-9:
            raise ValueError("viewing direction must not be parallel to world y")
        x_cam /= np.linalg.norm(x_cam)
        y_cam = np.cross(z_cam, x_cam)
        R = np.vstack([x_cam, y_cam, z_cam])
        return cls(R=R, t=-R @ c)

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates, ``-R^T t``."""
        return -self.R.T @ self.t

    @property
    def optical_axis(self) -> np.ndarray:
        return self.R[2].copy()


class Ray(BaseModel):
    """Half-line ``origin + s * direction`` with a unit direction."""

    origin: np.ndarray
    direction: np.ndarray

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("origin", mode="before")
    @classmethod
    def _check_origin(cls, value: object) -> np.ndarray:
        origin = np.array(value, dtype=np.float64).reshape(-1)
        if origin.shape != (3,) or not np.all(np.isfinite(origin)):
            raise ValueError("ray origin must be a finite 3-vector")
        return origin

    @field_validator("direction", mode="before")
    @classmethod
    def _normalize_direction(cls, value: object) -> np.ndarray:
        return _unit(value, "ray direction")

    def at(self, s: float) -> np.ndarray:
        return self.origin + s * self.direction


class Plane(BaseModel):
    """The set ``{X : normal . X = offset}``."""

    normal: np.ndarray
    offset: float

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("normal", mode="before")
    @classmethod
    def _normalize_normal(cls, value: object) -> np.ndarray:
        return _unit(value, "plane normal")

    @classmethod
    def horizontal(cls, z: float) -> "Plane":
        return cls(normal=np.array([0.0, 0.0, 1.0]), offset=z)


class DisplayGrid(BaseModel):
    """Regular grid of virtual light sources on the display plane ``z = h``.

    Node ``(row, col)`` (1-based) sits at
    ``origin + ((col - 1) * spacing, (row - 1) * spacing, 0)``.
    """

    n_rows: int = Field(ge=1)
    n_cols: int = Field(ge=1)
    spacing: float = Field(gt=0)
    origin: Vec3
    h: float = Field(gt=0)

    model_config = {"extra": "forbid", "frozen": True}

    @model_validator(mode="after")
    def _origin_on_display(self) -> "DisplayGrid":
        if abs(self.origin[2] - self.h) > 1e-12:
            raise ValueError("grid origin must lie on the display plane (origin z == h)")
        return self

    @classmethod
    def centered(cls, n_rows: int, n_cols: int, spacing: float, h: float) -> "DisplayGrid":
        """Grid centered on the z axis."""
        x0 = -0.5 * (n_cols - 1) * spacing
        y0 = -0.5 * (n_rows - 1) * spacing
        return cls(n_rows=n_rows, n_cols=n_cols, spacing=spacing, origin=(x0, y0, h), h=h)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def plane(self) -> Plane:
        return Plane.horizontal(self.h)

    def contains(self, row: int, col: int) -> bool:
        return 1 <= row <= self.n_rows and 1 <= col <= self.n_cols

    def node_position(self, row: int, col: int) -> np.ndarray:
        ox, oy, oz = self.origin
        return np.array([ox + (col - 1) * self.spacing, oy + (row - 1) * self.spacing, oz])

    def node_positions(self) -> np.ndarray:
        """All node positions, shape ``(n_rows, n_cols, 3)``."""
        ox, oy, oz = self.origin
        xs = ox + self.spacing * np.arange(self.n_cols)
        ys = oy + self.spacing * np.arange(self.n_rows)
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy, np.full_like(gx, oz)], axis=-1)


class HeightMap(BaseModel):
    """Grid-indexed reconstructed 3D node positions with a validity mask."""

    points: np.ndarray
    valid: np.ndarray
    residual: np.ndarray

    model_config = {"arbitrary_types_allowed": True}

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, data: object) -> object:
        if not isinstance(data, dict):
            return data
        points = np.array(data["points"], dtype=np.float64)
        if points.ndim != 3 or points.shape[2] != 3:
            raise ValueError("height map points must have shape (rows, cols, 3)")
        valid = np.array(data.get("valid", np.ones(points.shape[:2])), dtype=bool)
        residual = np.array(data.get("residual", np.zeros(points.shape[:2])), dtype=np.float64)
        if valid.shape != points.shape[:2] or residual.shape != points.shape[:2]:
            raise ValueError("mask and residual must match the node grid")
        if not np.all(np.isfinite(points[valid])):
            raise ValueError("valid nodes must carry finite coordinates")
        return {"points": points, "valid": valid, "residual": residual}

    @classmethod
    def empty(cls, n_rows: int, n_cols: int) -> "HeightMap":
        return cls(
            points=np.full((n_rows, n_cols, 3), np.nan),
            valid=np.zeros((n_rows, n_cols), dtype=bool),
            residual=np.full((n_rows, n_cols), np.nan),
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return (int(self.points.shape[0]), int(self.points.shape[1]))

    @property
    def heights(self) -> np.ndarray:
        """Z per node, NaN where invalid."""
        z = self.points[..., 2].copy()
        z[~self.valid] = np.nan
        return z

    @property
    def success_rate(self) -> float:
        return float(self.valid.mean()) if self.valid.size else 0.0
