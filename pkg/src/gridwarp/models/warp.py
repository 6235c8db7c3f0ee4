"""Warping paths, column grids and the distance landscape."""

from enum import Enum
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, field_validator, model_validator

Step = Tuple[int, int]


class CostKind(str, Enum):
    """Local cost between two samples."""

    ABSOLUTE = "absolute"
    SQUARED = "squared"


class EndpointMode(str, Enum):
    """Boundary handling for river paths."""

    FIXED = "fixed"
    FREE_J = "free_j"


class RiverMethod(str, Enum):
    """How a river path is traced through the distance landscape."""

    DP = "dp"
    GREEDY = "greedy"


class WarpPath(BaseModel):
    """An index-pair sequence over an ``m x n`` lattice, 1-based.

    Construction does not enforce admissibility; use
    ``gridwarp.core.dtw.validate_path`` for that.
    """

    steps: List[Step]
    dims: Tuple[int, int]

    model_config = {"frozen": True}

    def __len__(self) -> int:
        return len(self.steps)


class ColumnGrid(BaseModel):
    """A ``p x q`` matrix whose columns are vertical profiles."""

    data: np.ndarray

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("data", mode="before")
    @classmethod
    def _as_matrix(cls, value: object) -> np.ndarray:
        data = np.array(value, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"column grid must be a non-empty matrix, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("column grid entries must be finite")
        data.setflags(write=False)
        return data

    @property
    def n_rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.data.shape[1])

    def column(self, i: int) -> np.ndarray:
        """Profile of column ``i`` (1-based)."""
        return self.data[:, i - 1]

    def transposed(self) -> "ColumnGrid":
        """Grid whose columns are this grid's rows."""
        return ColumnGrid(data=self.data.T)


class DistanceLandscape(BaseModel):
    """Pairwise column distances ``D`` of shape ``q x s``."""

    values: np.ndarray

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("values", mode="before")
    @classmethod
    def _as_landscape(cls, value: object) -> np.ndarray:
        values = np.array(value, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"distance landscape must be a non-empty matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("distance landscape must be finite")
        if np.any(values < 0):
            raise ValueError("distance landscape must be nonnegative")
        values.setflags(write=False)
        return values

    @property
    def shape(self) -> Tuple[int, int]:
        return (int(self.values.shape[0]), int(self.values.shape[1]))

    def at(self, i: int, j: int) -> float:
        """``D[i, j]`` with 1-based indices."""
        return float(self.values[i - 1, j - 1])


class RiverPath(BaseModel):
    """Minimum-cost monotone path through a distance landscape."""

    path: WarpPath
    mode: EndpointMode
    cost: float

    model_config = {"frozen": True}

    @property
    def steps(self) -> List[Step]:
        return self.path.steps


class ColumnMapping(BaseModel):
    """Real-valued correspondence ``a(i)`` from columns of A into ``[1, s]``."""

    values: List[float]
    s: int

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check_monotone(self) -> "ColumnMapping":
        if self.s < 1:
            raise ValueError("target column count must be positive")
        for a in self.values:
            if not 1.0 <= a <= self.s:
                raise ValueError(f"mapping value {a} outside [1, {self.s}]")
        for prev, cur in zip(self.values, self.values[1:]):
            if cur < prev:
                raise ValueError("column mapping must be non-decreasing")
        return self

    def __len__(self) -> int:
        return len(self.values)


class GridMatchResult(BaseModel):
    """Column and row correspondences between two grids."""

    column_mapping: ColumnMapping
    row_mapping: ColumnMapping
    d_cols: DistanceLandscape
    d_rows: DistanceLandscape
    column_path: RiverPath
    row_path: RiverPath

    model_config = {"frozen": True}
