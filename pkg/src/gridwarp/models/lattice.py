"""Detected intersections arranged on the grid's rank lattice."""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, model_validator

from gridwarp.models.warp import ColumnGrid


class Lattice(BaseModel):
    """Intersections assigned to (row rank, column) cells.

    ``profiles`` holds the normalized y-coordinate per cell and is what the
    matcher sees. ``pixels`` keeps the source position (interpolated for
    padded cells), ``detected`` marks cells backed by a real detection,
    ``source`` is the index of that detection (-1 when padded) and
    ``labels`` optionally carries the display node ``(row, col)`` per cell,
    ``(-1, -1)`` when unknown.
    """

    profiles: ColumnGrid
    pixels: np.ndarray
    detected: np.ndarray
    source: np.ndarray
    labels: Optional[np.ndarray] = None

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @model_validator(mode="after")
    def _check_shapes(self) -> "Lattice":
        shape = self.profiles.data.shape
        if self.pixels.shape != shape + (2,):
            raise ValueError(f"pixels must have shape {shape + (2,)}, got {self.pixels.shape}")
        if self.detected.shape != shape or self.source.shape != shape:
            raise ValueError("detected and source masks must match the profile grid")
        if self.labels is not None and self.labels.shape != shape + (2,):
            raise ValueError("labels must carry one (row, col) pair per cell")
        return self

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.profiles.n_rows, self.profiles.n_cols)

    @property
    def n_detected(self) -> int:
        return int(self.detected.sum())
