"""Exception hierarchy shared by every gridwarp module."""

from typing import Optional


class GridwarpError(Exception):
    """Base class for all gridwarp failures."""


class InvalidInputError(GridwarpError, ValueError):
    """An argument violates an operation's precondition."""


class OracleSizeError(InvalidInputError):
    """An exhaustive oracle was asked to enumerate a problem that is too large."""


class ConfigError(GridwarpError):
    """A configuration document failed to parse or validate."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class ExtractionError(GridwarpError):
    """The image pipeline could not recover a usable grid."""


class SceneInvalidError(GridwarpError):
    """A synthetic scene violates the forward model's assumptions."""


class GeometryError(GridwarpError):
    """Base class for degenerate geometric configurations."""


class DegenerateProjectionError(GeometryError):
    """The point lies on the camera's principal plane."""


class ParallelRayError(GeometryError):
    """The ray is parallel to the plane it should intersect."""


class BehindOriginError(GeometryError):
    """The intersection lies behind the ray origin."""


class IllConditionedError(GeometryError):
    """Two rays are too close to parallel for a unique closest point."""

    def __init__(self, angle: float):
        super().__init__(f"rays are nearly parallel (angle {angle:.3e} rad)")
        self.angle = angle
