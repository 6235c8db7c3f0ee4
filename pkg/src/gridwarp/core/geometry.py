"""Pinhole projection, ray construction and triangulation."""

import logging
import math
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from gridwarp.errors import (
    BehindOriginError,
    DegenerateProjectionError,
    GeometryError,
    IllConditionedError,
    InvalidInputError,
    ParallelRayError,
)
from gridwarp.models.geometry import DisplayGrid, HeightMap, Intrinsics, Plane, Pose, Ray

logger = logging.getLogger(__name__)

PROJECTION_EPS = 1e-12
PARALLEL_EPS = 1e-12
MIN_RAY_ANGLE = 1e-6

DOWN = np.array([0.0, 0.0, -1.0])

Node = Tuple[int, int]
Match = Tuple[Node, Tuple[float, float]]


def project(intrinsics: Intrinsics, pose: Pose, X: Sequence[float]) -> Tuple[float, float]:
    """Pixel of world point ``X``: ``lambda (u, v, 1) = K [R | t] (X, 1)``."""
    uvw = intrinsics.matrix @ (pose.R @ np.asarray(X, dtype=np.float64) + pose.t)
    lam = uvw[2]
    if abs(lam) < PROJECTION_EPS:
        raise DegenerateProjectionError(f"point {tuple(X)} lies on the principal plane")
    return float(uvw[0] / lam), float(uvw[1] / lam)


def project_many(intrinsics: Intrinsics, pose: Pose, X: np.ndarray) -> np.ndarray:
    """Vectorized ``project`` over the last axis; degenerate points become NaN."""
    pts = np.asarray(X, dtype=np.float64)
    cam = pts @ pose.R.T + pose.t
    uvw = cam @ intrinsics.matrix.T
    lam = uvw[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        uv = uvw[..., :2] / lam[..., None]
    uv[np.abs(lam) < PROJECTION_EPS] = np.nan
    return uv


def back_project(intrinsics: Intrinsics, pose: Pose, pixel: Sequence[float]) -> Ray:
    """Viewing ray from the camera center through ``pixel``."""
    u, v = pixel
    direction = pose.R.T @ (intrinsics.inverse @ np.array([u, v, 1.0]))
    return Ray(origin=pose.center, direction=direction)


def display_ray(grid: DisplayGrid, node: Node) -> Ray:
    """Ray leaving display node ``(row, col)`` along the display normal, toward the ground."""
    row, col = node
    if not grid.contains(row, col):
        raise InvalidInputError(f"node {node} outside the {grid.n_rows}x{grid.n_cols} grid")
    return Ray(origin=grid.node_position(row, col), direction=DOWN)


def ray_plane_intersect(ray: Ray, plane: Plane) -> np.ndarray:
    """Unique point on both the ray (nonnegative parameter) and the plane."""
    denom = float(plane.normal @ ray.direction)
    if abs(denom) < PARALLEL_EPS:
        raise ParallelRayError("ray is parallel to the plane")
    s = (plane.offset - float(plane.normal @ ray.origin)) / denom
    if s < 0:
        raise BehindOriginError(f"plane lies behind the ray origin (s = {s:.3e})")
    return ray.at(s)


def ray_angle(ray_a: Ray, ray_b: Ray) -> float:
    """Angle between the two ray lines in ``[0, pi/2]``."""
    cross = float(np.linalg.norm(np.cross(ray_a.direction, ray_b.direction)))
    dot = abs(float(ray_a.direction @ ray_b.direction))
    return math.atan2(cross, dot)


def two_ray_lsq_point(ray_a: Ray, ray_b: Ray) -> Tuple[np.ndarray, float]:
    """Point minimizing the summed squared distance to both ray lines.

    Solves ``sum_k (I - d_k d_k^T) p = sum_k (I - d_k d_k^T) o_k``; the
    solution is the midpoint of the common perpendicular. The residual is
    the RMS of the two point-to-line distances.
    """
    angle = ray_angle(ray_a, ray_b)
    if angle < MIN_RAY_ANGLE:
        raise IllConditionedError(angle)
    eye = np.eye(3)
    proj_a = eye - np.outer(ray_a.direction, ray_a.direction)
    proj_b = eye - np.outer(ray_b.direction, ray_b.direction)
    point = np.linalg.solve(proj_a + proj_b, proj_a @ ray_a.origin + proj_b @ ray_b.origin)
    dist_a = float(np.linalg.norm(proj_a @ (point - ray_a.origin)))
    dist_b = float(np.linalg.norm(proj_b @ (point - ray_b.origin)))
    return point, math.sqrt(0.5 * (dist_a * dist_a + dist_b * dist_b))


def triangulate_matches(
    matches: Iterable[Match],
    intrinsics: Intrinsics,
    pose: Pose,
    grid: DisplayGrid,
    max_residual: Optional[float] = None,
) -> HeightMap:
    """Triangulate each (display node, image pixel) pair into a 3D ground point.

    Matches naming a node outside the grid are skipped. Nodes without a
    match, with a degenerate geometry, with a residual above
    ``max_residual`` or reconstructed at or above the display plane are
    left invalid.
    """
    result = HeightMap.empty(grid.n_rows, grid.n_cols)
    points, valid, residual = result.points, result.valid, result.residual
    rejected = 0
    for node, pixel in matches:
        row, col = node
        if not grid.contains(row, col):
            logger.warning("skipping match for node %s outside the %dx%d grid", node, grid.n_rows, grid.n_cols)
            rejected += 1
            continue
        try:
            point, res = two_ray_lsq_point(
                back_project(intrinsics, pose, pixel), display_ray(grid, node)
            )
        except GeometryError as e:
            logger.debug("node %s rejected: %s", node, e)
            rejected += 1
            continue
        points[row - 1, col - 1] = point
        residual[row - 1, col - 1] = res
        ok = point[2] < grid.h and (max_residual is None or res <= max_residual)
        valid[row - 1, col - 1] = ok
        if not ok:
            rejected += 1
    if rejected:
        logger.info("%d triangulated node(s) rejected", rejected)
    return HeightMap(points=points, valid=valid, residual=residual)
