"""From detected intersections to a height map.

The reference lattice is the display grid as it would appear on flat
ground; the observed lattice is built from detections. Grid matching pairs
their columns and rows, each paired cell gives a (display node, pixel)
correspondence and triangulation turns those into ground points.
"""

import logging
import time
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from gridwarp.core.geometry import project, triangulate_matches
from gridwarp.core.grid_match import GridMatchOptions, local_min_mapping, match_grid
from gridwarp.core.image_pipeline import build_lattice, extract_intersections
from gridwarp.errors import ExtractionError, InvalidInputError
from gridwarp.models.lattice import Lattice
from gridwarp.models.report import Correspondence, Match, Reconstruction
from gridwarp.models.scene import ObservedPixels, SceneConfig
from gridwarp.models.warp import GridMatchResult

logger = logging.getLogger(__name__)


@contextmanager
def stage(timings: Dict[str, float], name: str) -> Iterator[None]:
    """Record the wall time of a block under ``name``."""
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - start


def flat_pixels(cfg: SceneConfig) -> np.ndarray:
    """Pixels of every display node projected on the nominal ground plane z = 0."""
    nodes = cfg.grid.node_positions()
    nodes[..., 2] = 0.0
    pose = cfg.pose
    n_rows, n_cols = cfg.grid.shape
    pixels = np.empty((n_rows, n_cols, 2))
    for r in range(n_rows):
        for c in range(n_cols):
            pixels[r, c] = project(cfg.intrinsics, pose, nodes[r, c])
    return pixels


def reference_lattice(cfg: SceneConfig) -> Lattice:
    """Labelled lattice of the display grid on flat ground."""
    n_rows, n_cols = cfg.grid.shape
    pixels = flat_pixels(cfg).reshape(-1, 2)
    rows, cols = np.meshgrid(np.arange(1, n_rows + 1), np.arange(1, n_cols + 1), indexing="ij")
    labels = np.stack([rows.ravel(), cols.ravel()], axis=1)
    return build_lattice(pixels, n_cols, n_rows, cfg.render.height, labels=labels)


def nearest_rank(a: float) -> int:
    """Nearest 1-based rank to a mapping value; halves go to the lower rank."""
    return int(np.ceil(a - 0.5))


def _pair_cells(
    reference: Lattice,
    observed: Lattice,
    row_map: Sequence[float],
    col_map: Sequence[float],
) -> List[Match]:
    if reference.labels is None:
        raise InvalidInputError("reference lattice must carry node labels")
    n_rows, n_cols = observed.shape
    best: Dict[tuple, tuple] = {}
    for r, a_row in enumerate(row_map):
        for c, a_col in enumerate(col_map):
            br = nearest_rank(a_row)
            bc = nearest_rank(a_col)
            if not (1 <= br <= n_rows and 1 <= bc <= n_cols):
                continue
            if not observed.detected[br - 1, bc - 1]:
                continue
            node = tuple(int(v) for v in reference.labels[r, c])
            if node[0] < 1:
                continue
            slack = abs(a_row - br) + abs(a_col - bc)
            held = best.get((br, bc))
            if held is None or slack < held[0]:
                best[(br, bc)] = (slack, node)
    matches = []
    for (br, bc), (_, node) in best.items():
        u, v = observed.pixels[br - 1, bc - 1]
        matches.append((node, (float(u), float(v))))
    matches.sort()
    return matches


def correspondences_from_match(
    reference: Lattice, observed: Lattice, result: GridMatchResult
) -> List[Match]:
    """Display node to detected pixel pairs induced by the row and column mappings.

    Reference cell ``(r, c)`` lands on observed cell
    ``(round(row_map[r]), round(col_map[c]))``. Padded cells yield nothing
    and each observed cell keeps the reference cell with the smallest
    rounding distance.
    """
    return _pair_cells(
        reference, observed, result.row_mapping.values, result.column_mapping.values
    )


def nearest_neighbour_matches(
    points: np.ndarray, cfg: SceneConfig, gate: Optional[float] = None
) -> List[Match]:
    """Assign each detection to the display node predicted nearest on flat ground.

    Detections farther than ``gate`` times the local node spacing are
    dropped; when several detections pick one node the closest wins.
    """
    gate = cfg.pipeline.nn_gate if gate is None else gate
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    predicted = flat_pixels(cfg)
    n_rows, n_cols = cfg.grid.shape
    flat = predicted.reshape(-1, 2)
    tree = cKDTree(flat)
    if len(flat) > 1:
        spacing_dist, _ = tree.query(flat, k=2)
        spacing = float(np.median(spacing_dist[:, 1]))
    else:
        spacing = float("inf")
    if len(pts) == 0:
        return []
    dist, idx = tree.query(pts)
    best: Dict[int, tuple] = {}
    for k, (d, node_idx) in enumerate(zip(dist, idx)):
        if d > gate * spacing:
            continue
        held = best.get(int(node_idx))
        if held is None or d < held[0]:
            best[int(node_idx)] = (float(d), k)
    matches = []
    for node_idx, (_, k) in sorted(best.items()):
        node = (node_idx // n_cols + 1, node_idx % n_cols + 1)
        matches.append((node, (float(pts[k, 0]), float(pts[k, 1]))))
    logger.debug("nearest-neighbour matched %d of %d detections", len(matches), len(pts))
    return matches


def reconstruct_points(
    points: np.ndarray,
    cfg: SceneConfig,
    correspondence: Correspondence = Correspondence.GRID,
    workers: Optional[int] = None,
    timings: Optional[Dict[str, float]] = None,
) -> Reconstruction:
    """Match detected intersections to display nodes and triangulate."""
    timings = {} if timings is None else timings
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    pipe = cfg.pipeline
    n_rows, n_cols = cfg.grid.shape
    if correspondence == Correspondence.EXACT:
        raise InvalidInputError("exact correspondences need labelled pixels, see reconstruct_observed")
    reference = observed = result = None

    with stage(timings, "match"):
        if correspondence == Correspondence.NEAREST:
            matches = nearest_neighbour_matches(pts, cfg)
        else:
            reference = reference_lattice(cfg)
            observed = build_lattice(pts, n_cols, n_rows, cfg.render.height)
            options = GridMatchOptions(
                kind=pipe.cost, mode=pipe.mode, method=pipe.method, workers=workers
            )
            result = match_grid(reference.profiles, observed.profiles, options)
            if correspondence == Correspondence.LOCAL_MIN:
                matches = _pair_cells(
                    reference,
                    observed,
                    local_min_mapping(result.d_rows),
                    local_min_mapping(result.d_cols),
                )
            else:
                matches = correspondences_from_match(reference, observed, result)

    with stage(timings, "triangulate"):
        heightmap = triangulate_matches(
            matches, cfg.intrinsics, cfg.pose, cfg.grid, max_residual=pipe.max_residual
        )
    logger.info(
        "%s correspondence: %d matches, %d valid nodes",
        correspondence.value, len(matches), int(heightmap.valid.sum()),
    )
    return Reconstruction(
        heightmap=heightmap,
        matches=matches,
        points=pts,
        correspondence=correspondence,
        reference=reference,
        observed=observed,
        match=result,
        timings=timings,
    )


def reconstruct_image(
    img: np.ndarray,
    cfg: SceneConfig,
    correspondence: Correspondence = Correspondence.GRID,
    workers: Optional[int] = None,
) -> Reconstruction:
    """Full pipeline: extraction, matching and triangulation."""
    timings: Dict[str, float] = {}
    with stage(timings, "extract"):
        points = extract_intersections(img, cfg.pipeline)
    n_nodes = cfg.grid.n_rows * cfg.grid.n_cols
    if len(points) != n_nodes:
        logger.warning("detected %d intersections for %d display nodes", len(points), n_nodes)
    return reconstruct_points(points, cfg, correspondence, workers, timings)


def reconstruct_observed(observed: ObservedPixels, cfg: SceneConfig) -> Reconstruction:
    """Triangulate exact (possibly noisy) correspondences, bypassing extraction and matching."""
    timings: Dict[str, float] = {}
    rows, cols = np.nonzero(observed.present)
    matches = [
        ((int(r) + 1, int(c) + 1), (float(observed.pixels[r, c, 0]), float(observed.pixels[r, c, 1])))
        for r, c in zip(rows, cols)
    ]
    if not matches:
        raise ExtractionError("no observed node survived")
    with stage(timings, "triangulate"):
        heightmap = triangulate_matches(
            matches, cfg.intrinsics, cfg.pose, cfg.grid, max_residual=cfg.pipeline.max_residual
        )
    return Reconstruction(
        heightmap=heightmap,
        matches=matches,
        points=observed.pixels[observed.present],
        correspondence=Correspondence.EXACT,
        timings=timings,
    )


def shuffled_detections(observed: ObservedPixels, rng: np.random.Generator) -> np.ndarray:
    """Surviving observed pixels as an unlabelled, randomly ordered point set."""
    points = observed.pixels[observed.present]
    return points[rng.permutation(len(points))]
