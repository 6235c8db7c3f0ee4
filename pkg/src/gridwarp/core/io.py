"""Reading and writing scene configs, images and CSV artifacts.

CSV files are written with ``%.17g`` so values round-trip exactly; matrices
and mappings are headerless, per-node tables carry a header row.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel, ValidationError

from gridwarp.errors import ConfigError, InvalidInputError
from gridwarp.models.geometry import HeightMap
from gridwarp.models.report import Match
from gridwarp.models.scene import GroundTruth, SceneConfig
from gridwarp.models.warp import ColumnMapping, DistanceLandscape, RiverPath

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOAT_FMT = "%.17g"
HEIGHTMAP_HEADER = "row,col,X,Y,Z,valid,residual"
GROUND_TRUTH_HEADER = "row,col,X,Y,Z,u,v,visible"
MATCHES_HEADER = "row,col,u,v"
INTERSECTIONS_HEADER = "x,y"


def _field_path(loc: Sequence[object]) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def parse_scene_config(text: str) -> SceneConfig:
    """Validate a JSON scene document; failures name the offending field."""
    try:
        return SceneConfig.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        field = _field_path(first.get("loc", ()))
        raise ConfigError(f"invalid scene config at '{field}': {first['msg']}", field=field) from e


def load_scene_config(path: PathLike) -> SceneConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_scene_config(text)


def write_json(path: PathLike, payload: Union[BaseModel, Dict]) -> None:
    data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_pgm(path: PathLike, img: np.ndarray) -> None:
    """Save ``[0, 1]`` samples as an 8-bit binary PGM (P5)."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2D image, got shape {arr.shape}")
    levels = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(levels).save(Path(path), format="PPM")


def read_pgm(path: PathLike) -> np.ndarray:
    """Load a grayscale PGM as float samples in ``[0, 1]``."""
    try:
        with Image.open(Path(path)) as im:
            if im.mode != "L":
                raise InvalidInputError(f"{path} is not an 8-bit grayscale image (mode {im.mode})")
            levels = np.asarray(im, dtype=np.float64)
    except (OSError, UnidentifiedImageError) as e:
        raise InvalidInputError(f"cannot read image {path}: {e}") from e
    return levels / 255.0


def write_matrix_csv(path: PathLike, values: np.ndarray) -> None:
    np.savetxt(Path(path), np.atleast_2d(values), delimiter=",", fmt=FLOAT_FMT)


def write_landscape_csv(path: PathLike, landscape: DistanceLandscape) -> None:
    write_matrix_csv(path, landscape.values)


def write_path_csv(path: PathLike, river: RiverPath) -> None:
    np.savetxt(Path(path), np.array(river.steps, dtype=np.int64).reshape(-1, 2), delimiter=",", fmt="%d")


def write_mappings_csv(path: PathLike, columns: ColumnMapping, rows: ColumnMapping) -> None:
    """Two headerless lines: the column mapping, then the row mapping."""
    lines = [",".join(FLOAT_FMT % a for a in m.values) for m in (columns, rows)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_points_csv(path: PathLike, points: np.ndarray) -> None:
    np.savetxt(
        Path(path), np.asarray(points, dtype=np.float64).reshape(-1, 2),
        delimiter=",", fmt=FLOAT_FMT, header=INTERSECTIONS_HEADER, comments="",
    )


def read_points_csv(path: PathLike) -> np.ndarray:
    return np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2).reshape(-1, 2)


def write_matches_csv(path: PathLike, matches: List[Match]) -> None:
    rows = [(r, c, u, v) for (r, c), (u, v) in matches]
    table = np.array(rows, dtype=np.float64).reshape(-1, 4)
    np.savetxt(
        Path(path), table, delimiter=",", fmt=("%d", "%d", FLOAT_FMT, FLOAT_FMT),
        header=MATCHES_HEADER, comments="",
    )


def _node_index(n_rows: int, n_cols: int) -> Tuple[np.ndarray, np.ndarray]:
    rows, cols = np.meshgrid(np.arange(1, n_rows + 1), np.arange(1, n_cols + 1), indexing="ij")
    return rows.ravel(), cols.ravel()


def write_heightmap_csv(path: PathLike, heightmap: HeightMap) -> None:
    """One line per node: ``row, col, X, Y, Z, valid, residual``."""
    n_rows, n_cols = heightmap.shape
    rows, cols = _node_index(n_rows, n_cols)
    table = np.column_stack([
        rows, cols,
        heightmap.points.reshape(-1, 3),
        heightmap.valid.ravel().astype(np.float64),
        heightmap.residual.ravel(),
    ])
    np.savetxt(
        Path(path), table, delimiter=",",
        fmt=("%d", "%d", FLOAT_FMT, FLOAT_FMT, FLOAT_FMT, "%d", FLOAT_FMT),
        header=HEIGHTMAP_HEADER, comments="",
    )


def _read_node_table(path: PathLike, width: int) -> Tuple[np.ndarray, int, int]:
    try:
        table = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise InvalidInputError(f"cannot read node table {path}: {e}") from e
    if table.shape[1] != width or table.shape[0] == 0:
        raise InvalidInputError(f"{path}: expected {width} columns per node line")
    n_rows = int(table[:, 0].max())
    n_cols = int(table[:, 1].max())
    if table.shape[0] != n_rows * n_cols:
        raise InvalidInputError(f"{path}: {table.shape[0]} lines for a {n_rows}x{n_cols} grid")
    order = np.lexsort((table[:, 1], table[:, 0]))
    return table[order], n_rows, n_cols


def read_heightmap_csv(path: PathLike) -> HeightMap:
    table, n_rows, n_cols = _read_node_table(path, 7)
    return HeightMap(
        points=table[:, 2:5].reshape(n_rows, n_cols, 3),
        valid=table[:, 5].reshape(n_rows, n_cols) != 0,
        residual=table[:, 6].reshape(n_rows, n_cols),
    )


def write_ground_truth_csv(path: PathLike, gt: GroundTruth) -> None:
    """One line per node: ``row, col, X, Y, Z, u, v, visible``."""
    n_rows, n_cols = gt.shape
    rows, cols = _node_index(n_rows, n_cols)
    table = np.column_stack([
        rows, cols,
        gt.points.reshape(-1, 3),
        gt.pixels.reshape(-1, 2),
        gt.visible.ravel().astype(np.float64),
    ])
    np.savetxt(
        Path(path), table, delimiter=",",
        fmt=("%d", "%d") + (FLOAT_FMT,) * 5 + ("%d",),
        header=GROUND_TRUTH_HEADER, comments="",
    )


def read_ground_truth_heightmap(path: PathLike) -> HeightMap:
    """True height map from a ground-truth CSV; every node is valid."""
    table, n_rows, n_cols = _read_node_table(path, 8)
    return HeightMap(
        points=table[:, 2:5].reshape(n_rows, n_cols, 3),
        valid=np.ones((n_rows, n_cols), dtype=bool),
        residual=np.zeros((n_rows, n_cols)),
    )


def heightmap_image(heightmap: HeightMap, scale: int = 8) -> np.ndarray:
    """Heights rescaled to ``[0, 1]`` over valid nodes, invalid nodes black, upsampled by ``scale``."""
    z = heightmap.heights
    img = np.zeros(z.shape)
    finite = np.isfinite(z)
    if finite.any():
        lo, hi = float(z[finite].min()), float(z[finite].max())
        img[finite] = (z[finite] - lo) / (hi - lo) if hi > lo else 0.5
    return np.kron(img, np.ones((scale, scale)))
