"""Grid intersection extraction from a camera image.

Images are 2D float arrays indexed ``[row, col]`` with samples in ``[0, 1]``;
binary images are boolean arrays of the same shape. Intersection points are
``(x, y)`` = ``(col, row)`` pairs in pixel units.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.cluster.vq import ClusterError, kmeans2
from scipy.spatial.distance import pdist
from skimage.morphology import skeletonize as _zhang_thinning

from gridwarp.errors import ExtractionError, InvalidInputError
from gridwarp.models.lattice import Lattice
from gridwarp.models.scene import PipelineConfig
from gridwarp.models.warp import ColumnGrid

logger = logging.getLogger(__name__)

# 8-neighborhood in circular order, starting north
RING: Tuple[Tuple[int, int], ...] = (
    (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1),
)
# radius kept clear around a junction cluster before its arms are counted
ARM_CLEARANCE = 3.0
FLAT_RESPONSE = 0.5
REFINE_ITERATIONS = 30
REFINE_TOLERANCE = 1e-3


def as_image(img: np.ndarray) -> np.ndarray:
    """Validate a grayscale image: non-empty 2D and finite."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInputError(f"expected a non-empty 2D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("image samples must be finite")
    return arr


def _check_sigma(sigma: float) -> None:
    if not sigma > 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}")


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian, kernel radius ``ceil(3 sigma)``, edges clamped."""
    _check_sigma(sigma)
    return ndimage.gaussian_filter(
        as_image(img), sigma, mode="nearest", radius=int(math.ceil(3.0 * sigma))
    )


def _rescale(values: np.ndarray) -> np.ndarray:
    lo = float(values.min())
    hi = float(values.max())
    if hi - lo <= 1e-12 * max(1.0, abs(hi), abs(lo)):
        return np.full(values.shape, FLAT_RESPONSE)
    return (values - lo) / (hi - lo)


def ridge_response(blurred: np.ndarray) -> np.ndarray:
    """Negated 4-neighbor Laplacian of an already blurred image, min-max rescaled to ``[0, 1]``.

    Bright ridges come out high. A flat response maps to 0.5 everywhere.
    """
    return _rescale(-ndimage.laplace(as_image(blurred), mode="nearest"))


def log_enhance(img: np.ndarray, sigma: float) -> np.ndarray:
    """Laplacian-of-Gaussian enhancement: ``ridge_response`` of the blurred image."""
    return ridge_response(gaussian_blur(img, sigma))


def binarize(img: np.ndarray, threshold: float) -> np.ndarray:
    """Pixels with ``sample >= threshold``."""
    if not 0.0 < threshold < 1.0:
        raise InvalidInputError(f"threshold must lie in (0, 1), got {threshold}")
    return as_image(img) >= threshold


def drop_small_components(binary: np.ndarray, min_size: int) -> np.ndarray:
    """Remove 8-connected foreground components with fewer than ``min_size`` pixels."""
    arr = np.asarray(binary, dtype=bool)
    labels, n = ndimage.label(arr, structure=np.ones((3, 3), dtype=bool))
    if n == 0 or min_size <= 1:
        return arr.copy()
    keep = np.bincount(labels.ravel()) >= min_size
    keep[0] = False
    logger.debug("kept %d of %d foreground components", int(keep.sum()), n)
    return keep[labels]


def skeletonize(binary: np.ndarray) -> np.ndarray:
    """Zhang-Suen thinning to one-pixel strokes."""
    arr = np.asarray(binary, dtype=bool)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2D binary image, got shape {arr.shape}")
    if not arr.any():
        return arr.copy()
    return _zhang_thinning(arr, method="zhang")


def _ring(skel: np.ndarray) -> List[np.ndarray]:
    padded = np.pad(skel, 1)
    h, w = skel.shape
    return [padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w] for dy, dx in RING]


def junction_candidates(skel: np.ndarray) -> np.ndarray:
    """Skeleton pixels with at least 3 neighbors and at least 3 ring crossings."""
    ring = _ring(skel)
    neighbors = np.sum(ring, axis=0)
    crossings = np.zeros(skel.shape, dtype=np.int64)
    for k in range(len(ring)):
        crossings += ~ring[k] & ring[(k + 1) % len(ring)]
    return skel & (neighbors >= 3) & (crossings >= 3)


def _merge_clusters(pixels: np.ndarray, merge_radius: float) -> List[np.ndarray]:
    groups = [np.array([k]) for k in range(len(pixels))]
    while len(groups) > 1:
        centers = np.array([pixels[g].mean(axis=0) for g in groups])
        if pdist(centers).min() >= merge_radius:
            break
        assign = fcluster(linkage(centers, method="single"), t=merge_radius, criterion="distance")
        groups = [
            np.concatenate([groups[k] for k in np.flatnonzero(assign == label)])
            for label in np.unique(assign)
        ]
    return groups


def count_arms(
    skel: np.ndarray, center: Sequence[float], length: float, core: float = ARM_CLEARANCE
) -> int:
    """Skeleton branches crossing the annulus ``core < r <= core + length`` around ``center`` (row, col).

    A branch counts when one 8-connected piece of skeleton inside the
    annulus spans it from the inner to the outer rim.
    """
    cy, cx = center
    outer = core + length
    h, w = skel.shape
    r0, r1 = max(int(cy - outer) - 1, 0), min(int(cy + outer) + 2, h)
    c0, c1 = max(int(cx - outer) - 1, 0), min(int(cx + outer) + 2, w)
    rows, cols = np.mgrid[r0:r1, c0:c1]
    dist = np.hypot(rows - cy, cols - cx)
    annulus = skel[r0:r1, c0:c1] & (dist > core) & (dist <= outer)
    labels, n = ndimage.label(annulus, structure=np.ones((3, 3), dtype=bool))
    arms = 0
    for k in range(1, n + 1):
        reach = dist[labels == k]
        if reach.min() <= core + 1.5 and reach.max() >= outer - 0.5:
            arms += 1
    return arms


def detect_intersections(
    skel: np.ndarray, merge_radius: float, min_branch_length: float = 0
) -> np.ndarray:
    """Junctions of a skeleton as subpixel ``(x, y)`` points, sorted by y then x.

    Candidates closer than ``merge_radius`` are merged into their centroid
    until every pair of points is at least ``merge_radius`` apart. With a
    positive ``min_branch_length`` a point is kept only if at least three
    branches of that length leave it, counted outside the merged cluster
    (its radius, capped at half the merge radius, plus ``ARM_CLEARANCE``).
    Thinning often splits one crossing into two nearby three-way
    junctions; the clearance keeps their arms apart.
    """
    if merge_radius < 1:
        raise InvalidInputError(f"merge_radius must be at least 1, got {merge_radius}")
    skel = np.asarray(skel, dtype=bool)
    rows, cols = np.nonzero(junction_candidates(skel))
    if rows.size == 0:
        return np.empty((0, 2))
    pixels = np.stack([rows, cols], axis=1).astype(np.float64)
    centers = []
    for group in _merge_clusters(pixels, merge_radius):
        members = pixels[group]
        center = members.mean(axis=0)
        if min_branch_length > 0:
            spread = float(np.hypot(*(members - center).T).max())
            core = min(spread, 0.5 * merge_radius) + ARM_CLEARANCE
            if count_arms(skel, center, min_branch_length, core) < 3:
                continue
        centers.append(center)
    if min_branch_length > 0:
        logger.debug("branch filter kept %d junction(s)", len(centers))
    if not centers:
        return np.empty((0, 2))
    return _sorted_points(np.array([(c[1], c[0]) for c in centers]))


def _sorted_points(points: np.ndarray) -> np.ndarray:
    order = np.lexsort((points[:, 0], points[:, 1]))
    return points[order]


def refine_intersections(blurred: np.ndarray, points: np.ndarray, window: float) -> np.ndarray:
    """Subpixel junction positions from the blurred image.

    Each point moves to the centroid of the blurred image above its local
    median, weighted by a Gaussian window of width ``window`` centered on
    the current estimate, until it settles. A crossing of two lines is the
    fixed point of that iteration. Points that would move farther than
    ``window`` keep their initial position.
    """
    img = as_image(blurred)
    if not window > 0:
        raise InvalidInputError(f"refinement window must be positive, got {window}")
    h, w = img.shape
    reach = int(math.ceil(4.0 * window))
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    refined = pts.copy()
    for k, (x0, y0) in enumerate(pts):
        x, y = x0, y0
        for _ in range(REFINE_ITERATIONS):
            cx, cy = int(round(x)), int(round(y))
            r0, r1 = max(cy - reach, 0), min(cy + reach + 1, h)
            c0, c1 = max(cx - reach, 0), min(cx + reach + 1, w)
            if r0 >= r1 or c0 >= c1:
                break
            patch = img[r0:r1, c0:c1]
            rows, cols = np.mgrid[r0:r1, c0:c1]
            weight = np.exp(-((cols - x) ** 2 + (rows - y) ** 2) / (2.0 * window * window))
            mass = np.clip(patch - np.median(patch), 0.0, None) * weight
            total = float(mass.sum())
            if total <= 0.0:
                break
            nx = float((mass * cols).sum()) / total
            ny = float((mass * rows).sum()) / total
            settled = math.hypot(nx - x, ny - y) < REFINE_TOLERANCE
            x, y = nx, ny
            if settled:
                break
        if math.hypot(x - x0, y - y0) <= window:
            refined[k] = (x, y)
        else:
            logger.debug("refinement of (%.1f, %.1f) wandered off, kept", x0, y0)
    return refined


def image_contrast(img: np.ndarray) -> float:
    """Spread between the 1st and 99th percentile."""
    lo, hi = np.percentile(img, [1.0, 99.0])
    return float(hi - lo)


def extract_intersections(img: np.ndarray, cfg: Optional[PipelineConfig] = None) -> np.ndarray:
    """Blur, enhance, binarize, thin and detect grid intersections.

    Foreground specks smaller than ``cfg.min_component_size`` are dropped
    before thinning; with a positive ``cfg.refine_window`` the detected
    junctions are refined to subpixel positions on the blurred frame.

    Raises ExtractionError when the blurred frame has no usable contrast or
    when no intersection survives.
    """
    cfg = cfg or PipelineConfig()
    image = as_image(img)
    blurred = gaussian_blur(image, cfg.blur_sigma)
    contrast = image_contrast(blurred)
    if contrast < cfg.min_contrast:
        raise ExtractionError(
            f"image contrast {contrast:.4f} below the minimum {cfg.min_contrast:.4f}"
        )
    binary = drop_small_components(binarize(ridge_response(blurred), cfg.threshold), cfg.min_component_size)
    skel = skeletonize(binary)
    points = detect_intersections(skel, cfg.merge_radius, cfg.min_branch_length)
    if len(points) == 0:
        raise ExtractionError("no grid intersections detected")
    if cfg.refine_window > 0:
        points = _sorted_points(refine_intersections(blurred, points, cfg.refine_window))
    logger.info("detected %d intersections", len(points))
    return points


def _column_step(ys: np.ndarray) -> Optional[float]:
    if len(ys) < 2:
        return None
    return float(np.median(np.diff(ys)))


def _thin_column(ys: np.ndarray, n_rows: int) -> np.ndarray:
    """Indices kept after dropping the later point of the tightest pair until ``n_rows`` remain."""
    keep = np.arange(len(ys))
    while len(keep) > n_rows:
        gaps = np.diff(ys[keep])
        keep = np.delete(keep, int(np.argmin(gaps)) + 1)
    return keep


def _ranks(ys: np.ndarray, n_rows: int, step: float) -> np.ndarray:
    if len(ys) == n_rows or step <= 0:
        return np.arange(len(ys))
    inc = np.maximum(1, np.rint(np.diff(ys) / step).astype(np.int64))
    ranks = np.concatenate([[0], np.cumsum(inc)])
    if ranks[-1] > n_rows - 1:
        return np.arange(len(ys))
    return ranks


def build_lattice(
    points: np.ndarray,
    n_cols: int,
    n_rows: int,
    height: float,
    labels: Optional[np.ndarray] = None,
) -> Lattice:
    """Arrange intersections into an ``n_rows x n_cols`` rank lattice.

    Columns come from 1D k-means on x started at uniform quantiles. Within a
    column points are sorted by y and ranked by the column's median spacing;
    missing ranks are filled by linear interpolation, trailing ones by
    extrapolation with that spacing. A missing first point cannot be told
    apart from a shifted column and shifts the ranks.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if n_cols < 1 or n_rows < 1:
        raise InvalidInputError(f"lattice must be at least 1x1, got {n_rows}x{n_cols}")
    if not height > 0:
        raise InvalidInputError(f"image height must be positive, got {height}")
    if len(pts) < n_cols:
        raise ExtractionError(f"{len(pts)} intersections cannot fill {n_cols} columns")
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64).reshape(-1, 2)
        if len(labels) != len(pts):
            raise InvalidInputError("labels must align with points")

    xs = pts[:, 0]
    init = np.quantile(xs, (np.arange(n_cols) + 0.5) / n_cols)
    try:
        centroids, assign = kmeans2(
            xs.reshape(-1, 1), init.reshape(-1, 1), minit="matrix", missing="raise"
        )
    except ClusterError as e:
        raise ExtractionError(f"could not split intersections into {n_cols} columns: {e}") from e
    column_of_cluster = np.empty(n_cols, dtype=np.int64)
    column_of_cluster[np.argsort(centroids[:, 0], kind="stable")] = np.arange(n_cols)

    members = []
    for c in range(n_cols):
        idx = np.flatnonzero(column_of_cluster[assign] == c)
        idx = idx[np.argsort(pts[idx, 1], kind="stable")]
        members.append(idx[_thin_column(pts[idx, 1], n_rows)])
    steps = [s for s in (_column_step(pts[m, 1]) for m in members) if s is not None]
    diffs = np.concatenate([np.diff(pts[m, 1]) for m in members if len(m) > 1] or [np.empty(0)])
    global_step = float(np.median(diffs)) if diffs.size else height / n_rows

    shape = (n_rows, n_cols)
    profiles = np.empty(shape)
    pixels = np.empty(shape + (2,))
    detected = np.zeros(shape, dtype=bool)
    source = np.full(shape, -1, dtype=np.int64)
    cell_labels = np.full(shape + (2,), -1, dtype=np.int64) if labels is not None else None

    for c, idx in enumerate(members):
        ys = pts[idx, 1]
        step = _column_step(ys) or global_step
        ranks = _ranks(ys, n_rows, step)
        all_ranks = np.arange(n_rows)
        filled = np.interp(all_ranks, ranks, ys)
        tail = all_ranks > ranks[-1]
        filled[tail] = ys[-1] + step * (all_ranks[tail] - ranks[-1])
        profiles[:, c] = filled / height
        pixels[:, c, 0] = xs[idx].mean()
        pixels[:, c, 1] = filled
        pixels[ranks, c] = pts[idx]
        detected[ranks, c] = True
        source[ranks, c] = idx
        if cell_labels is not None:
            cell_labels[ranks, c] = labels[idx]
        if len(idx) < n_rows:
            logger.debug("column %d: padded %d missing rank(s)", c + 1, n_rows - len(idx))

    if len(steps) < n_cols:
        logger.debug("%d column(s) fell back to the global spacing", n_cols - len(steps))
    return Lattice(
        profiles=ColumnGrid(data=profiles),
        pixels=pixels,
        detected=detected,
        source=source,
        labels=cell_labels,
    )


def intersections_to_column_profiles(
    points: np.ndarray, n_cols: int, n_rows: int, height: float
) -> ColumnGrid:
    """Per-column normalized y-profiles, ``n_rows x n_cols``."""
    return build_lattice(points, n_cols, n_rows, height).profiles
