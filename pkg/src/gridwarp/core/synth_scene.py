"""Forward model: terrain under the display grid, camera image and ground truth.

Light leaves each display node straight down, so node ``(r, c)`` lands on the
terrain directly beneath it. Grid lines are drawn as anti-aliased polylines
through the projections of densely sampled ground points.
"""

import logging
from typing import Optional

import numpy as np
from scipy import ndimage

from gridwarp.core.geometry import project
from gridwarp.errors import SceneInvalidError
from gridwarp.models.geometry import DisplayGrid, HeightMap, Intrinsics
from gridwarp.models.scene import GroundTruth, NoiseConfig, ObservedPixels, SceneConfig, Terrain

logger = logging.getLogger(__name__)

# sub-samples per grid spacing when checking terrain clearance
CLEARANCE_SAMPLES = 8
# samples along the path from a ground point to the camera
OCCLUSION_SAMPLES = 32
OCCLUSION_EPS = 1e-9
BOUNDARY_ITERATIONS = 20

RENDER_STREAM = 0
OBSERVE_STREAM = 1


def scene_rng(cfg: SceneConfig, stream: int = RENDER_STREAM) -> np.random.Generator:
    """PCG64 generator for one named stream of a scene's seed."""
    return np.random.default_rng([stream, cfg.seed])


def project_grid_to_ground(grid: DisplayGrid, terrain: Terrain) -> np.ndarray:
    """Ground point beneath every display node, shape ``(n_rows, n_cols, 3)``.

    Raises SceneInvalidError when the terrain reaches the display plane
    anywhere under the grid footprint.
    """
    ox, oy, _ = grid.origin
    step = grid.spacing / CLEARANCE_SAMPLES
    xs = ox + step * np.arange((grid.n_cols - 1) * CLEARANCE_SAMPLES + 1)
    ys = oy + step * np.arange((grid.n_rows - 1) * CLEARANCE_SAMPLES + 1)
    gx, gy = np.meshgrid(xs, ys)
    peak = float(np.max(terrain.height_at(gx, gy)))
    if peak >= grid.h:
        raise SceneInvalidError(
            f"terrain reaches {peak:.4f} m under the grid, display plane is at {grid.h:.4f} m"
        )
    nodes = grid.node_positions()
    nodes[..., 2] = terrain.height_at(nodes[..., 0], nodes[..., 1])
    return nodes


def pixel_angles(intrinsics: Intrinsics, width: int, height: int) -> np.ndarray:
    """Angle in degrees between each pixel's viewing ray and the optical axis."""
    u, v = np.meshgrid(np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64))
    rays = np.stack([u, v, np.ones_like(u)], axis=-1) @ intrinsics.inverse.T
    return np.degrees(np.arctan(np.hypot(rays[..., 0], rays[..., 1]) / rays[..., 2]))


def fov_gain(angle_deg: np.ndarray, limit_deg: float) -> np.ndarray:
    """Angular film response: 1 inside 90% of the limit, cosine taper to 0 at the limit."""
    inner = 0.9 * limit_deg
    t = np.clip((np.asarray(angle_deg) - inner) / (limit_deg - inner), 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * t))


def _draw_segment(canvas: np.ndarray, p0: np.ndarray, p1: np.ndarray, half_width: float) -> None:
    height, width = canvas.shape
    reach = half_width + 1.0
    u_lo = max(int(np.floor(min(p0[0], p1[0]) - reach)), 0)
    u_hi = min(int(np.ceil(max(p0[0], p1[0]) + reach)), width - 1)
    v_lo = max(int(np.floor(min(p0[1], p1[1]) - reach)), 0)
    v_hi = min(int(np.ceil(max(p0[1], p1[1]) + reach)), height - 1)
    if u_lo > u_hi or v_lo > v_hi:
        return
    u, v = np.meshgrid(np.arange(u_lo, u_hi + 1), np.arange(v_lo, v_hi + 1))
    seg = p1 - p0
    length_sq = float(seg @ seg)
    if length_sq > 0.0:
        t = np.clip(((u - p0[0]) * seg[0] + (v - p0[1]) * seg[1]) / length_sq, 0.0, 1.0)
    else:
        t = np.zeros(u.shape)
    dist = np.hypot(u - (p0[0] + t * seg[0]), v - (p0[1] + t * seg[1]))
    coverage = np.clip(half_width + 0.5 - dist, 0.0, 1.0)
    window = canvas[v_lo : v_hi + 1, u_lo : u_hi + 1]
    np.maximum(window, coverage, out=window)


def _line_samples(cfg: SceneConfig, terrain: Terrain):
    """Yield ground polylines for every grid row and column line."""
    grid = cfg.grid
    ox, oy, _ = grid.origin
    per_cell = cfg.render.samples_per_cell
    over = cfg.render.overhang
    for n_nodes, other, along_origin, across_origin, horizontal in (
        (grid.n_cols, grid.n_rows, ox, oy, True),
        (grid.n_rows, grid.n_cols, oy, ox, False),
    ):
        count = int(np.ceil((n_nodes - 1 + 2 * over) * per_cell)) + 1
        along = along_origin + grid.spacing * np.linspace(-over, n_nodes - 1 + over, count)
        for k in range(other):
            across = np.full_like(along, across_origin + k * grid.spacing)
            x, y = (along, across) if horizontal else (across, along)
            yield np.stack([x, y, terrain.height_at(x, y)], axis=-1)


def unoccluded(points: np.ndarray, camera_center, terrain: Terrain) -> np.ndarray:
    """True where the straight path from a ground point to the camera clears the terrain.

    The path is sampled only up to the height of the tallest terrain feature;
    beyond it nothing can block the view. Works on any ``(..., 3)`` array.
    """
    pts = np.asarray(points, dtype=np.float64)
    flat = pts.reshape(-1, 3)
    center = np.asarray(camera_center, dtype=np.float64)
    rise = center[2] - flat[:, 2]
    reach = np.where(rise > 0, (terrain.peak() - flat[:, 2]) / np.where(rise > 0, rise, 1.0), 0.0)
    reach = np.clip(reach, 0.0, 1.0)
    t = reach[:, None] * np.linspace(0.0, 1.0, OCCLUSION_SAMPLES + 1)[None, 1:]
    path = flat[:, None, :] + t[..., None] * (center - flat)[:, None, :]
    blocked = terrain.height_at(path[..., 0], path[..., 1]) > path[..., 2] + OCCLUSION_EPS
    return ~blocked.any(axis=1).reshape(pts.shape[:-1])


def _ground_between(terrain: Terrain, a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
    x, y = a[:2] + s * (b[:2] - a[:2])
    return np.array([x, y, float(terrain.height_at(x, y))])


def _visibility_boundary(
    terrain: Terrain, center, seen: np.ndarray, hidden: np.ndarray
) -> np.ndarray:
    """Last visible ground point on the way from ``seen`` to ``hidden``."""
    lo, hi = 0.0, 1.0
    for _ in range(BOUNDARY_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if unoccluded(_ground_between(terrain, seen, hidden, mid), center, terrain):
            lo = mid
        else:
            hi = mid
    return _ground_between(terrain, seen, hidden, lo)


def render_lines(cfg: SceneConfig, terrain: Terrain) -> np.ndarray:
    """Noise-free line coverage in ``[0, 1]`` before attenuation.

    Line stretches hidden from the camera by the terrain are left out; a
    segment that passes out of view is cut where it disappears.
    """
    canvas = np.zeros((cfg.render.height, cfg.render.width))
    half_width = 0.5 * cfg.render.line_width_px
    pose = cfg.pose
    intr = cfg.intrinsics
    center = cfg.camera.center

    def to_pixels(points: np.ndarray):
        uvw = (points @ pose.R.T + pose.t) @ intr.matrix.T
        in_front = uvw[..., 2] > 0
        return uvw[..., :2] / np.where(in_front, uvw[..., 2], 1.0)[..., None], in_front

    for polyline in _line_samples(cfg, terrain):
        pix, in_front = to_pixels(polyline)
        seen = unoccluded(polyline, center, terrain) & in_front
        for a in range(len(pix) - 1):
            if seen[a] and seen[a + 1]:
                _draw_segment(canvas, pix[a], pix[a + 1], half_width)
            elif seen[a] or seen[a + 1]:
                near, far = (a, a + 1) if seen[a] else (a + 1, a)
                edge = _visibility_boundary(terrain, center, polyline[near], polyline[far])
                edge_pix, edge_front = to_pixels(edge)
                if edge_front:
                    _draw_segment(canvas, pix[near], edge_pix, half_width)
    return canvas


def floor_texture(shape, noise: NoiseConfig, rng: np.random.Generator) -> np.ndarray:
    """Smoothed random background of amplitude ``noise.texture_amplitude``."""
    field = ndimage.gaussian_filter(rng.standard_normal(shape), noise.texture_scale_px, mode="nearest")
    spread = float(field.std())
    if spread > 0.0:
        field = field / spread
    return noise.texture_amplitude * np.clip(0.5 + 0.25 * field, 0.0, 1.0)


def render_scene(
    cfg: SceneConfig,
    terrain: Optional[Terrain] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Camera image of the projected grid, float samples in ``[0, 1]``.

    Random draws happen in a fixed order (texture, then image noise) and
    only for enabled sources, so a given seed always yields the same image.
    """
    terrain = cfg.terrain if terrain is None else terrain
    project_grid_to_ground(cfg.grid, terrain)
    rng = scene_rng(cfg, RENDER_STREAM) if rng is None else rng
    shape = (cfg.render.height, cfg.render.width)

    image = cfg.render.brightness * render_lines(cfg, terrain)
    if cfg.noise.texture_amplitude > 0:
        image = np.maximum(image, floor_texture(shape, cfg.noise, rng))
    angles = pixel_angles(cfg.intrinsics, cfg.render.width, cfg.render.height)
    image = image * fov_gain(angles, cfg.fov_limit_deg)
    if cfg.noise.image_sigma > 0:
        image = image + cfg.noise.image_sigma * rng.standard_normal(shape)
    logger.debug("rendered %dx%d image, mean %.4f", shape[1], shape[0], float(image.mean()))
    return np.clip(image, 0.0, 1.0)


def emit_ground_truth(cfg: SceneConfig, terrain: Optional[Terrain] = None) -> GroundTruth:
    """Exact node points, their pixels and visibility, and the true height map."""
    terrain = cfg.terrain if terrain is None else terrain
    points = project_grid_to_ground(cfg.grid, terrain)
    pose = cfg.pose
    n_rows, n_cols = cfg.grid.shape
    pixels = np.empty((n_rows, n_cols, 2))
    for r in range(n_rows):
        for c in range(n_cols):
            pixels[r, c] = project(cfg.intrinsics, pose, points[r, c])

    u, v = pixels[..., 0], pixels[..., 1]
    width, height = cfg.render.width, cfg.render.height
    inside = (u >= -0.5) & (u < width - 0.5) & (v >= -0.5) & (v < height - 0.5)
    rays = np.concatenate([pixels, np.ones((n_rows, n_cols, 1))], axis=-1) @ cfg.intrinsics.inverse.T
    angles = np.degrees(np.arctan(np.hypot(rays[..., 0], rays[..., 1]) / rays[..., 2]))
    visible = inside & (rays[..., 2] > 0) & (angles < cfg.fov_limit_deg)
    hidden = visible & ~unoccluded(points, cfg.camera.center, terrain)
    visible &= ~hidden
    if hidden.any():
        logger.info("%d node(s) hidden from the camera by the terrain", int(hidden.sum()))
    if not visible.all():
        logger.info("%d of %d nodes are not visible", int((~visible).sum()), visible.size)

    heightmap = HeightMap(
        points=points,
        valid=np.ones((n_rows, n_cols), dtype=bool),
        residual=np.zeros((n_rows, n_cols)),
    )
    return GroundTruth(points=points, pixels=pixels, visible=visible, heightmap=heightmap)


def observed_pixels(
    gt: GroundTruth, noise: NoiseConfig, rng: np.random.Generator
) -> ObservedPixels:
    """Ground-truth pixels as a detector would report them.

    Adds isotropic Gaussian noise of ``noise.pixel_sigma`` and drops each
    visible node with probability ``noise.dropout``.
    """
    shape = gt.visible.shape
    pixels = gt.pixels + noise.pixel_sigma * rng.standard_normal(gt.pixels.shape)
    kept = rng.random(shape) >= noise.dropout
    return ObservedPixels(pixels=pixels, present=gt.visible & kept)
