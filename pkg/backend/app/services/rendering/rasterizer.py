"""
Orthographic painter's-algorithm rasterizer for block scenes.

Blocks are drawn far-to-near by the dot product of their centre with the
eye direction. Only visible faces are filled, flat-shaded by face axis, with
no outlines, so every pixel belongs to exactly one face colour.
"""
import io
import logging
import math
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw
from shapely.geometry import MultiPoint

from app.core.errors import RenderConfigError
from app.models.blocks import NAMED_COLORS, RGB
from app.models.rendering import CameraSpec, ColorMode
from app.models.simulation import FootprintKind, PlacedBlock, WorldState

logger = logging.getLogger(__name__)

UNIFORM_GREEN: RGB = NAMED_COLORS["green"]
SHADE_TOP = 1.0
SHADE_X = 0.8
SHADE_Y = 0.6
CYLINDER_SEGMENTS = 32


class _Projector:
    def __init__(self, camera: CameraSpec):
        if camera.scale_px_per_m <= 0:
            raise RenderConfigError(f"camera scale must be positive, got {camera.scale_px_per_m}")
        eye = np.asarray(camera.view_dir, dtype=float)
        if not np.all(np.isfinite(eye)) or np.linalg.norm(eye) < 1e-12:
            raise RenderConfigError("camera view_dir must be a non-zero vector")
        eye = eye / np.linalg.norm(eye)
        forward = -eye
        up_hint = np.array([0.0, 0.0, 1.0])
        if abs(float(np.dot(forward, up_hint))) > 1 - 1e-9:
            up_hint = np.array([0.0, 1.0, 0.0])
        right = np.cross(forward, up_hint)
        right /= np.linalg.norm(right)

        self.eye = eye
        self.right = right
        self.up = np.cross(right, forward)
        self.scale = camera.scale_px_per_m
        self.target = np.asarray(camera.target_m, dtype=float)
        self.cx = camera.image_px[0] / 2
        self.cy = camera.image_px[1] / 2

    def __call__(self, points: np.ndarray) -> List[Tuple[float, float]]:
        rel = np.atleast_2d(points) - self.target
        xs = self.cx + self.scale * rel @ self.right
        ys = self.cy - self.scale * rel @ self.up
        return [(float(x), float(y)) for x, y in zip(xs, ys)]

    def depth(self, point: Sequence[float]) -> float:
        return float(np.dot(np.asarray(point, dtype=float), self.eye))


def _shade(color: RGB, factor: float) -> RGB:
    return tuple(int(round(c * factor)) for c in color)


def _block_color(placed: PlacedBlock, mode: ColorMode) -> RGB:
    return UNIFORM_GREEN if mode == ColorMode.UNIFORM_GREEN else placed.block.rgb


def _local_axes(yaw_deg: float) -> Tuple[np.ndarray, np.ndarray]:
    theta = math.radians(yaw_deg)
    ax = np.array([math.cos(theta), math.sin(theta), 0.0])
    ay = np.array([-math.sin(theta), math.cos(theta), 0.0])
    return ax, ay


def _cuboid_faces(placed: PlacedBlock, project: _Projector) -> Iterable[Tuple[List[Tuple[float, float]], float]]:
    center = np.asarray(placed.pose.position_m, dtype=float)
    hx, hy, hz = (e / 2 for e in placed.extents_m)
    ax, ay = _local_axes(placed.pose.yaw_deg)
    az = np.array([0.0, 0.0, 1.0])

    def quad(normal, half, u, hu, v, hv):
        c = center + normal * half
        return np.array([c - u * hu - v * hv, c + u * hu - v * hv, c + u * hu + v * hv, c - u * hu + v * hv])

    faces = []
    for sign in (1.0, -1.0):
        faces.append((sign * ax, quad(sign * ax, hx, ay, hy, az, hz), SHADE_X))
        faces.append((sign * ay, quad(sign * ay, hy, ax, hx, az, hz), SHADE_Y))
    faces.append((az, quad(az, hz, ax, hx, ay, hy), SHADE_TOP))

    for normal, corners, shade in faces:
        if float(np.dot(normal, project.eye)) > 1e-9:
            yield project(corners), shade


def _cylinder_faces(placed: PlacedBlock, project: _Projector) -> Iterable[Tuple[List[Tuple[float, float]], float]]:
    x, y, z = placed.pose.position_m
    radius = placed.extents_m[0] / 2
    half = placed.extents_m[2] / 2
    angles = np.linspace(0.0, 2 * math.pi, CYLINDER_SEGMENTS, endpoint=False)
    ring = np.stack([x + radius * np.cos(angles), y + radius * np.sin(angles)], axis=1)
    top = np.column_stack([ring, np.full(CYLINDER_SEGMENTS, z + half)])
    bottom = np.column_stack([ring, np.full(CYLINDER_SEGMENTS, z - half)])

    hull = MultiPoint(project(np.vstack([top, bottom]))).convex_hull
    if hull.geom_type == "Polygon":
        yield list(hull.exterior.coords)[:-1], SHADE_X
    if project.eye[2] > 1e-9:
        yield project(top), SHADE_TOP


def _draw_block(draw: ImageDraw.ImageDraw, placed: PlacedBlock, project: _Projector, mode: ColorMode) -> None:
    color = _block_color(placed, mode)
    faces = _cylinder_faces if placed.footprint == FootprintKind.DISK else _cuboid_faces
    for polygon, shade in faces(placed, project):
        draw.polygon(polygon, fill=_shade(color, shade))


def render_blocks(blocks: Sequence[PlacedBlock], table_m: Tuple[float, float], camera: CameraSpec,
                  color_mode: ColorMode = ColorMode.UNIFORM_GREEN) -> Image.Image:
    project = _Projector(camera)
    image = Image.new("RGB", tuple(camera.image_px), tuple(camera.background))
    draw = ImageDraw.Draw(image)

    hx, hy = table_m[0] / 2, table_m[1] / 2
    table = np.array([[-hx, -hy, 0.0], [hx, -hy, 0.0], [hx, hy, 0.0], [-hx, hy, 0.0]])
    draw.polygon(project(table), fill=tuple(camera.table_color))

    ordered = sorted(blocks, key=lambda placed: (project.depth(placed.pose.position_m), placed.index))
    for placed in ordered:
        _draw_block(draw, placed, project, color_mode)
    return image


def render_world(world: WorldState, camera: CameraSpec,
                 color_mode: ColorMode = ColorMode.UNIFORM_GREEN) -> Image.Image:
    """Table and placed blocks as seen by the camera"""
    return render_blocks(world.placed, world.table_m, camera, color_mode)


def png_bytes(image: Image.Image) -> bytes:
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()
