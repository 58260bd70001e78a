"""
Footprint and support-polygon geometry on top of shapely.

Footprints are yaw-rotated rectangles, except upright cylinders which use a
32-gon disk. Support regions are convex hulls of footprint/top-face overlaps.
"""
import math
from typing import List, Optional, Sequence, Tuple

from shapely import affinity
from shapely.geometry import Point, Polygon, box
from shapely.geometry.base import BaseGeometry
from shapely.ops import unary_union

from app.models.blocks import Pose, Vec3
from app.models.simulation import TABLE_SUPPORT, FootprintKind, PlacedBlock, StabilityVerdict, WorldState

DISK_SEGMENTS = 32
# overlaps thinner than this are edge contacts, not support
MIN_CONTACT_AREA_M2 = 1e-10


def footprint_polygon(x: float, y: float, yaw_deg: float, extents_xy: Tuple[float, float],
                      disk: bool = False) -> Polygon:
    if disk:
        return Point(x, y).buffer(extents_xy[0] / 2, quad_segs=DISK_SEGMENTS // 4)
    hx, hy = extents_xy[0] / 2, extents_xy[1] / 2
    rect = box(x - hx, y - hy, x + hx, y + hy)
    if yaw_deg:
        rect = affinity.rotate(rect, yaw_deg, origin=(x, y))
    return rect


def block_footprint(placed: PlacedBlock, pose: Optional[Pose] = None) -> Polygon:
    pose = pose or placed.pose
    return footprint_polygon(pose.x, pose.y, pose.yaw_deg, placed.extents_m[:2],
                             disk=placed.footprint == FootprintKind.DISK)


def table_polygon(world: WorldState) -> Polygon:
    hx, hy = world.table_m[0] / 2, world.table_m[1] / 2
    return box(-hx, -hy, hx, hy)


def support_contacts(world: WorldState, placed: PlacedBlock,
                     pose: Optional[Pose] = None) -> List[Tuple[int, BaseGeometry]]:
    """Supporters whose top face meets the candidate bottom face, with overlap regions"""
    pose = pose or placed.pose
    tol = world.params.contact_tol_m
    bottom = pose.z - placed.extents_m[2] / 2
    footprint = block_footprint(placed, pose)

    contacts: List[Tuple[int, BaseGeometry]] = []
    if abs(bottom) <= tol:
        overlap = footprint.intersection(table_polygon(world))
        if overlap.area > MIN_CONTACT_AREA_M2:
            contacts.append((TABLE_SUPPORT, overlap))
    for other in world.others(placed.index):
        if abs(other.top_z - bottom) > tol:
            continue
        overlap = footprint.intersection(block_footprint(other))
        if overlap.area > MIN_CONTACT_AREA_M2:
            contacts.append((other.index, overlap))
    return contacts


def hull_of(regions: Sequence[BaseGeometry]) -> Polygon:
    if not regions:
        return Polygon()
    return unary_union(list(regions)).convex_hull


def support_region(world: WorldState, placed: PlacedBlock, pose: Optional[Pose] = None) -> Polygon:
    """Convex hull of all contact regions under the block; empty when nothing touches"""
    return hull_of([region for _, region in support_contacts(world, placed, pose)])


def stability_of(region: BaseGeometry, com_xy: Tuple[float, float], margin: float) -> StabilityVerdict:
    if region.is_empty:
        return StabilityVerdict.UNSUPPORTED
    eroded = region.buffer(-margin, join_style="mitre") if margin > 0 else region
    if not eroded.is_empty and eroded.contains(Point(com_xy)):
        return StabilityVerdict.STABLE
    return StabilityVerdict.UNSTABLE


def is_stable(world: WorldState, placed: PlacedBlock, pose: Optional[Pose] = None) -> StabilityVerdict:
    """COM projection strictly inside the support hull eroded by the stability margin"""
    pose = pose or placed.pose
    region = support_region(world, placed, pose)
    return stability_of(region, (pose.x, pose.y), world.params.stability_margin_m)


def overhang_direction(region: BaseGeometry, com_xy: Tuple[float, float]) -> Tuple[float, float]:
    """Unit vector from the support centroid towards the COM; +x when undefined"""
    if region.is_empty:
        return 1.0, 0.0
    centroid = region.centroid
    dx, dy = com_xy[0] - centroid.x, com_xy[1] - centroid.y
    norm = math.hypot(dx, dy)
    if norm < 1e-12:
        return 1.0, 0.0
    return dx / norm, dy / norm


def extents_after_yaw(extents: Vec3, yaw_deg: float) -> Tuple[float, float]:
    """Axis-aligned half-size of a yawed rectangle footprint"""
    theta = math.radians(yaw_deg)
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    return (extents[0] * c + extents[1] * s) / 2, (extents[0] * s + extents[1] * c) / 2
