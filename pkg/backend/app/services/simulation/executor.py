"""
Sequential pick-and-place execution under the quasi-static stacking model.

Each block is staged, reoriented, perturbed, lowered until it meets
something, settled, and tested for support-polygon stability. Unstable
blocks topple once and the topple propagates to whatever they were holding.
"""
import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from shapely.geometry import Point

from app.core.errors import PreconditionError, StagingOverflowError
from app.models.blocks import (AssemblyPlan, Assignment, BlockInventory, BlockShape, OrientationOffsets,
                               PlannedBlock, Pose, Vec3)
from app.models.simulation import (BlockOutcome, BlockStatus, ExecutionReport, FootprintKind,
                                   FrameRecord, PlacedBlock, SimParams, StabilityVerdict, StagedBlock,
                                   WorkspaceConfig, WorldState)
from app.services.assembly.matching import match_blocks
from app.services.assembly.orientation import orientation_offsets
from .geometry import (MIN_CONTACT_AREA_M2, block_footprint, is_stable, overhang_direction, support_contacts,
                       support_region)
from .staging import initialize_staging

logger = logging.getLogger(__name__)

# yaw error allowed modulo the footprint's rotational symmetry
PLACEMENT_YAW_TOL_DEG = 10.0
PLACEMENT_REL_TOL = 0.25


def _offsets_for(block: PlannedBlock, assignment: Assignment, inventory: BlockInventory) -> OrientationOffsets:
    if block.shape == BlockShape.CYLINDER:
        return OrientationOffsets(pitch_deg=90) if assignment.lying else OrientationOffsets()
    return orientation_offsets(block.dims_m, inventory.entries[assignment.entry_index].dims_m)


def _footprint_kind(block: PlannedBlock, assignment: Assignment) -> FootprintKind:
    if block.shape == BlockShape.CYLINDER and not assignment.lying:
        return FootprintKind.DISK
    return FootprintKind.RECT


def _with_position(pose: Pose, x: float, y: float, z: float) -> Pose:
    return pose.model_copy(update={"position_m": (x, y, z)})


def _overlapping(world: WorldState, placed: PlacedBlock, pose: Pose) -> List[PlacedBlock]:
    footprint = block_footprint(placed, pose)
    return [other for other in world.others(placed.index)
            if footprint.intersection(block_footprint(other)).area > MIN_CONTACT_AREA_M2]


def _rest_height(world: WorldState, placed: PlacedBlock, pose: Pose) -> float:
    """Highest surface under the footprint at or below the candidate bottom face"""
    bottom = pose.z - placed.extents_m[2] / 2
    tol = world.params.contact_tol_m
    rest = 0.0
    for other in _overlapping(world, placed, pose):
        if other.top_z <= bottom + tol:
            rest = max(rest, other.top_z)
    return rest


def _surface_under_point(world: WorldState, index: int, x: float, y: float, ceiling: float) -> float:
    point = Point(x, y)
    surface = 0.0
    for other in world.others(index):
        if other.top_z <= ceiling and block_footprint(other).covers(point):
            surface = max(surface, other.top_z)
    return surface


def _support_ids(world: WorldState, placed: PlacedBlock) -> Tuple[int, ...]:
    return tuple(sorted(index for index, _ in support_contacts(world, placed)))


def _topple(world: WorldState, placed: PlacedBlock) -> PlacedBlock:
    """Lay the block flat, pushed half its largest extent along the overhang"""
    region = support_region(world, placed)
    com = (placed.pose.x, placed.pose.y)
    ux, uy = overhang_direction(region, com)
    longest, middle, shortest = sorted(placed.extents_m, reverse=True)
    x = com[0] + ux * longest / 2
    y = com[1] + uy * longest / 2
    surface = _surface_under_point(world, placed.index, x, y, placed.top_z)
    yaw = math.degrees(math.atan2(uy, ux))

    toppled = placed.model_copy(update={
        "extents_m": (longest, middle, shortest),
        "footprint": FootprintKind.RECT,
        "pose": Pose(position_m=(x, y, surface + shortest / 2), yaw_deg=yaw,
                     roll_deg=placed.pose.roll_deg, pitch_deg=placed.pose.pitch_deg),
        "status": BlockStatus.TOPPLED,
    })
    world.replace(toppled)
    toppled = toppled.model_copy(update={"support": _support_ids(world, toppled)})
    world.replace(toppled)
    logger.debug(f"Block {placed.index} toppled towards ({ux:.3f}, {uy:.3f})")
    return toppled


def _dependents(world: WorldState, index: int) -> List[int]:
    return [other.index for other in world.placed if index in other.support and not other.toppled]


def topple_cascade(world: WorldState, moved: Iterable[int],
                   recheck: Iterable[int] = ()) -> Tuple[WorldState, List[int]]:
    """
    Re-test every block that rested on a moved block until nothing changes.

    Returns the world and the indices that toppled as a consequence. Toppled
    blocks are frozen, so each block moves at most once and the loop ends.
    """
    pending = set(recheck)
    for index in moved:
        pending.update(_dependents(world, index))

    affected: List[int] = []
    while pending:
        index = min(pending)
        pending.discard(index)
        placed = world.find(index)
        if placed is None or placed.toppled:
            continue
        if is_stable(world, placed) == StabilityVerdict.STABLE:
            world.replace(placed.model_copy(update={"support": _support_ids(world, placed)}))
            continue
        _topple(world, placed)
        affected.append(index)
        pending.update(_dependents(world, index))

    if affected:
        logger.debug(f"Cascade toppled blocks {affected}")
    return world, affected


def _descend(world: WorldState, placed: PlacedBlock) -> Tuple[PlacedBlock, List[int]]:
    """Lower the block from above; returns the resting block and any struck blocks"""
    pose = placed.pose
    tol = world.params.contact_tol_m
    bottom = placed.bottom_z
    obstacles = [other for other in _overlapping(world, placed, pose) if other.top_z > bottom + tol]

    if obstacles:
        hit = max(obstacles, key=lambda other: (other.top_z, -other.index))
        dx, dy = pose.x - hit.pose.x, pose.y - hit.pose.y
        norm = math.hypot(dx, dy)
        ux, uy = (dx / norm, dy / norm) if norm > 1e-12 else (1.0, 0.0)
        landed = _with_position(pose, pose.x + ux * tol, pose.y + uy * tol, hit.top_z + placed.extents_m[2] / 2)
        placed = placed.model_copy(update={"pose": landed, "status": BlockStatus.COLLIDED})
        logger.debug(f"Block {placed.index} collided with block {hit.index} during descent")
        return placed, sorted(other.index for other in obstacles)

    rest = _rest_height(world, placed, pose)
    if bottom - rest > tol:
        settled = _with_position(pose, pose.x, pose.y, rest + placed.extents_m[2] / 2)
        placed = placed.model_copy(update={"pose": settled, "status": BlockStatus.SETTLED_LOWER})
        logger.debug(f"Block {placed.index} settled from z={pose.z:.4f} to z={settled.z:.4f}")
    return placed, []


def _snapshot(world: WorldState, event_index: int, caption: str) -> FrameRecord:
    return FrameRecord(event_index=event_index, caption=caption,
                       blocks=tuple(sorted(world.placed, key=lambda placed: placed.index)))


def _caption(index: int, block: PlannedBlock, status: BlockStatus, cascade: Sequence[int]) -> str:
    name = block.semantic_name or block.shape.value
    caption = f"{status.value} block {index}: {name}"
    if cascade:
        caption += f" (knocked over {', '.join(str(i) for i in cascade)})"
    return caption


def _stage(inventory: BlockInventory, workspace: WorkspaceConfig, seed: int) -> Dict[Tuple[int, int], StagedBlock]:
    try:
        return {(s.entry_index, s.unit_index): s for s in initialize_staging(inventory, workspace, seed)}
    except StagingOverflowError as e:
        logger.warning(f"Pick poses unavailable: {e}")
        return {}


def execute_plan(plan: AssemblyPlan, inventory: BlockInventory, params: Optional[SimParams] = None,
                 seed: Optional[int] = None, workspace: Optional[WorkspaceConfig] = None,
                 stage: bool = True) -> ExecutionReport:
    """Execute a fully matched plan block by block and report the outcome"""
    params = params or SimParams()
    workspace = workspace or WorkspaceConfig()
    seed = params.noise.seed if seed is None else seed

    match = match_blocks(plan, inventory)
    if not match.complete:
        missing = ", ".join(d.label() for d in match.missing)
        raise PreconditionError(f"cannot execute plan with missing blocks: {missing}")

    rng = np.random.default_rng(seed)
    staged = _stage(inventory, workspace, seed) if stage else {}
    world = WorldState(table_m=workspace.table_size_m, gravity_mps2=params.gravity_mps2, params=params)
    frames: List[FrameRecord] = [_snapshot(world, 0, "initial")]
    nominal: Dict[int, Pose] = {}
    offsets: Dict[int, OrientationOffsets] = {}

    for index, block in enumerate(plan.blocks):
        assignment = match.assignments[index]
        offsets[index] = _offsets_for(block, assignment, inventory)
        nominal[index] = block.pose.model_copy(update={
            "roll_deg": offsets[index].roll_deg, "pitch_deg": offsets[index].pitch_deg})

        x, y, z = block.pose.position_m
        yaw = block.pose.yaw_deg
        if not params.noise.silent:
            dx, dy = rng.normal(0.0, params.noise.sigma_xy_m, 2)
            yaw += float(rng.normal(0.0, params.noise.sigma_yaw_deg))
            x, y = x + float(dx), y + float(dy)

        placed = PlacedBlock(
            index=index,
            block=block,
            extents_m=assignment.extents_m,
            footprint=_footprint_kind(block, assignment),
            pose=Pose(position_m=(x, y, z), yaw_deg=yaw,
                      roll_deg=offsets[index].roll_deg, pitch_deg=offsets[index].pitch_deg),
        )
        placed, struck = _descend(world, placed)
        world.replace(placed)
        placed = placed.model_copy(update={"support": _support_ids(world, placed)})
        world.replace(placed)

        cascade: List[int] = []
        if is_stable(world, placed) != StabilityVerdict.STABLE:
            placed = _topple(world, placed)
            _, cascade = topple_cascade(world, [index], recheck=struck)
        elif struck:
            _, cascade = topple_cascade(world, [], recheck=struck)

        frames.append(_snapshot(world, index + 1, _caption(index, block, placed.status, cascade)))

    frames.append(_snapshot(world, len(plan.blocks) + 1, "final"))

    per_block: List[BlockOutcome] = []
    for index, block in enumerate(plan.blocks):
        placed = world.find(index)
        assignment = match.assignments[index]
        pick = staged.get((assignment.entry_index, assignment.unit_index))
        per_block.append(BlockOutcome(
            index=index,
            semantic_name=block.semantic_name,
            nominal=nominal[index],
            actual=placed.pose,
            status=placed.status,
            support=placed.support,
            extents_m=placed.extents_m,
            offsets=offsets[index],
            picked_from=pick.pose if pick else None,
            rolling_risk=assignment.lying,
        ))

    n = len(plan.blocks)
    ok = {BlockStatus.PLACED, BlockStatus.SETTLED_LOWER}
    # placed-and-stable only; collided and toppled blocks both count against it
    stable = sum(1 for outcome in per_block if outcome.status in ok)
    report = ExecutionReport(
        target_name=plan.target_name,
        iteration=plan.iteration,
        seed=seed,
        table_m=world.table_m,
        per_block=tuple(per_block),
        stable_fraction=stable / n if n else 1.0,
        all_placed=all(outcome.status in ok for outcome in per_block),
        frames=tuple(frames),
    )
    logger.info(f"Executed '{plan.target_name}' iteration {plan.iteration}: "
                f"stable fraction {report.stable_fraction:.3f}, all placed {report.all_placed}")
    return report


def settle_plan(plan: AssemblyPlan, inventory: BlockInventory, params: Optional[SimParams] = None,
                workspace: Optional[WorkspaceConfig] = None) -> Tuple[PlacedBlock, ...]:
    """Zero-noise settled state of a plan, without staging"""
    params = (params or SimParams()).noiseless()
    return execute_plan(plan, inventory, params, seed=0, workspace=workspace, stage=False).final_blocks


def placement_correct(nominal: Pose, actual: Pose, dims: Vec3, shape: BlockShape = BlockShape.CUBOID,
                      lying: bool = False) -> bool:
    dx, dy, dz = dims
    horizontal = math.hypot(actual.x - nominal.x, actual.y - nominal.y)
    if horizontal > PLACEMENT_REL_TOL * min(dx, dy) + 1e-12:
        return False
    if abs(actual.z - nominal.z) > PLACEMENT_REL_TOL * dz + 1e-12:
        return False
    if actual.roll_deg != nominal.roll_deg or actual.pitch_deg != nominal.pitch_deg:
        return False

    if shape == BlockShape.CYLINDER and not lying:
        return True
    period = 90.0 if abs(dx - dy) <= 1e-9 else 180.0
    error = (actual.yaw_deg - nominal.yaw_deg) % period
    return min(error, period - error) <= PLACEMENT_YAW_TOL_DEG
