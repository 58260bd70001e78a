import logging
from typing import List

from app.models.blocks import AssemblyPlan, BlockShape, PlanViolation
from app.models.simulation import WorkspaceConfig
from app.services.simulation.geometry import footprint_polygon

logger = logging.getLogger(__name__)

# tolerances for the table-contact and region tests; LLM coordinates are rounded
_Z_TOL_M = 1e-6
_EDGE_TOL_M = 1e-9


def validate_plan(plan: AssemblyPlan, workspace: WorkspaceConfig) -> List[PlanViolation]:
    """Geometric sanity checks on a parsed plan; an empty list means no violations"""
    violations: List[PlanViolation] = []
    table_hx, table_hy = workspace.table_half
    region_hx, region_hy = workspace.region_half

    for index, block in enumerate(plan.blocks):
        label = block.semantic_name or f"block {index}"
        dx, dy, dz = block.dims_m
        x, y, z = block.pose.position_m

        if abs(x) > table_hx or abs(y) > table_hy:
            violations.append(PlanViolation(
                block_index=index, code="outside_workspace",
                message=f"{label}: centre ({x:g}, {y:g}) outside workspace "
                        f"(|x| <= {table_hx:g}, |y| <= {table_hy:g})"))

        disk = block.shape == BlockShape.CYLINDER
        minx, miny, maxx, maxy = footprint_polygon(x, y, block.pose.yaw_deg, (dx, dy), disk=disk).bounds
        if (minx < -region_hx - _EDGE_TOL_M or maxx > region_hx + _EDGE_TOL_M
                or miny < -region_hy - _EDGE_TOL_M or maxy > region_hy + _EDGE_TOL_M):
            violations.append(PlanViolation(
                block_index=index, code="outside_region",
                message=f"{label}: footprint extends outside the assembly region "
                        f"(|x| <= {region_hx:g}, |y| <= {region_hy:g})"))

        if z < dz / 2 - _Z_TOL_M:
            violations.append(PlanViolation(
                block_index=index, code="interpenetrates_table",
                message=f"{label}: interpenetrates table (z = {z:g} < half height {dz / 2:g})"))

    if violations:
        logger.debug(f"Plan iteration {plan.iteration}: {len(violations)} violations")
    return violations
