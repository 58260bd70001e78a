import logging
from typing import List

import numpy as np

from app.core.errors import StagingOverflowError
from app.models.blocks import BlockInventory, Pose
from app.models.simulation import StagedBlock, WorkspaceConfig

logger = logging.getLogger(__name__)


def _outside_region(x: float, y: float, region_half) -> bool:
    return abs(x) > region_half[0] or abs(y) > region_half[1]


def initialize_staging(inventory: BlockInventory, workspace: WorkspaceConfig, seed: int) -> List[StagedBlock]:
    """
    Scatter every inventory unit on the table outside the assembly region.

    Rejection sampling: each unit gets up to max_staging_attempts uniform
    draws and keeps the first one outside the region with every accepted
    centre at least min_spacing away. Units rest flat on the table.
    """
    rng = np.random.default_rng(seed)
    table_hx, table_hy = workspace.table_half
    region_half = workspace.region_half
    spacing = workspace.min_spacing_m

    staged: List[StagedBlock] = []
    centres = np.empty((0, 2))
    units = [(entry_index, unit_index, spec)
             for entry_index, spec in enumerate(inventory.entries)
             for unit_index in range(spec.quantity)]

    for position, (entry_index, unit_index, spec) in enumerate(units):
        accepted = None
        for _ in range(workspace.max_staging_attempts):
            x = float(rng.uniform(-table_hx, table_hx))
            y = float(rng.uniform(-table_hy, table_hy))
            if not _outside_region(x, y, region_half):
                continue
            if len(centres) and np.min(np.hypot(centres[:, 0] - x, centres[:, 1] - y)) < spacing:
                continue
            accepted = (x, y)
            break

        if accepted is None:
            remaining = [f"{spec.descriptor().label()} #{u}" for _, u, spec in units[position:]]
            logger.error(f"Staging overflow after {len(staged)} of {len(units)} units")
            raise StagingOverflowError(remaining)

        yaw = float(rng.uniform(0.0, 360.0))
        staged.append(StagedBlock(
            entry_index=entry_index,
            unit_index=unit_index,
            pose=Pose(position_m=(accepted[0], accepted[1], spec.dims_m[2] / 2), yaw_deg=yaw),
        ))
        centres = np.vstack([centres, accepted])

    logger.debug(f"Staged {len(staged)} units with seed {seed}")
    return staged
