import logging
from typing import Dict, List, Optional, Tuple

import networkx as nx

from app.models.blocks import (AssemblyPlan, Assignment, BlockInventory, BlockShape, BlockSpec, MatchResult,
                               PlannedBlock, dims_close)
from .orientation import find_permutation

logger = logging.getLogger(__name__)

_LYING = (2, 1, 0)


def resolve_fit(block: PlannedBlock, spec: BlockSpec) -> Optional[Tuple[Tuple[int, int, int], tuple, bool]]:
    """
    How (if at all) an inventory type can realise a planned block.

    Returns (permutation, placed extents, lying) or None. Cuboids match any
    axis permutation; cylinders match upright, or lying when the planned
    diameter/height are the inventory's height/diameter.
    """
    if block.shape != spec.shape:
        return None
    if block.shape == BlockShape.CUBOID:
        perm = find_permutation(block.dims_m, spec.dims_m)
        if perm is None:
            return None
        return perm, tuple(spec.dims_m[a] for a in perm), False

    diameter, height = spec.dims_m[0], spec.dims_m[2]
    planned_d, planned_h = block.dims_m[0], block.dims_m[2]
    if dims_close((planned_d, planned_h), (diameter, height)):
        return (0, 1, 2), tuple(spec.dims_m), False
    if dims_close((planned_d, planned_h), (height, diameter)):
        return _LYING, (height, diameter, diameter), True
    return None


def match_blocks(plan: AssemblyPlan, inventory: BlockInventory) -> MatchResult:
    """Maximum-cardinality assignment of plan blocks to inventory units"""
    n = len(plan.blocks)
    graph = nx.Graph()
    graph.add_nodes_from(range(n))

    # integer node ids keep the matching independent of string hash seeds
    units: Dict[int, Tuple[int, int]] = {}
    next_id = n
    for entry_index, spec in enumerate(inventory.entries):
        for unit_index in range(min(spec.quantity, n)):
            units[next_id] = (entry_index, unit_index)
            graph.add_node(next_id)
            next_id += 1

    fits: Dict[Tuple[int, int], tuple] = {}
    for block_index, block in enumerate(plan.blocks):
        for node, (entry_index, _) in units.items():
            key = (block_index, entry_index)
            if key not in fits:
                fits[key] = resolve_fit(block, inventory.entries[entry_index])
            if fits[key] is not None:
                graph.add_edge(block_index, node)

    matching = nx.bipartite.hopcroft_karp_matching(graph, top_nodes=range(n)) if n else {}

    assignments: Dict[int, Assignment] = {}
    missing_indices: List[int] = []
    for block_index in range(n):
        node = matching.get(block_index)
        if node is None:
            missing_indices.append(block_index)
            continue
        entry_index, unit_index = units[node]
        perm, extents, lying = fits[(block_index, entry_index)]
        assignments[block_index] = Assignment(
            entry_index=entry_index,
            unit_index=unit_index,
            permutation=perm,
            extents_m=extents,
            lying=lying,
        )

    result = MatchResult(
        assignments=assignments,
        missing=tuple(plan.blocks[i].descriptor() for i in missing_indices),
        missing_indices=tuple(missing_indices),
    )
    if missing_indices:
        logger.info(f"Plan '{plan.target_name}' iteration {plan.iteration}: {len(missing_indices)} missing blocks")
    return result


def inventory_for_plan(plan: AssemblyPlan) -> BlockInventory:
    """Inventory holding exactly the plan's blocks, one unit each"""
    return BlockInventory.merged([BlockSpec(shape=block.shape, dims_m=block.dims_m, quantity=1)
                                  for block in plan.blocks])
