import logging
from typing import Any, Dict

from app.agents.state import DesignState
from app.models.rendering import ColorMode
from app.services.assembly.matching import match_blocks
from app.services.assembly.validation import validate_plan
from app.services.rendering.sequence import render_sequence
from app.services.simulation.executor import execute_plan
from ..context import DesignContext

logger = logging.getLogger(__name__)


async def execute_node(state: DesignState, ctx: DesignContext) -> Dict[str, Any]:
    """Simulate the plan's available blocks and render the attempt for the Judge"""
    settings = ctx.settings
    plan = state.plan
    match = match_blocks(plan, ctx.inventory)
    flags = list(state.flags)

    executable = plan
    if not match.complete:
        # unavailable blocks are left out of the scene
        kept = tuple(block for index, block in enumerate(plan.blocks) if index in match.assignments)
        executable = plan.model_copy(update={"blocks": kept})
        flags.append("partial_execution")
        logger.info(f"Iteration {state.iteration}: executing {len(kept)} of {len(plan.blocks)} blocks")

    report = execute_plan(executable, ctx.inventory, settings.sim, seed=settings.run.seed + state.iteration,
                          workspace=settings.workspace)
    frames = render_sequence(report, settings.camera, ColorMode.UNIFORM_GREEN,
                             out_dir=ctx.store.iter_dir(state.iteration))
    violations = [v.message for v in validate_plan(plan, settings.workspace)]
    return {
        "match": match,
        "report": report,
        "frames": frames,
        "violations": violations,
        "flags": flags,
    }
