import logging
from typing import Any, Dict, Literal

from app.agents.state import DesignState
from app.models.run_log import IterationRecord
from ..context import DesignContext

logger = logging.getLogger(__name__)


async def persist_node(state: DesignState, ctx: DesignContext) -> Dict[str, Any]:
    """Write the iteration's artifacts, extend the run log and reset per-iteration state"""
    store = ctx.store
    artifacts = store.write_iteration(state.iteration, state.plan, state.match, state.report, state.judge_report)
    record = IterationRecord(
        iteration=state.iteration,
        plan=state.plan,
        missing=state.match.missing if state.match else (),
        violations=tuple(state.violations),
        stable_fraction=state.report.stable_fraction if state.report else 0.0,
        all_placed=state.report.all_placed if state.report else False,
        judge=state.judge_report,
        flags=tuple(state.flags),
        errors=tuple(state.errors),
        carried_from=state.carried_from,
        artifacts=artifacts,
    )
    ctx.log.iterations.append(record)
    store.write_transcript(ctx.backend.transcript)
    store.write_run_log(ctx.log)
    if state.flags:
        logger.warning(f"Iteration {state.iteration} finished with flags {', '.join(state.flags)}")
    else:
        logger.info(f"Iteration {state.iteration} finished")

    return {
        "records": [record],
        "iteration": state.iteration + 1,
        "last_plan": state.plan,
        "plan": None,
        "high_level": None,
        "ordered": None,
        "match": None,
        "report": None,
        "frames": None,
        "judge_report": None,
        "violations": [],
        "carried_from": None,
        "flags": [],
        "errors": [],
    }


def continue_router(state: DesignState) -> Literal["replan", "done"]:
    return "replan" if state.iteration < state.total_iterations else "done"
