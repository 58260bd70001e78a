import logging
from functools import partial
from typing import Any, Dict

from langgraph.graph import END, StateGraph

from app.core.errors import IDfRAError, RunAborted
from app.models.run_log import RunLog
from ..base_agent import BaseAgent
from ..state import DesignState
from .context import DesignContext
from .nodes import (carry_forward_node, continue_router, execute_node, initial_plan_node, judge_node, order_node,
                    persist_node, position_node, position_router, replan_node, replan_router)

logger = logging.getLogger(__name__)

# nodes visited per iteration, carry-forward included, with slack
_STEPS_PER_ITERATION = 8


class IDfRAAgent(BaseAgent):
    """Iterative design loop: plan, execute, judge, replan"""

    state_cls = DesignState

    def __init__(self, ctx: DesignContext, config: Dict[str, Any] = None):
        self.ctx = ctx
        super().__init__("IDfRAAgent", config or {})

    def _build_graph(self):
        workflow = StateGraph(DesignState)
        ctx = self.ctx

        # Iteration 0
        workflow.add_node("initial_plan", partial(initial_plan_node, ctx=ctx))

        # Replanner tiers
        workflow.add_node("replan", partial(replan_node, ctx=ctx))
        workflow.add_node("order", partial(order_node, ctx=ctx))
        workflow.add_node("position", partial(position_node, ctx=ctx))
        workflow.add_node("carry_forward", carry_forward_node)

        # Execute, critique, persist
        workflow.add_node("execute", partial(execute_node, ctx=ctx))
        workflow.add_node("judge", partial(judge_node, ctx=ctx))
        workflow.add_node("persist", partial(persist_node, ctx=ctx))

        workflow.set_entry_point("initial_plan")
        workflow.add_edge("initial_plan", "execute")
        workflow.add_conditional_edges(
            "replan",
            replan_router,
            {
                "order": "order",
                "carry_forward": "carry_forward",
            }
        )
        workflow.add_edge("order", "position")
        workflow.add_conditional_edges(
            "position",
            position_router,
            {
                "execute": "execute",
                "carry_forward": "carry_forward",
            }
        )
        workflow.add_edge("carry_forward", "execute")
        workflow.add_edge("execute", "judge")
        workflow.add_edge("judge", "persist")
        workflow.add_conditional_edges(
            "persist",
            continue_router,
            {
                "replan": "replan",
                "done": END,
            }
        )

        self.graph = workflow.compile()

    def _invoke_config(self, initial_state: DesignState) -> Dict[str, Any]:
        return {"recursion_limit": _STEPS_PER_ITERATION * initial_state.total_iterations + 10}


async def run_iterations(ctx: DesignContext) -> RunLog:
    """
    Run every iteration and return the run log.

    Unrecoverable failures persist what exists so far and raise RunAborted
    carrying the partial log.
    """
    ctx.store.write_config(ctx.config)
    agent = IDfRAAgent(ctx)
    initial = DesignState(target_name=ctx.config.target_name, total_iterations=ctx.config.iterations)
    try:
        await agent.run(initial)
    except IDfRAError as e:
        ctx.store.write_transcript(ctx.backend.transcript)
        ctx.store.write_run_log(ctx.log)
        logger.error(f"Run aborted after {len(ctx.log.iterations)} iterations: {e}")
        raise RunAborted(str(e), ctx.log) from e
    logger.info(f"Completed {len(ctx.log.iterations)} iterations in {ctx.store.run_dir}")
    return ctx.log
