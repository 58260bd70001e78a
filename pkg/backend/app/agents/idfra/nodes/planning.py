"""
Replanner tiers: Replan (creative high-level design), Order (build
sequence) and Position (coordinates and yaw), plus the iteration-0 pass
and carry-forward when a tier gives up.
"""
import json
import logging
from typing import Any, Dict, Literal, Sequence

from pydantic import ValidationError

from app.agents.state import DesignState
from app.core.errors import ExtractionError, PlanParseError, PreconditionError, ResponseValidationError
from app.models.blocks import AssemblyPlan
from app.models.gateway import Role
from app.models.judge import INITIAL_INSTRUCTION, HighLevelPlan, JudgeReport
from app.services.assembly.codec import parse_plan, plan_to_document, serialize_inventory
from app.services.assembly.validation import validate_plan
from app.services.gateway.backends import RETRY_SUFFIX, complete_json
from app.services.gateway.extraction import extract_json
from app.services.gateway.messages import text_message, with_json_reminder
from ..context import DesignContext

logger = logging.getLogger(__name__)

TIER_ERRORS = (ExtractionError, ResponseValidationError, PlanParseError, ValidationError)


def _dump(value: Any) -> str:
    return json.dumps(value, indent=2, ensure_ascii=False)


def parse_high_level(value: Any) -> HighLevelPlan:
    if isinstance(value, list):
        value = {"blocks": value}
    if not isinstance(value, dict):
        raise ResponseValidationError("high-level plan must be a JSON object with 'blocks'", value)
    try:
        return HighLevelPlan.model_validate({"blocks": value.get("blocks")})
    except ValidationError as e:
        raise ResponseValidationError(f"invalid high-level plan: {e.errors()[0]['msg']}", value) from e


async def replan(ctx: DesignContext, judge_report: JudgeReport, history: Sequence[AssemblyPlan],
                 iteration: int) -> HighLevelPlan:
    """New high-level design from the feedback and every earlier plan"""
    prompt = ctx.prompts.render(
        "replan",
        target_name=ctx.config.target_name,
        inventory_json=serialize_inventory(ctx.inventory),
        feedback_json=_dump(judge_report.feedback_document()),
        history_json=_dump([plan_to_document(plan) for plan in history]),
    )
    req = ctx.request([text_message(Role.USER, prompt)], ctx.settings.temperatures.replan)
    high_level = await complete_json(ctx.backend, req, f"replan/{iteration}", parse_high_level)
    logger.info(f"Replan {iteration}: {len(high_level.blocks)} blocks")
    return high_level


async def order(ctx: DesignContext, high_level: HighLevelPlan, iteration: int) -> HighLevelPlan:
    """Build-order permutation of the high-level plan"""
    prompt = ctx.prompts.render(
        "order",
        target_name=ctx.config.target_name,
        high_level_json=_dump({"blocks": high_level.to_document()}),
    )
    req = ctx.request([text_message(Role.USER, prompt)], ctx.settings.temperatures.order)

    def _permutation(value: Any) -> HighLevelPlan:
        ordered = parse_high_level(value)
        if not ordered.is_permutation_of(high_level):
            raise ResponseValidationError("ordered plan must contain exactly the same blocks as the input", value)
        return ordered

    return await complete_json(ctx.backend, req, f"order/{iteration}", _permutation)


def _position_prompt(ctx: DesignContext, ordered: HighLevelPlan) -> str:
    workspace = ctx.settings.workspace
    region_hx, region_hy = workspace.region_half
    return ctx.prompts.render(
        "position",
        target_name=ctx.config.target_name,
        ordered_json=_dump({"blocks": ordered.to_document()}),
        table_x=workspace.table_size_m[0],
        table_y=workspace.table_size_m[1],
        region_hx=region_hx,
        region_hy=region_hy,
    )


async def position(ctx: DesignContext, ordered: HighLevelPlan, iteration: int) -> AssemblyPlan:
    """
    Explicit coordinates and yaw.

    One retry covers both failure kinds: an unparseable answer gets a
    JSON-only reminder, workspace violations get the violation list. The
    retried plan is kept even if violations remain.
    """
    target = ctx.config.target_name
    req = ctx.request([text_message(Role.USER, _position_prompt(ctx, ordered))],
                      ctx.settings.temperatures.position)
    tag = f"position/{iteration}"

    text = await ctx.backend.complete(req, tag)
    try:
        plan = parse_plan(extract_json(text), target_name=target, iteration=iteration)
    except (ExtractionError, PlanParseError) as e:
        logger.warning(f"{tag}: unusable response ({e})")
        retry = with_json_reminder(req, str(e))
    else:
        violations = validate_plan(plan, ctx.settings.workspace)
        if not violations:
            return plan
        listing = "\n".join(f"- {v.message}" for v in violations)
        logger.warning(f"{tag}: {len(violations)} workspace violations, asking for a correction")
        retry = with_json_reminder(req, ctx.prompts.render("position_correction", violations=listing))

    text = await ctx.backend.complete(retry, f"{tag}{RETRY_SUFFIX}")
    plan = parse_plan(extract_json(text), target_name=target, iteration=iteration)
    remaining = validate_plan(plan, ctx.settings.workspace)
    for violation in remaining:
        logger.warning(f"{tag}: {violation.message}")
    return plan


async def initial_plan(ctx: DesignContext) -> AssemblyPlan:
    """Iteration-0 design: one Replanner pass with empty feedback"""
    if ctx.inventory.total_units == 0:
        raise PreconditionError("inventory is empty")
    feedback = JudgeReport.empty(instruction=INITIAL_INSTRUCTION)
    high_level = await replan(ctx, feedback, [], 0)
    try:
        ordered = await order(ctx, high_level, 0)
    except TIER_ERRORS as e:
        logger.warning(f"Order 0 failed, keeping replan order: {e}")
        ordered = high_level
    return await position(ctx, ordered, 0)


# --- graph nodes -------------------------------------------------------------

async def initial_plan_node(state: DesignState, ctx: DesignContext) -> Dict[str, Any]:
    logger.info(f"Iteration 0: initial design for '{state.target_name}'")
    plan = await initial_plan(ctx)
    return {"plan": plan, "iteration": 0}


async def replan_node(state: DesignState, ctx: DesignContext) -> Dict[str, Any]:
    logger.info(f"Iteration {state.iteration}: replanning")
    history = [record.plan for record in state.records]
    feedback = state.records[-1].judge if state.records else JudgeReport.empty()
    try:
        high_level = await replan(ctx, feedback, history, state.iteration)
    except TIER_ERRORS as e:
        logger.warning(f"Replan {state.iteration} failed, carrying the previous plan forward: {e}")
        return {"high_level": None, "flags": state.flags + ["replan_failed"],
                "errors": state.errors + [f"replan: {e}"]}
    return {"high_level": high_level}


async def order_node(state: DesignState, ctx: DesignContext) -> Dict[str, Any]:
    try:
        ordered = await order(ctx, state.high_level, state.iteration)
    except TIER_ERRORS as e:
        logger.warning(f"Order {state.iteration} failed, keeping replan order: {e}")
        return {"ordered": state.high_level, "flags": state.flags + ["order_failed"],
                "errors": state.errors + [f"order: {e}"]}
    return {"ordered": ordered}


async def position_node(state: DesignState, ctx: DesignContext) -> Dict[str, Any]:
    try:
        plan = await position(ctx, state.ordered, state.iteration)
    except TIER_ERRORS as e:
        logger.warning(f"Position {state.iteration} failed, carrying the previous plan forward: {e}")
        return {"plan": None, "flags": state.flags + ["position_failed"],
                "errors": state.errors + [f"position: {e}"]}
    return {"plan": plan}


async def carry_forward_node(state: DesignState) -> Dict[str, Any]:
    previous = state.last_plan
    logger.info(f"Iteration {state.iteration}: reusing the plan of iteration {previous.iteration}")
    return {"plan": previous.with_iteration(state.iteration), "carried_from": previous.iteration}


def replan_router(state: DesignState) -> Literal["order", "carry_forward"]:
    return "order" if state.high_level is not None else "carry_forward"


def position_router(state: DesignState) -> Literal["execute", "carry_forward"]:
    return "execute" if state.plan is not None else "carry_forward"
