import logging
from typing import Any, Dict

from pydantic import ValidationError

from app.agents.state import DesignState
from app.core.errors import ExtractionError, ResponseValidationError
from app.models.blocks import AssemblyPlan, MatchResult
from app.models.gateway import Role
from app.models.judge import JudgeReport
from app.models.rendering import FrameSequence
from app.services.assembly.codec import descriptors_to_document, dump_document, serialize_inventory, serialize_plan
from app.services.gateway.backends import complete_json
from app.services.gateway.messages import attach_animation, text_message
from ..context import DesignContext

logger = logging.getLogger(__name__)


def parse_judge_report(value: Any, match: MatchResult) -> JudgeReport:
    """Schema check plus the rule that missing blocks must be reported"""
    if not isinstance(value, dict):
        raise ResponseValidationError("judge report must be a JSON object", value)
    payload = {key: item for key, item in value.items() if key not in ("flags", "instruction")}
    try:
        report = JudgeReport.model_validate(payload)
    except ValidationError as e:
        raise ResponseValidationError(f"invalid judge report: {e.errors()[0]['msg']}", value) from e
    if match.missing and not report.availability:
        raise ResponseValidationError("missing blocks must be listed under 'availability'", value)
    return report


async def judge(ctx: DesignContext, frames: FrameSequence, plan: AssemblyPlan, match: MatchResult,
                iteration: int) -> JudgeReport:
    """Critique one attempt; semantic names never reach the model"""
    user = ctx.prompts.render(
        "judge_user",
        target_name=ctx.config.target_name,
        inventory_json=serialize_inventory(ctx.inventory),
        missing_json=dump_document(descriptors_to_document(match.missing)),
        plan_json=serialize_plan(plan, strip_names=True),
    )
    req = ctx.request([text_message(Role.SYSTEM, ctx.prompts.render("judge_system")),
                       text_message(Role.USER, user)],
                      ctx.settings.temperatures.judge)
    req = attach_animation(req, frames, ctx.settings.run.max_frames)
    report = await complete_json(ctx.backend, req, f"judge/{iteration}",
                                 lambda value: parse_judge_report(value, match))
    logger.info(f"Judge {iteration}: resembles target {report.semantic_assessment.resembles_target}, "
                f"score {report.semantic_assessment.score_0_10:g}")
    return report


async def judge_node(state: DesignState, ctx: DesignContext) -> Dict[str, Any]:
    try:
        report = await judge(ctx, state.frames, state.plan, state.match, state.iteration)
    except (ExtractionError, ResponseValidationError) as e:
        logger.warning(f"Judge {state.iteration} failed, continuing with empty findings: {e}")
        return {"judge_report": JudgeReport.empty(flag="judge_failed"),
                "flags": state.flags + ["judge_failed"],
                "errors": state.errors + [f"judge: {e}"]}
    return {"judge_report": report}
