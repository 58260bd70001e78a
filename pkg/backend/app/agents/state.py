from operator import add
from typing import Annotated, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.models.blocks import AssemblyPlan, MatchResult
from app.models.judge import HighLevelPlan, JudgeReport
from app.models.rendering import FrameSequence
from app.models.run_log import IterationRecord
from app.models.simulation import ExecutionReport


class DesignState(BaseModel):
    """Graph state for one design run; per-iteration fields reset after persisting"""
    target_name: str
    iteration: int = 0
    total_iterations: int = 10

    # Replanner tiers
    high_level: Optional[HighLevelPlan] = None
    ordered: Optional[HighLevelPlan] = None
    plan: Optional[AssemblyPlan] = None
    last_plan: Optional[AssemblyPlan] = None
    carried_from: Optional[int] = None

    # Execution and critique
    match: Optional[MatchResult] = None
    report: Optional[ExecutionReport] = None
    frames: Optional[FrameSequence] = None
    violations: List[str] = Field(default_factory=list)
    judge_report: Optional[JudgeReport] = None

    # Completed iterations, appended by the persist node
    records: Annotated[List[IterationRecord], add] = Field(default_factory=list)

    # Error handling
    flags: List[str] = Field(default_factory=list)
    errors: List[str] = Field(default_factory=list)

    model_config = ConfigDict(
        arbitrary_types_allowed=True
    )
