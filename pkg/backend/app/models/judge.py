from enum import Enum
from typing import Any, Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .blocks import BlockDescriptor, BlockShape, Vec3

INITIAL_INSTRUCTION = "produce an initial minimal design"


class AvailabilityIssue(BaseModel):
    """A design feature that needs blocks the inventory cannot supply"""
    model_config = ConfigDict(frozen=True)

    feature: str
    blocks_involved: Tuple[BlockDescriptor, ...] = Field(min_length=1)
    quantity_mismatch: int = 0
    instruction: str = ""


class StabilityRisk(BaseModel):
    model_config = ConfigDict(frozen=True)

    affected: bool = False
    detail: str = ""


class SemanticAssessment(BaseModel):
    model_config = ConfigDict(frozen=True)

    resembles_target: bool = False
    score_0_10: float = Field(default=0.0, ge=0.0, le=10.0)
    rationale: str = ""


class SuggestionKind(str, Enum):
    ADJUST_PROPORTION = "adjust_proportion"
    ADJUST_POSITION = "adjust_position"
    ADD_FEATURE = "add_feature"
    REMOVE_FEATURE = "remove_feature"


class Suggestion(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: SuggestionKind
    detail: str = ""


class JudgeReport(BaseModel):
    """Four-part critique of one executed design"""
    model_config = ConfigDict(frozen=True)

    availability: Tuple[AvailabilityIssue, ...] = ()
    stability_risk: StabilityRisk = Field(default_factory=StabilityRisk)
    semantic_assessment: SemanticAssessment = Field(default_factory=SemanticAssessment)
    suggestions: Tuple[Suggestion, ...] = ()
    # set by the orchestrator, never by the model
    flags: Tuple[str, ...] = ()
    instruction: str = ""

    @classmethod
    def empty(cls, flag: str = "", instruction: str = "") -> "JudgeReport":
        return cls(flags=(flag,) if flag else (), instruction=instruction)

    def feedback_document(self) -> Dict[str, Any]:
        """What the replanner sees; orchestration flags stay out"""
        doc = self.model_dump(mode="json", exclude={"flags", "instruction"})
        if self.instruction:
            doc["instruction"] = self.instruction
        return doc


class HighLevelBlock(BaseModel):
    """Replan/Order output: a block with a relative placement, no coordinates"""
    model_config = ConfigDict(frozen=True)

    name: str
    color: str = "gray"
    shape: BlockShape
    dims: Vec3
    placement: str = Field(min_length=1)

    @field_validator("shape", mode="before")
    @classmethod
    def _lower_shape(cls, v):
        return v.strip().lower() if isinstance(v, str) else v

    @field_validator("color", mode="before")
    @classmethod
    def _color_text(cls, v):
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(str(c) for c in v) + "]"
        return str(v)

    @field_validator("placement")
    @classmethod
    def _has_anchor(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("placement must describe where the block goes")
        return v.strip()

    @property
    def identity(self) -> Tuple[str, str, Vec3]:
        return self.name.strip().lower(), self.shape.value, tuple(round(d, 6) for d in self.dims)


class HighLevelPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    blocks: Tuple[HighLevelBlock, ...] = Field(min_length=1)

    def to_document(self) -> List[Dict[str, Any]]:
        return [block.model_dump(mode="json") for block in self.blocks]

    def is_permutation_of(self, other: "HighLevelPlan") -> bool:
        return sorted(b.identity for b in self.blocks) == sorted(b.identity for b in other.blocks)
