from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .blocks import AssemblyPlan, BlockDescriptor
from .judge import JudgeReport
from .rendering import CameraSpec
from .simulation import SimParams, WorkspaceConfig


class RunConfig(BaseModel):
    """Everything a run was started with; written to config.json, never a credential"""
    model_config = ConfigDict(frozen=True)

    target_name: str
    inventory_path: str
    iterations: int = Field(default=10, ge=1)
    seed: int = 0
    temperatures: Dict[str, float] = Field(default_factory=dict)
    max_frames: int = 12
    prompt_overrides: Dict[str, str] = Field(default_factory=dict)
    backend_mode: str = "live"
    model_id: str = ""
    max_tokens: int = 4096
    sim: SimParams = Field(default_factory=SimParams)
    workspace: WorkspaceConfig = Field(default_factory=WorkspaceConfig)
    camera: CameraSpec = Field(default_factory=CameraSpec)

    @model_validator(mode="after")
    def _check_temperatures(self) -> "RunConfig":
        for module, value in self.temperatures.items():
            if not 0.0 <= value <= 2.0:
                raise ValueError(f"temperature for {module} must be within [0, 2]")
        return self


class IterationRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    iteration: int
    plan: AssemblyPlan
    missing: Tuple[BlockDescriptor, ...] = ()
    violations: Tuple[str, ...] = ()
    stable_fraction: float = 0.0
    all_placed: bool = False
    judge: JudgeReport = Field(default_factory=JudgeReport)
    flags: Tuple[str, ...] = ()
    errors: Tuple[str, ...] = ()
    carried_from: Optional[int] = None
    # run-directory relative paths
    artifacts: Dict[str, str] = Field(default_factory=dict)

    @property
    def qualified(self) -> bool:
        return not self.missing


class MatchRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    round: int
    match: int
    call_tag: str
    a: int
    b: int
    winner: int
    by_rule: bool = False


class SelectionRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    qualified: Tuple[int, ...] = ()
    rounds: Tuple[Tuple[MatchRecord, ...], ...] = ()
    byes: Tuple[Tuple[int, int], ...] = ()  # (round, iteration)
    winner: Optional[int] = None

    @property
    def match_count(self) -> int:
        return sum(len(r) for r in self.rounds)

    @model_validator(mode="after")
    def _winner_qualified(self) -> "SelectionRecord":
        if self.winner is not None and self.winner not in self.qualified:
            raise ValueError("winner must be a qualified design")
        return self


class RunLog(BaseModel):
    """Full record of a run; no wall-clock fields so replays compare byte for byte"""

    config: RunConfig
    iterations: List[IterationRecord] = Field(default_factory=list)
    selection: Optional[SelectionRecord] = None

    @model_validator(mode="after")
    def _dense(self) -> "RunLog":
        for expected, record in enumerate(self.iterations):
            if record.iteration != expected:
                raise ValueError(f"iteration records must be dense, found {record.iteration} at {expected}")
        return self

    def record(self, iteration: int) -> IterationRecord:
        return self.iterations[iteration]

    def plans(self) -> List[AssemblyPlan]:
        return [record.plan for record in self.iterations]

    @classmethod
    def load(cls, path: Path) -> "RunLog":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))
