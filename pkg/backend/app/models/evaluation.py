from enum import Enum
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class RankTrial(BaseModel):
    """One recognisability query: image, correct label and N shuffled candidates"""
    model_config = ConfigDict(frozen=True)

    image_path: str
    correct_label: str
    candidates: Tuple[str, ...] = Field(..., min_length=1)
    method: str = "idfra"
    run: int = 0
    returned_ranking: Optional[Tuple[str, ...]] = None
    rank_of_correct: Optional[int] = None
    flagged: bool = False

    @property
    def n(self) -> int:
        return len(self.candidates)

    @property
    def completed(self) -> bool:
        return self.rank_of_correct is not None

    @model_validator(mode="after")
    def _check(self) -> "RankTrial":
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("candidates must be distinct")
        if self.correct_label not in self.candidates:
            raise ValueError("correct label must be among the candidates")
        if self.returned_ranking is not None and sorted(self.returned_ranking) != sorted(self.candidates):
            raise ValueError("returned ranking must be a permutation of the candidates")
        if self.rank_of_correct is not None and not 1 <= self.rank_of_correct <= self.n:
            raise ValueError("rank of correct label must be within [1, N]")
        return self


class RankMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: str
    n: int = Field(..., ge=1)
    trials: int = Field(..., ge=1)
    top1_pct: float = Field(..., ge=0.0, le=100.0)
    avg_rank: float
    relative_rank_pct: float

    @model_validator(mode="after")
    def _check(self) -> "RankMetrics":
        if not 1.0 <= self.avg_rank <= self.n:
            raise ValueError("average rank must be within [1, N]")
        return self


class TrialOutcome(BaseModel):
    """Placement verdicts of one feasibility trial"""
    model_config = ConfigDict(frozen=True)

    trial: int
    seed: int
    blocks_correct: Tuple[bool, ...]

    @property
    def successful(self) -> bool:
        return bool(self.blocks_correct) and all(self.blocks_correct)


class FeasibilityStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    design: str = ""
    pct_blocks_correct: float = Field(..., ge=0.0, le=100.0)
    pct_assemblies_successful: float = Field(..., ge=0.0, le=100.0)
    trials: int = Field(..., ge=1)
    outcomes: Tuple[TrialOutcome, ...] = ()


class Outcome(str, Enum):
    A_WINS = "a_wins"
    B_WINS = "b_wins"
    TIE = "tie"


class VoteRecord(BaseModel):
    """One survey vote; mapping resolves the presented A/B to method labels"""
    model_config = ConfigDict(frozen=True)

    assembly: str
    voter: str
    choice: str
    mapping: Dict[str, str]

    @model_validator(mode="after")
    def _check(self) -> "VoteRecord":
        if self.choice not in ("A", "B"):
            raise ValueError("choice must be A or B")
        if set(self.mapping) != {"A", "B"}:
            raise ValueError("mapping must cover A and B")
        if self.mapping["A"] == self.mapping["B"]:
            raise ValueError("mapping must name two different methods")
        return self

    @property
    def chosen_method(self) -> str:
        return self.mapping[self.choice]


class VoteTally(BaseModel):
    model_config = ConfigDict(frozen=True)

    total: int = 0
    rejects: int = 0
    method_wins: Dict[str, int] = Field(default_factory=dict)
    per_assembly: Dict[str, Dict[str, int]] = Field(default_factory=dict)
    majority_winners: Dict[str, Optional[str]] = Field(default_factory=dict)

    def win_rate(self, method: str) -> Optional[float]:
        if not self.total:
            return None
        return round(100.0 * self.method_wins.get(method, 0) / self.total, 1)

    def win_rate_text(self, method: str) -> str:
        rate = self.win_rate(method)
        return "n/a" if rate is None else f"{rate:.1f}"

    def majority_count(self, method: str) -> int:
        return sum(1 for winner in self.majority_winners.values() if winner == method)
