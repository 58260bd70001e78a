import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.errors import EvaluationInputError, PreconditionError
from app.models.blocks import AssemblyPlan, BlockInventory
from app.models.evaluation import FeasibilityStats, TrialOutcome
from app.models.simulation import BlockStatus, ExecutionReport, SimParams, WorkspaceConfig
from app.services.assembly.matching import match_blocks
from app.services.simulation.executor import execute_plan, placement_correct

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 10
FEASIBILITY_CSV_NAME = "feasibility.csv"
FEASIBILITY_CSV_FIELDS = ("design", "trials", "pct_blocks_correct", "pct_assemblies_successful")
MEAN_ROW = "mean"

_MISPLACED = {BlockStatus.TOPPLED, BlockStatus.COLLIDED}


def block_verdicts(plan: AssemblyPlan, report: ExecutionReport) -> Tuple[bool, ...]:
    """Per-block correctness of one execution against the plan's nominal poses"""
    verdicts = []
    for outcome in report.per_block:
        block = plan.blocks[outcome.index]
        verdicts.append(outcome.status not in _MISPLACED and placement_correct(
            outcome.nominal, outcome.actual, outcome.extents_m, block.shape, lying=outcome.rolling_risk))
    return tuple(verdicts)


def aggregate_feasibility(outcomes: Sequence[TrialOutcome], design: str = "") -> FeasibilityStats:
    """Percentages to two decimals: correct placements over all placements, successes over trials"""
    if not outcomes:
        raise EvaluationInputError("no feasibility trials to aggregate")
    placements = sum(len(outcome.blocks_correct) for outcome in outcomes)
    correct = sum(sum(outcome.blocks_correct) for outcome in outcomes)
    successes = sum(1 for outcome in outcomes if outcome.successful)
    return FeasibilityStats(
        design=design,
        pct_blocks_correct=round(100.0 * correct / placements, 2) if placements else 0.0,
        pct_assemblies_successful=round(100.0 * successes / len(outcomes), 2),
        trials=len(outcomes),
        outcomes=tuple(outcomes),
    )


def feasibility_trials(plan: AssemblyPlan, inventory: BlockInventory, params: Optional[SimParams] = None,
                       trials: int = DEFAULT_TRIALS, seed: int = 0,
                       workspace: Optional[WorkspaceConfig] = None, design: str = "") -> FeasibilityStats:
    """Execute the plan once per trial with seed + trial and aggregate the placements"""
    if trials < 1:
        raise EvaluationInputError("trials must be at least 1")
    match = match_blocks(plan, inventory)
    if not match.complete:
        raise PreconditionError("feasibility trials need a plan without missing blocks")

    outcomes = []
    for trial in range(trials):
        report = execute_plan(plan, inventory, params, seed=seed + trial, workspace=workspace)
        outcomes.append(TrialOutcome(trial=trial, seed=seed + trial, blocks_correct=block_verdicts(plan, report)))
    stats = aggregate_feasibility(outcomes, design or plan.target_name)
    logger.info(f"Feasibility of '{stats.design}': {stats.pct_blocks_correct:.2f}% blocks, "
                f"{stats.pct_assemblies_successful:.2f}% assemblies over {trials} trials")
    return stats


def feasibility_table(designs: Sequence[Tuple[str, AssemblyPlan, BlockInventory]],
                      params: Optional[SimParams] = None, trials: int = DEFAULT_TRIALS, seed: int = 0,
                      workspace: Optional[WorkspaceConfig] = None) -> List[FeasibilityStats]:
    """One row per design plus a mean row when there is more than one design"""
    rows = [feasibility_trials(plan, inventory, params, trials, seed, workspace, design=name)
            for name, plan, inventory in designs]
    if len(rows) > 1:
        rows.append(FeasibilityStats(
            design=MEAN_ROW,
            pct_blocks_correct=round(float(np.mean([row.pct_blocks_correct for row in rows])), 2),
            pct_assemblies_successful=round(float(np.mean([row.pct_assemblies_successful for row in rows])), 2),
            trials=trials,
        ))
    return rows


def write_feasibility_csv(rows: Sequence[FeasibilityStats], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(FEASIBILITY_CSV_FIELDS)
        for row in rows:
            writer.writerow([row.design, row.trials, f"{row.pct_blocks_correct:.2f}",
                             f"{row.pct_assemblies_successful:.2f}"])
    logger.info(f"Wrote {len(rows)} feasibility rows to {path}")
    return path
