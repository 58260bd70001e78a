"""
Iterative-improvement scoring: every iteration is compared with all
earlier ones and scores one point per earlier design it beats or ties.

The default comparator is rule based. Missing blocks lose, then the higher
stable fraction wins, then an optional semantic channel decides (recorded
human verdicts or a pairwise model call); without one the pair ties.
"""
import csv
import logging
from pathlib import Path
from typing import Awaitable, Callable, Dict, List, Optional, Protocol, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from app.agents.idfra.prompts import PromptSet  # noqa: E402
from app.core.config.settings import Settings, settings as default_settings  # noqa: E402
from app.core.errors import EvaluationInputError, ResponseValidationError  # noqa: E402
from app.models.blocks import BlockInventory  # noqa: E402
from app.models.evaluation import Outcome  # noqa: E402
from app.models.gateway import ChatRequest, Role  # noqa: E402
from app.models.run_log import IterationRecord, RunLog  # noqa: E402
from app.services.gateway.backends import RETRY_SUFFIX, ModelBackend  # noqa: E402
from app.services.gateway.extraction import extract_choice  # noqa: E402
from app.services.gateway.messages import attach_images, text_message, with_choice_reminder  # noqa: E402
from app.services.rendering.rasterizer import png_bytes  # noqa: E402
from app.services.rendering.sequence import render_plan_settled  # noqa: E402

logger = logging.getLogger(__name__)

STABILITY_TIE_TOL = 1e-9
IMPROVEMENT_CSV_NAME = "improvement.csv"
IMPROVEMENT_PLOT_NAME = "improvement.png"

Comparator = Callable[[IterationRecord, IterationRecord], Awaitable[Outcome]]


class SemanticChannel(Protocol):
    async def __call__(self, a: IterationRecord, b: IterationRecord) -> Optional[Outcome]:
        ...


def compare_designs(a: IterationRecord, b: IterationRecord, semantic: Optional[Outcome] = None) -> Outcome:
    """Completeness, then stability; a semantic verdict only breaks what those leave tied"""
    if a.missing and not b.missing:
        return Outcome.B_WINS
    if b.missing and not a.missing:
        return Outcome.A_WINS
    if a.stable_fraction - b.stable_fraction > STABILITY_TIE_TOL:
        return Outcome.A_WINS
    if b.stable_fraction - a.stable_fraction > STABILITY_TIE_TOL:
        return Outcome.B_WINS
    return semantic or Outcome.TIE


class HumanVerdicts:
    """Recorded semantic verdicts from a CSV of iteration_a,iteration_b,winner"""

    def __init__(self, verdicts: Dict[Tuple[int, int], Outcome]):
        self.verdicts = verdicts

    @classmethod
    def load(cls, path: Union[str, Path]) -> "HumanVerdicts":
        verdicts: Dict[Tuple[int, int], Outcome] = {}
        with open(path, newline="", encoding="utf-8") as handle:
            for line_no, row in enumerate(csv.DictReader(handle), start=2):
                try:
                    a, b = int(row["iteration_a"]), int(row["iteration_b"])
                    winner = row["winner"].strip().lower()
                except (KeyError, TypeError, ValueError, AttributeError):
                    logger.warning(f"{path}:{line_no}: malformed verdict row skipped")
                    continue
                if winner == "tie":
                    outcome = Outcome.TIE
                elif winner == str(a):
                    outcome = Outcome.A_WINS
                elif winner == str(b):
                    outcome = Outcome.B_WINS
                else:
                    logger.warning(f"{path}:{line_no}: winner '{winner}' is neither iteration")
                    continue
                verdicts[(a, b)] = outcome
        return cls(verdicts)

    async def __call__(self, a: IterationRecord, b: IterationRecord) -> Optional[Outcome]:
        outcome = self.verdicts.get((a.iteration, b.iteration))
        if outcome is not None:
            return outcome
        swapped = self.verdicts.get((b.iteration, a.iteration))
        if swapped == Outcome.A_WINS:
            return Outcome.B_WINS
        if swapped == Outcome.B_WINS:
            return Outcome.A_WINS
        return swapped


class ModelVerdicts:
    """Pairwise model call on settled renders, tagged compare/<a>/<b>; unusable answers tie"""

    _OPTIONS = ("A", "B", "TIE")

    def __init__(self, backend: ModelBackend, target_name: str, inventory: BlockInventory,
                 settings: Optional[Settings] = None, prompts: Optional[PromptSet] = None):
        self.backend = backend
        self.target_name = target_name
        self.inventory = inventory
        self.settings = settings or default_settings
        self.prompts = prompts or PromptSet(self.settings.run.prompt_overrides)
        self._renders: Dict[int, bytes] = {}

    def _render(self, record: IterationRecord) -> bytes:
        if record.iteration not in self._renders:
            image = render_plan_settled(record.plan, self.inventory, self.settings.camera, self.settings.sim,
                                        self.settings.workspace)
            self._renders[record.iteration] = png_bytes(image)
        return self._renders[record.iteration]

    async def __call__(self, a: IterationRecord, b: IterationRecord) -> Optional[Outcome]:
        tag = f"compare/{a.iteration}/{b.iteration}"
        req = ChatRequest(
            model_id=self.settings.backend.model_id,
            messages=(text_message(Role.USER, self.prompts.render("compare", target_name=self.target_name)),),
            temperature=self.settings.temperatures.compare,
            max_tokens=self.settings.backend.max_tokens,
            expect_json=False,
        )
        req = attach_images(req, [self._render(a), self._render(b)])
        retry = with_choice_reminder(req, self._OPTIONS)
        for call_tag, attempt in ((tag, req), (f"{tag}{RETRY_SUFFIX}", retry)):
            try:
                choice = extract_choice(await self.backend.complete(attempt, call_tag), self._OPTIONS)
            except ResponseValidationError as e:
                logger.warning(f"{call_tag}: {e}")
                continue
            return {"A": Outcome.A_WINS, "B": Outcome.B_WINS}.get(choice, Outcome.TIE)
        return Outcome.TIE


class RuleComparator:
    """compare_designs with the semantic channel consulted only for ties"""

    def __init__(self, semantic: Optional[SemanticChannel] = None):
        self.semantic = semantic

    async def __call__(self, a: IterationRecord, b: IterationRecord) -> Outcome:
        outcome = compare_designs(a, b)
        if outcome != Outcome.TIE or self.semantic is None:
            return outcome
        return compare_designs(a, b, await self.semantic(a, b))


async def improvement_scores(log: RunLog, comparator: Optional[Comparator] = None) -> List[int]:
    """score(i) = number of earlier iterations j that iteration i beats or ties"""
    if len(log.iterations) < 2:
        raise EvaluationInputError("improvement scoring needs at least 2 iterations")
    comparator = comparator or RuleComparator()
    scores = []
    for later in log.iterations:
        score = 0
        for earlier in log.iterations[:later.iteration]:
            if await comparator(later, earlier) != Outcome.B_WINS:
                score += 1
        scores.append(score)
    logger.info(f"Improvement scores: {scores}")
    return scores


def aggregate_improvement(runs: Sequence[Sequence[int]]) -> Tuple[np.ndarray, np.ndarray]:
    """Per-iteration mean and standard deviation over runs, truncated to the shortest run"""
    if not runs:
        raise EvaluationInputError("no improvement runs to aggregate")
    length = min(len(run) for run in runs)
    if any(len(run) != length for run in runs):
        logger.warning(f"Runs differ in length, aggregating the first {length} iterations")
    matrix = np.asarray([list(run)[:length] for run in runs], dtype=float)
    return matrix.mean(axis=0), matrix.std(axis=0)


def write_improvement_csv(runs: Sequence[Sequence[int]], path: Union[str, Path]) -> Path:
    """iteration,score for one run; several runs add std and one column per run, score being the mean"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        if len(runs) == 1:
            writer.writerow(("iteration", "score"))
            writer.writerows(enumerate(runs[0]))
        else:
            mean, std = aggregate_improvement(runs)
            writer.writerow(["iteration", "score", "std"] + [f"run_{k}" for k in range(len(runs))])
            for iteration in range(len(mean)):
                writer.writerow([iteration, f"{mean[iteration]:.4f}", f"{std[iteration]:.4f}"]
                                + [run[iteration] for run in runs])
    logger.info(f"Wrote improvement scores to {path}")
    return path


def plot_improvement(runs: Sequence[Sequence[int]], path: Union[str, Path]) -> Path:
    """Per-run traces, dashed mean and a shaded one-std band"""
    mean, std = aggregate_improvement(runs)
    iterations = np.arange(len(mean))
    fig, ax = plt.subplots(figsize=(6, 4))
    for run in runs:
        ax.plot(iterations, list(run)[:len(mean)], color="tab:blue", alpha=0.35, linewidth=1)
    ax.plot(iterations, mean, color="black", linestyle="--", linewidth=2, label="mean")
    ax.fill_between(iterations, mean - std, mean + std, color="tab:blue", alpha=0.15, label="±1 std")
    ax.plot(iterations, iterations, color="grey", linestyle=":", linewidth=1, label="upper bound")
    ax.set_xlabel("iteration")
    ax.set_ylabel("cumulative score")
    ax.set_xticks(iterations)
    ax.legend(loc="upper left")
    fig.tight_layout()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info(f"Wrote improvement plot to {path}")
    return path
