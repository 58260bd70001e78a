"""
Recognisability ranking: the model ranks N candidate labels by similarity
to a rendered assembly; top-1 accuracy, average rank and relative rank
summarise the trials.
"""
import asyncio
import csv
import json
import logging
import random
from collections import defaultdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.agents.idfra.prompts import PromptSet
from app.core.config.settings import Settings, settings as default_settings
from app.core.errors import EvaluationInputError, ExtractionError, ResponseValidationError
from app.models.evaluation import RankMetrics, RankTrial
from app.models.gateway import ChatRequest, Role
from app.services.gateway.backends import ModelBackend, complete_json
from app.services.gateway.messages import attach_images, text_message

logger = logging.getLogger(__name__)

DEFAULT_METHOD = "idfra"
RANK_CSV_NAME = "rank_metrics.csv"
RANK_CSV_FIELDS = ("N", "method", "top1", "avg", "relative")


def load_pool(path: Union[str, Path]) -> List[str]:
    """One label per line; blank lines and '#' comments skipped, duplicates dropped"""
    labels: List[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        label = line.strip()
        if label and not label.startswith("#") and label not in labels:
            labels.append(label)
    return labels


def build_rank_trials(image: Union[str, Path], correct_label: str, pool: Sequence[str], n: int, runs: int,
                      seed: int, method: str = DEFAULT_METHOD) -> List[RankTrial]:
    """
    One trial per run with N-1 distractors sampled without replacement.

    Run r draws from random.Random(seed + r), so every run resamples its
    distractors and candidate order.
    """
    labels = list(dict.fromkeys(pool))
    if correct_label not in labels:
        raise EvaluationInputError(f"pool does not contain '{correct_label}'")
    if n < 1 or len(labels) < n:
        raise EvaluationInputError(f"pool of {len(labels)} labels cannot supply N = {n} candidates")
    if runs < 1:
        raise EvaluationInputError("runs must be at least 1")

    distractor_pool = [label for label in labels if label != correct_label]
    trials = []
    for run in range(runs):
        rng = random.Random(seed + run)
        candidates = rng.sample(distractor_pool, n - 1) + [correct_label]
        rng.shuffle(candidates)
        trials.append(RankTrial(image_path=str(image), correct_label=correct_label,
                                candidates=tuple(candidates), method=method, run=run))
    return trials


def rank_call_tag(trial: RankTrial) -> str:
    label = "-".join(trial.correct_label.split())
    if trial.method == DEFAULT_METHOD:
        return f"rank/{label}/{trial.n}/{trial.run}"
    return f"rank/{trial.method}/{label}/{trial.n}/{trial.run}"


def parse_ranking(value: Any, candidates: Sequence[str]) -> Tuple[str, ...]:
    """Ranked labels mapped back to the candidates' spelling; must be a permutation"""
    if isinstance(value, dict):
        value = value.get("ranking", value.get("objects"))
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        raise ResponseValidationError("ranking must be a JSON array of labels", value)
    canonical = {candidate.casefold(): candidate for candidate in candidates}
    ranking = tuple(canonical.get(item.strip().casefold(), item) for item in value)
    if sorted(ranking) != sorted(candidates):
        raise ResponseValidationError("ranking must list every candidate exactly once", value)
    return ranking


def _rank_request(trial: RankTrial, settings: Settings, prompts: PromptSet) -> ChatRequest:
    prompt = prompts.render("rank", candidates_json=json.dumps(list(trial.candidates)))
    req = ChatRequest(
        model_id=settings.backend.model_id,
        messages=(text_message(Role.USER, prompt),),
        temperature=settings.temperatures.rank,
        max_tokens=settings.backend.max_tokens,
    )
    return attach_images(req, [Path(trial.image_path).read_bytes()])


async def run_rank_trial(backend: ModelBackend, trial: RankTrial, settings: Optional[Settings] = None,
                         prompts: Optional[PromptSet] = None) -> RankTrial:
    """Ask for a ranking; after a failed retry the trial is flagged with rank N"""
    settings = settings or default_settings
    prompts = prompts or PromptSet(settings.run.prompt_overrides)
    req = _rank_request(trial, settings, prompts)
    tag = rank_call_tag(trial)
    try:
        ranking = await complete_json(backend, req, tag, lambda value: parse_ranking(value, trial.candidates))
    except (ExtractionError, ResponseValidationError) as e:
        logger.warning(f"{tag}: no valid ranking, recording rank {trial.n} ({e})")
        return trial.model_copy(update={"rank_of_correct": trial.n, "flagged": True})
    rank = ranking.index(trial.correct_label) + 1
    return RankTrial.model_validate({**trial.model_dump(), "returned_ranking": ranking, "rank_of_correct": rank})


async def run_rank_trials(backend: ModelBackend, trials: Sequence[RankTrial], settings: Optional[Settings] = None,
                          prompts: Optional[PromptSet] = None) -> List[RankTrial]:
    return list(await asyncio.gather(*(run_rank_trial(backend, trial, settings, prompts) for trial in trials)))


def compute_rank_metrics(trials: Sequence[RankTrial]) -> List[RankMetrics]:
    """Metrics per (method, N) over every completed trial in the group"""
    groups: Dict[Tuple[str, int], List[int]] = defaultdict(list)
    for trial in trials:
        if trial.completed:
            groups[(trial.method, trial.n)].append(trial.rank_of_correct)
    if not groups:
        raise EvaluationInputError("no completed rank trials")

    metrics = []
    for (method, n), ranks in sorted(groups.items()):
        ranks_arr = np.asarray(ranks, dtype=float)
        avg_rank = float(ranks_arr.mean())
        metrics.append(RankMetrics(
            method=method,
            n=n,
            trials=len(ranks),
            top1_pct=100.0 * int((ranks_arr == 1).sum()) / len(ranks),
            avg_rank=avg_rank,
            relative_rank_pct=100.0 * avg_rank / n,
        ))
    return metrics


def write_rank_csv(metrics: Sequence[RankMetrics], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(RANK_CSV_FIELDS)
        for row in metrics:
            writer.writerow([row.n, row.method, f"{row.top1_pct:.2f}", f"{row.avg_rank:.3f}",
                             f"{row.relative_rank_pct:.2f}"])
    logger.info(f"Wrote {len(metrics)} rank metric rows to {path}")
    return path
