"""
Knockout selection over the qualified designs of a run.

Designs with missing blocks are disqualified. The rest meet in a
single-elimination bracket seeded by descending iteration index; an odd
round gives the bye to the highest index present. Each match shows the
model both settled renders and asks for A or B.
"""
import asyncio
import logging
from typing import Dict, List, Tuple

from app.core.errors import NoQualifiedDesignError, ResponseValidationError
from app.models.gateway import Role
from app.models.run_log import MatchRecord, RunLog, SelectionRecord
from app.services.gateway.backends import RETRY_SUFFIX
from app.services.gateway.extraction import extract_choice
from app.services.gateway.messages import attach_images, text_message, with_choice_reminder
from app.services.rendering.rasterizer import png_bytes
from app.services.rendering.sequence import render_plan_settled
from .context import DesignContext

logger = logging.getLogger(__name__)

SELECTOR_OPTIONS = ("A", "B")
SETTLED_NAME = "settled.png"


def pair_round(entrants: List[int]) -> Tuple[List[Tuple[int, int]], List[int]]:
    """Pairs (higher, lower) for one round and the iterations receiving a bye"""
    ordered = sorted(entrants, reverse=True)
    byes = []
    if len(ordered) % 2:
        byes.append(ordered.pop(0))
    pairs = [(ordered[k], ordered[k + 1]) for k in range(0, len(ordered), 2)]
    return pairs, byes


class _SettledRenders:
    """Plan-coloured settled PNG per iteration, rendered once and written next to the iteration"""

    def __init__(self, ctx: DesignContext, log: RunLog):
        self.ctx = ctx
        self.log = log
        self._cache: Dict[int, bytes] = {}

    def __call__(self, iteration: int) -> bytes:
        if iteration not in self._cache:
            settings = self.ctx.settings
            image = render_plan_settled(self.log.record(iteration).plan, self.ctx.inventory, settings.camera,
                                        settings.sim, settings.workspace)
            png = png_bytes(image)
            (self.ctx.store.iter_dir(iteration) / SETTLED_NAME).write_bytes(png)
            self._cache[iteration] = png
        return self._cache[iteration]


async def _play(ctx: DesignContext, renders: _SettledRenders, round_no: int, match_no: int,
                a: int, b: int) -> MatchRecord:
    tag = f"select/{round_no}/{match_no}"
    prompt = ctx.prompts.render("selector", target_name=ctx.config.target_name)
    req = ctx.request([text_message(Role.USER, prompt)], ctx.settings.temperatures.selector, expect_json=False)
    req = attach_images(req, [renders(a), renders(b)])

    retry = with_choice_reminder(req, SELECTOR_OPTIONS)
    attempts = [(tag, req), (f"{tag}{RETRY_SUFFIX}", retry)]
    for call_tag, attempt in attempts:
        text = await ctx.backend.complete(attempt, call_tag)
        try:
            choice = extract_choice(text, SELECTOR_OPTIONS)
        except ResponseValidationError as e:
            logger.warning(f"{call_tag}: {e}")
            continue
        winner = a if choice == "A" else b
        return MatchRecord(round=round_no, match=match_no, call_tag=tag, a=a, b=b, winner=winner)

    logger.warning(f"{tag}: no valid answer, iteration {a} advances by rule")
    return MatchRecord(round=round_no, match=match_no, call_tag=tag, a=a, b=b, winner=a, by_rule=True)


async def select(ctx: DesignContext, log: RunLog) -> SelectionRecord:
    """Run the bracket; writes selection.json and the updated run log"""
    qualified = [record.iteration for record in log.iterations if record.qualified]
    if not qualified:
        ctx.store.write_run_log(log)
        raise NoQualifiedDesignError()

    renders = _SettledRenders(ctx, log)
    entrants = sorted(qualified, reverse=True)
    rounds: List[Tuple[MatchRecord, ...]] = []
    byes: List[Tuple[int, int]] = []
    round_no = 0
    while len(entrants) > 1:
        round_no += 1
        pairs, round_byes = pair_round(entrants)
        byes.extend((round_no, iteration) for iteration in round_byes)
        matches = await asyncio.gather(*(
            _play(ctx, renders, round_no, match_no, a, b) for match_no, (a, b) in enumerate(pairs, start=1)
        ))
        rounds.append(tuple(matches))
        entrants = sorted(round_byes + [match.winner for match in matches], reverse=True)
        logger.info(f"Selection round {round_no}: {len(matches)} matches, {len(entrants)} advance")

    selection = SelectionRecord(
        qualified=tuple(sorted(qualified)),
        rounds=tuple(rounds),
        byes=tuple(byes),
        winner=entrants[0],
    )
    log.selection = selection
    ctx.store.write_selection(selection)
    ctx.store.write_transcript(ctx.backend.transcript)
    ctx.store.write_run_log(log)
    logger.info(f"Selected iteration {selection.winner} out of {len(qualified)} qualified designs")
    return selection
