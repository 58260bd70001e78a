import json
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from tests.helpers import HOUSE_GOLDEN, HOUSE_INVENTORY, HOUSE_STUB, load_script, make_settings

from app.agents.idfra.agent import run_iterations
from app.agents.idfra.context import DesignContext
from app.agents.idfra.nodes.planning import parse_high_level
from app.agents.idfra.selector import select
from app.core.errors import GatewayError, NoQualifiedDesignError, PreconditionError, RunAborted
from app.models.blocks import BlockInventory
from app.models.judge import SuggestionKind
from app.models.run_log import RunLog
from app.models.simulation import WorkspaceConfig
from app.services.assembly.codec import parse_inventory
from app.services.assembly.validation import validate_plan
from app.services.gateway.backends import ScriptedBackend, create_backend
from app.services.gateway.extraction import extract_json
from app.services.gateway.transcript import Transcript

HOUSE_BLOCKS = load_script()["position/*"]["blocks"]
FLAG = {"name": "flag", "color": "white", "shape": "cylinder", "dims": [0.05, 0.05, 0.01],
        "position": [0.1, 0.1, 0.005], "yaw": 0}
FLAG_JUDGE = dict(load_script()["judge/*"], availability=[{
    "feature": "flag",
    "blocks_involved": [{"shape": "cylinder", "dims": [0.05, 0.05, 0.01]}],
    "quantity_mismatch": 1,
    "instruction": "drop the flag or build it from the small cylinders",
}])


def _text(req) -> str:
    return "\n".join(part.text for message in req.messages for part in message.parts if part.type == "text")


class _Recorder:
    """House script with overrides; keeps every request by tag and can fail one tag"""

    def __init__(self, overrides=None, fail_at=None):
        self.table = ScriptedBackend({**load_script(), **(overrides or {})})
        self.requests = {}
        self.fail_at = fail_at

    async def __call__(self, tag, req):
        self.requests[tag] = req
        if tag == self.fail_at:
            raise GatewayError("connection reset by peer")
        return await self.table.complete(req, tag)


class PipelineTestCase(unittest.IsolatedAsyncioTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.inventory = parse_inventory(HOUSE_INVENTORY.read_text(encoding="utf-8"))

    def tearDown(self):
        self._tmp.cleanup()

    def context(self, backend, root="runs", inventory=None, **settings_args) -> DesignContext:
        settings = make_settings(self.tmp / root, **settings_args)
        return DesignContext.create(settings, "house", inventory or self.inventory, str(HOUSE_INVENTORY), backend)

    async def run_recorded(self, overrides=None, fail_at=None, **settings_args):
        recorder = _Recorder(overrides, fail_at)
        ctx = self.context(ScriptedBackend(recorder), **settings_args)
        log = await run_iterations(ctx)
        return ctx, log, recorder


class TestRunIterations(PipelineTestCase):
    async def test_stub_run_writes_every_artifact(self):
        ctx, log, _ = await self.run_recorded()
        self.assertEqual([record.iteration for record in log.iterations], [0, 1, 2])
        self.assertTrue(all(record.qualified and not record.flags for record in log.iterations))

        run_dir = ctx.store.run_dir
        for name in ("config.json", "run_log.json", "transcript.jsonl"):
            self.assertTrue((run_dir / name).is_file(), name)
        for iteration in range(3):
            directory = run_dir / f"iter_{iteration}"
            for name in ("plan.json", "match.json", "report.json", "judge.json", "attempt.gif", "frames/000.png"):
                self.assertTrue((directory / name).is_file(), f"iter_{iteration}/{name}")
        self.assertEqual(log.record(1).artifacts["plan"], "iter_1/plan.json")
        self.assertEqual(RunLog.load(run_dir / "run_log.json"), log)

        tags = [record.tag for record in ctx.backend.transcript.records]
        self.assertEqual(tags[:8], ["replan/0", "order/0", "position/0", "judge/0",
                                    "replan/1", "order/1", "position/1", "judge/1"])
        self.assertEqual(len(tags), 12)

    async def test_temperatures_follow_the_tier(self):
        _, _, recorder = await self.run_recorded(iterations=2)
        expected = {"replan/1": 0.5, "order/1": 0.5, "position/1": 0.25, "judge/1": 0.4}
        for tag, temperature in expected.items():
            self.assertEqual(recorder.requests[tag].temperature, temperature, tag)

    async def test_judge_never_sees_block_names(self):
        _, _, recorder = await self.run_recorded()
        for tag in ("judge/0", "judge/1", "judge/2"):
            text = _text(recorder.requests[tag])
            for name in ("walls", "door", "roof", "chimney"):
                self.assertNotIn(name, text, f"{tag} mentions {name}")
        self.assertIn("chimney", _text(recorder.requests["position/1"]))

    async def test_tiers_pass_their_output_along(self):
        high_level = json.loads(json.dumps(load_script()["replan/*"]))
        high_level["blocks"][3]["placement"] = "perched on the roof ridge"
        _, _, recorder = await self.run_recorded({"replan/1": high_level})

        self.assertIn("perched on the roof ridge", _text(recorder.requests["order/1"]))
        self.assertIn("read as a house", _text(recorder.requests["replan/1"]))
        history = _text(recorder.requests["replan/2"])
        self.assertIn('"iteration": 0', history)
        self.assertIn('"iteration": 1', history)
        self.assertIn("produce an initial minimal design", _text(recorder.requests["replan/0"]))

    async def test_empty_inventory_is_refused(self):
        with self.assertRaises(RunAborted) as caught:
            await self.run_recorded(inventory=BlockInventory())
        self.assertIsInstance(caught.exception.__cause__, PreconditionError)
        self.assertEqual(caught.exception.run_log.iterations, [])


class TestTierFailures(PipelineTestCase):
    async def test_replan_failure_carries_the_previous_plan(self):
        _, log, recorder = await self.run_recorded({"replan/1": "I would rather not.", "replan/1/retry": "No."})
        record = log.record(1)
        self.assertIn("replan_failed", record.flags)
        self.assertEqual(record.carried_from, 0)
        self.assertEqual(record.plan.blocks, log.record(0).plan.blocks)
        self.assertEqual(record.plan.iteration, 1)
        self.assertNotIn("order/1", recorder.requests)
        self.assertEqual(log.record(2).flags, ())

    async def test_order_failure_keeps_the_replan_order(self):
        _, log, recorder = await self.run_recorded({"order/1": "walls first", "order/1/retry": "walls first"})
        record = log.record(1)
        self.assertEqual(record.flags, ("order_failed",))
        self.assertIsNone(record.carried_from)
        self.assertIn("position/1", recorder.requests)

    async def test_position_failure_carries_the_previous_plan(self):
        _, log, _ = await self.run_recorded({"position/1": "somewhere nice", "position/1/retry": "still nowhere"})
        record = log.record(1)
        self.assertEqual(record.flags, ("position_failed",))
        self.assertEqual(record.carried_from, 0)

    async def test_position_violations_get_one_correction(self):
        outside = [dict(block) for block in HOUSE_BLOCKS]
        outside[0] = dict(outside[0], position=[0.6, 0.0, 0.03])
        _, log, recorder = await self.run_recorded({"position/1": {"blocks": outside},
                                                    "position/1/retry": {"blocks": HOUSE_BLOCKS}})
        self.assertIn("position/1/retry", recorder.requests)
        self.assertIn("outside workspace", _text(recorder.requests["position/1/retry"]))
        self.assertEqual(log.record(1).violations, ())
        self.assertEqual(log.record(1).flags, ())

    async def test_judge_failure_gives_an_empty_report(self):
        _, log, _ = await self.run_recorded({"judge/*": "Looks great!"})
        for record in log.iterations:
            self.assertIn("judge_failed", record.flags)
            self.assertEqual(record.judge.flags, ("judge_failed",))
            self.assertEqual(record.judge.suggestions, ())

    async def test_missing_blocks_are_left_out_of_execution(self):
        _, log, _ = await self.run_recorded({"position/1": {"blocks": HOUSE_BLOCKS + [FLAG]}, "judge/1": FLAG_JUDGE})
        record = log.record(1)
        self.assertIn("partial_execution", record.flags)
        self.assertFalse(record.qualified)
        self.assertEqual(record.missing[0].dims_m, (0.05, 0.05, 0.01))
        self.assertEqual(record.judge.availability[0].feature, "flag")
        self.assertEqual(len(record.plan.blocks), 5)

    async def test_judge_must_report_missing_blocks(self):
        _, log, _ = await self.run_recorded({"position/1": {"blocks": HOUSE_BLOCKS + [FLAG]}})
        self.assertIn("judge_failed", log.record(1).flags)


class TestAborts(PipelineTestCase):
    async def test_gateway_error_aborts_with_the_partial_log(self):
        with self.assertRaises(RunAborted) as caught:
            await self.run_recorded(fail_at="replan/2")
        self.assertEqual(len(caught.exception.run_log.iterations), 2)
        run_dir = next((self.tmp / "runs").iterdir())
        self.assertEqual(len(RunLog.load(run_dir / "run_log.json").iterations), 2)
        self.assertTrue((run_dir / "transcript.jsonl").is_file())

    async def test_replay_miss_aborts(self):
        ctx, _, _ = await self.run_recorded(root="record", iterations=2)
        settings = make_settings(self.tmp / "replay", iterations=3,
                                 transcript=ctx.store.run_dir / "transcript.jsonl")
        replay = DesignContext.create(settings, "house", self.inventory, str(HOUSE_INVENTORY),
                                      create_backend(settings.backend))
        with self.assertRaises(RunAborted) as caught:
            await run_iterations(replay)
        self.assertEqual(len(caught.exception.run_log.iterations), 2)
        self.assertIn("replan/2", str(caught.exception))


class TestReplay(PipelineTestCase):
    async def replay(self, transcript: Path, root: str) -> DesignContext:
        settings = make_settings(self.tmp / root, transcript=transcript)
        ctx = DesignContext.create(settings, "house", self.inventory, str(HOUSE_INVENTORY),
                                   create_backend(settings.backend))
        with mock.patch("socket.socket", side_effect=AssertionError("network used during replay")):
            await run_iterations(ctx)
        return ctx

    async def test_replay_reproduces_the_run(self):
        recording = self.context(ScriptedBackend.from_file(HOUSE_STUB), root="record")
        recorded = await run_iterations(recording)
        transcript = recording.store.run_dir / "transcript.jsonl"

        first = await self.replay(transcript, "replay_a")
        second = await self.replay(transcript, "replay_b")
        self.assertEqual((first.store.run_dir / "run_log.json").read_bytes(),
                         (second.store.run_dir / "run_log.json").read_bytes())
        self.assertEqual(first.log.iterations, recorded.iterations)
        self.assertEqual(first.backend.transcript.dumps(), recording.backend.transcript.dumps())
        for iteration in range(3):
            name = f"iter_{iteration}/attempt.gif"
            self.assertEqual((first.store.run_dir / name).read_bytes(), (recording.store.run_dir / name).read_bytes())


class TestSelection(PipelineTestCase):
    async def test_bracket_over_a_full_run(self):
        ctx, log, recorder = await self.run_recorded()
        selection = await select(ctx, log)
        self.assertEqual(selection.qualified, (0, 1, 2))
        self.assertEqual(selection.byes, ((1, 2),))
        self.assertEqual(selection.match_count, 2)
        self.assertEqual(selection.winner, 2)
        self.assertEqual(RunLog.load(ctx.store.run_dir / "run_log.json").selection, selection)
        self.assertTrue((ctx.store.run_dir / "selection.json").is_file())
        self.assertTrue((ctx.store.iter_dir(0) / "settled.png").is_file())
        self.assertEqual(len(recorder.requests["select/1/1"].messages[0].parts), 3)

    async def test_single_design_needs_no_match(self):
        ctx, log, recorder = await self.run_recorded(iterations=1)
        selection = await select(ctx, log)
        self.assertEqual(selection.winner, 0)
        self.assertEqual(selection.match_count, 0)
        self.assertFalse([tag for tag in recorder.requests if tag.startswith("select/")])

    async def test_no_qualified_design(self):
        overrides = {"position/*": {"blocks": [FLAG]}, "judge/*": FLAG_JUDGE}
        ctx, log, _ = await self.run_recorded(overrides, iterations=2)
        self.assertTrue(all("partial_execution" in record.flags for record in log.iterations))
        with self.assertRaises(NoQualifiedDesignError):
            await select(ctx, log)

class TestGoldenTranscript(PipelineTestCase):
    async def replay_golden(self, root: str, transcript: Path = HOUSE_GOLDEN):
        settings = make_settings(self.tmp / root, iterations=10, transcript=transcript)
        ctx = DesignContext.create(settings, "house", self.inventory, str(HOUSE_INVENTORY),
                                   create_backend(settings.backend))
        with mock.patch("socket.socket", side_effect=AssertionError("network used during replay")):
            log = await run_iterations(ctx)
            selection = await select(ctx, log)
        return ctx, log, selection

    def names(self, plan):
        return [block.semantic_name for block in plan.blocks]

    async def test_ten_dense_iterations_and_a_winner(self):
        ctx, log, selection = await self.replay_golden("golden")
        self.assertEqual([record.iteration for record in log.iterations], list(range(10)))
        self.assertTrue(all(record.qualified and not record.flags for record in log.iterations))
        self.assertEqual(self.names(log.record(0).plan), ["walls", "door", "roof"])
        self.assertTrue(log.record(1).judge.semantic_assessment.resembles_target)
        self.assertEqual(len({tuple(self.names(record.plan)) for record in log.iterations}), 10)

        self.assertEqual(selection.winner, 9)
        self.assertEqual(selection.match_count, 9)
        self.assertEqual(selection.byes, ((2, 9), (3, 9)))
        self.assertEqual(selection.rounds[0][1].winner, 6)
        self.assertFalse(any(match.by_rule for matches in selection.rounds for match in matches))
        self.assertNotIn("select/1/2/retry", [record.tag for record in ctx.backend.transcript.records])

    async def test_roof_first_design_is_built_base_first(self):
        recorded = Transcript.load(HOUSE_GOLDEN)
        proposed = [block["name"] for block in json.loads(recorded.get("replan/1").response)["blocks"]]
        self.assertEqual(proposed[:2], ["roof", "walls"])

        _, log, _ = await self.replay_golden("golden")
        built = self.names(log.record(1).plan)
        self.assertLess(built.index("walls"), built.index("roof"))
        self.assertLess(built.index("roof"), built.index("chimney"))
        self.assertEqual(self.names(log.record(9).plan)[-1], "roof")

    async def test_chimney_is_dropped_after_the_judge_asks(self):
        _, log, _ = await self.replay_golden("golden")
        suggestion, = log.record(1).judge.suggestions
        self.assertEqual(suggestion.kind, SuggestionKind.REMOVE_FEATURE)
        self.assertIn("chimney", suggestion.detail)
        self.assertIn("chimney", self.names(log.record(1).plan))
        self.assertNotIn("chimney", self.names(log.record(2).plan))

    def test_high_level_blocks_name_an_anchor(self):
        recorded = Transcript.load(HOUSE_GOLDEN)
        for iteration in range(10):
            for tier in ("replan", "order"):
                with self.subTest(tag=f"{tier}/{iteration}"):
                    high_level = parse_high_level(extract_json(recorded.get(f"{tier}/{iteration}").response))
                    self.assertTrue(all(block.placement for block in high_level.blocks))

    async def test_positions_stay_inside_the_workspace(self):
        _, log, _ = await self.replay_golden("golden")
        for record in log.iterations:
            self.assertEqual(validate_plan(record.plan, WorkspaceConfig()), [], f"iteration {record.iteration}")
            self.assertFalse(record.violations)

    async def test_replays_are_byte_identical_and_pin_the_digests(self):
        first, _, _ = await self.replay_golden("golden_a")
        second, _, _ = await self.replay_golden("golden_b")
        for name in ("run_log.json", "transcript.jsonl", "selection.json"):
            self.assertEqual((first.store.run_dir / name).read_bytes(),
                             (second.store.run_dir / name).read_bytes(), name)

        pinned = first.store.run_dir / "transcript.jsonl"
        self.assertTrue(all(record.digest for record in Transcript.load(pinned).records))
        strict, _, _ = await self.replay_golden("golden_strict", transcript=pinned)
        self.assertEqual((strict.store.run_dir / "run_log.json").read_bytes(),
                         (first.store.run_dir / "run_log.json").read_bytes())



if __name__ == "__main__":
    unittest.main()
