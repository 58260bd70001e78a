import csv
import json
import random
import tempfile
import unittest
from pathlib import Path

from tests.helpers import HOUSE_INVENTORY, HOUSE_PLAN, cuboid, make_settings, overhang_plan, plan_of, tower

from app.agents.idfra.context import run_config_from
from app.core.errors import EvaluationInputError, PreconditionError
from app.evaluation import (HumanVerdicts, ModelVerdicts, RuleComparator, aggregate_feasibility, build_rank_trials,
                            compare_designs, compute_rank_metrics, feasibility_table, feasibility_trials,
                            improvement_scores, load_votes, plot_improvement, run_rank_trials, tally_votes,
                            write_improvement_csv, write_rank_csv)
from app.evaluation.recognisability import rank_call_tag
from app.models.blocks import BlockDescriptor, BlockShape
from app.models.evaluation import Outcome, RankTrial, TrialOutcome, VoteRecord
from app.models.rendering import CameraSpec
from app.models.run_log import IterationRecord, RunLog
from app.models.simulation import SimParams
from app.services.assembly.codec import parse_inventory, parse_plan
from app.services.assembly.matching import inventory_for_plan
from app.services.gateway.backends import ScriptedBackend
from app.services.rendering import png_bytes, render_plan_settled

POOL = [f"object {k}" for k in range(300)] + ["house"]
MISSING = (BlockDescriptor(shape=BlockShape.CYLINDER, dims_m=(0.05, 0.05, 0.01)),)


def _trial(rank: int, n: int = 10, method: str = "idfra") -> RankTrial:
    candidates = tuple(f"label {k}" for k in range(n))
    return RankTrial(image_path="house.png", correct_label="label 0", candidates=candidates, method=method,
                     rank_of_correct=rank)


class TestRankMetrics(unittest.TestCase):
    def test_top1_average_and_relative_rank(self):
        trials = [_trial(1)] * 33 + [_trial(6)] * 8 + [_trial(5)] * 4
        metrics, = compute_rank_metrics(trials)
        self.assertEqual((metrics.n, metrics.trials), (10, 45))
        self.assertAlmostEqual(metrics.top1_pct, 73.33, places=2)
        self.assertAlmostEqual(metrics.avg_rank, 2.244, places=3)
        self.assertAlmostEqual(metrics.relative_rank_pct, 22.44, places=2)

    def test_groups_by_method_and_n(self):
        trials = [_trial(1, n=5), _trial(2, n=5), _trial(3, n=10), _trial(1, n=5, method="baseline")]
        metrics = compute_rank_metrics(trials)
        self.assertEqual([(m.method, m.n, m.trials) for m in metrics],
                         [("baseline", 5, 1), ("idfra", 5, 2), ("idfra", 10, 1)])
        with tempfile.TemporaryDirectory() as tmp:
            path = write_rank_csv(metrics, Path(tmp) / "rank_metrics.csv")
            rows = list(csv.reader(path.open(encoding="utf-8")))
        self.assertEqual(rows[0], ["N", "method", "top1", "avg", "relative"])
        self.assertEqual(rows[2], ["5", "idfra", "50.00", "1.500", "30.00"])

    def test_no_completed_trials(self):
        pending = RankTrial(image_path="x.png", correct_label="a", candidates=("a", "b"))
        with self.assertRaises(EvaluationInputError):
            compute_rank_metrics([pending])


class TestRankTrials(unittest.IsolatedAsyncioTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.image = Path(self._tmp.name) / "house.png"
        plan = parse_plan(HOUSE_PLAN.read_text(encoding="utf-8"))
        self.image.write_bytes(png_bytes(render_plan_settled(plan, inventory_for_plan(plan),
                                                             CameraSpec(image_px=(64, 48)))))

    def tearDown(self):
        self._tmp.cleanup()

    def test_candidates_are_seeded_samples(self):
        trials = build_rank_trials(self.image, "house", POOL, n=10, runs=3, seed=4)
        self.assertEqual(trials, build_rank_trials(self.image, "house", POOL, n=10, runs=3, seed=4))
        for trial in trials:
            self.assertEqual(trial.n, 10)
            self.assertIn("house", trial.candidates)
        self.assertNotEqual(trials[0].candidates, trials[1].candidates)
        self.assertEqual(rank_call_tag(trials[2]), "rank/house/10/2")

    def test_large_n_draws_from_the_pool(self):
        trial, = build_rank_trials(self.image, "house", POOL, n=200, runs=1, seed=0)
        self.assertEqual(len(set(trial.candidates)), 200)
        with self.assertRaises(EvaluationInputError):
            build_rank_trials(self.image, "house", POOL[:50] + ["house"], n=200, runs=1, seed=0)
        with self.assertRaises(EvaluationInputError):
            build_rank_trials(self.image, "castle", POOL, n=5, runs=1, seed=0)

    async def test_rankings_resolve_to_the_rank_of_the_target(self):
        trials = build_rank_trials(self.image, "house", POOL, n=5, runs=2, seed=0)
        first = [c for c in trials[0].candidates if c != "house"]
        script = {
            rank_call_tag(trials[0]): json.dumps(["HOUSE"] + first),
            rank_call_tag(trials[1]): {"ranking": [c for c in trials[1].candidates if c != "house"] + ["house"]},
        }
        done = await run_rank_trials(ScriptedBackend(script), trials, make_settings(Path(self._tmp.name)))
        self.assertEqual([trial.rank_of_correct for trial in done], [1, 5])
        self.assertEqual(done[0].returned_ranking[0], "house")
        self.assertFalse(any(trial.flagged for trial in done))

    async def test_invalid_ranking_is_flagged_with_rank_n(self):
        trial, = build_rank_trials(self.image, "house", POOL, n=5, runs=1, seed=0)
        backend = ScriptedBackend({"rank/*": '["house", "house"]'})
        done, = await run_rank_trials(backend, [trial], make_settings(Path(self._tmp.name)))
        self.assertTrue(done.flagged)
        self.assertEqual(done.rank_of_correct, 5)
        self.assertEqual(len(backend.transcript), 2)


class TestFeasibility(unittest.TestCase):
    def test_aggregate_percentages(self):
        outcomes = [TrialOutcome(trial=k, seed=k, blocks_correct=(True,) * 9) for k in range(8)]
        outcomes += [TrialOutcome(trial=k, seed=k, blocks_correct=(True,) * 8 + (False,)) for k in (8, 9)]
        stats = aggregate_feasibility(outcomes, "house")
        self.assertEqual(stats.pct_blocks_correct, 97.78)
        self.assertEqual(stats.pct_assemblies_successful, 80.0)
        with self.assertRaises(EvaluationInputError):
            aggregate_feasibility([])

    def test_noiseless_house_always_succeeds(self):
        plan = parse_plan(HOUSE_PLAN.read_text(encoding="utf-8"))
        inventory = parse_inventory(HOUSE_INVENTORY.read_text(encoding="utf-8"))
        stats = feasibility_trials(plan, inventory, SimParams().noiseless(), trials=3)
        self.assertEqual((stats.pct_blocks_correct, stats.pct_assemblies_successful), (100.0, 100.0))
        self.assertEqual([outcome.seed for outcome in stats.outcomes], [0, 1, 2])

    def test_overhang_fails_and_mean_row(self):
        ledge = overhang_plan()
        rows = feasibility_table([("tower", tower(2), inventory_for_plan(tower(2))),
                                  ("ledge", ledge, inventory_for_plan(ledge))],
                                 SimParams().noiseless(), trials=2)
        self.assertEqual([row.design for row in rows], ["tower", "ledge", "mean"])
        self.assertEqual(rows[1].pct_blocks_correct, 50.0)
        self.assertEqual(rows[1].pct_assemblies_successful, 0.0)
        self.assertEqual(rows[2].pct_blocks_correct, 75.0)

    def test_missing_blocks_are_refused(self):
        with self.assertRaises(PreconditionError):
            feasibility_trials(tower(3), inventory_for_plan(tower(2)))


class ImprovementTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.config = run_config_from(make_settings(self.tmp), "house", str(HOUSE_INVENTORY))

    def tearDown(self):
        self._tmp.cleanup()

    def log_of(self, *runs) -> RunLog:
        """runs: (stable_fraction, missing) per iteration"""
        records = [IterationRecord(iteration=k, plan=plan_of(cuboid(), target="house", iteration=k),
                                   stable_fraction=stable, missing=MISSING if missing else ())
                   for k, (stable, missing) in enumerate(runs)]
        return RunLog(config=self.config, iterations=records)


class TestImprovement(ImprovementTestCase):
    def test_compare_rules(self):
        log = self.log_of((1.0, False), (0.5, False), (1.0, True), (1.0, False))
        a, b, c, d = log.iterations
        self.assertEqual(compare_designs(a, b), Outcome.A_WINS)
        self.assertEqual(compare_designs(c, b), Outcome.B_WINS)
        self.assertEqual(compare_designs(a, d), Outcome.TIE)
        self.assertEqual(compare_designs(a, d, Outcome.B_WINS), Outcome.B_WINS)
        self.assertEqual(compare_designs(a, b, Outcome.B_WINS), Outcome.A_WINS)


class TestImprovementScores(ImprovementTestCase, unittest.IsolatedAsyncioTestCase):
    async def test_monotone_run_scores_the_upper_bound(self):
        log = self.log_of((0.2, False), (0.5, False), (0.75, False), (1.0, False))
        self.assertEqual(await improvement_scores(log), [0, 1, 2, 3])

    async def test_missing_blocks_and_ties(self):
        log = self.log_of((1.0, False), (1.0, True), (1.0, False), (0.5, False))
        self.assertEqual(await improvement_scores(log), [0, 0, 2, 1])

    async def test_human_verdicts_break_ties(self):
        path = self.tmp / "verdicts.csv"
        path.write_text("iteration_a,iteration_b,winner\n1,0,0\n0,2,2\nbad,row,x\n", encoding="utf-8")
        verdicts = HumanVerdicts.load(path)
        self.assertEqual(len(verdicts.verdicts), 2)
        log = self.log_of((1.0, False), (1.0, False), (1.0, False))
        self.assertEqual(await improvement_scores(log, RuleComparator(verdicts)), [0, 0, 2])

    async def test_model_verdicts(self):
        log = self.log_of((1.0, False), (1.0, False))
        backend = ScriptedBackend({"compare/1/0": "B"})
        settings = make_settings(self.tmp)
        channel = ModelVerdicts(backend, "house", inventory_for_plan(log.record(0).plan), settings)
        self.assertEqual(await improvement_scores(log, RuleComparator(channel)), [0, 0])
        self.assertEqual([r.tag for r in backend.transcript.records], ["compare/1/0"])

        tie = ScriptedBackend({"compare/*": "no idea"})
        channel = ModelVerdicts(tie, "house", inventory_for_plan(log.record(0).plan), settings)
        self.assertEqual(await improvement_scores(log, RuleComparator(channel)), [0, 1])

    async def test_needs_two_iterations(self):
        with self.assertRaises(EvaluationInputError):
            await improvement_scores(self.log_of((1.0, False)))


class TestImprovementOutputs(ImprovementTestCase):
    def test_csv_and_plot(self):
        single = write_improvement_csv([[0, 1, 2]], self.tmp / "one.csv")
        self.assertEqual(single.read_text(encoding="utf-8").splitlines(), ["iteration,score", "0,0", "1,1", "2,2"])

        runs = [[0, 1, 2], [0, 0, 2, 3]]
        rows = list(csv.reader((write_improvement_csv(runs, self.tmp / "many.csv")).open(encoding="utf-8")))
        self.assertEqual(rows[0], ["iteration", "score", "std", "run_0", "run_1"])
        self.assertEqual(rows[2], ["1", "0.5000", "0.5000", "1", "0"])
        self.assertEqual(len(rows), 4)

        plot = plot_improvement(runs, self.tmp / "improvement.png")
        self.assertTrue(plot.read_bytes().startswith(b"\x89PNG"))


class TestVotes(unittest.TestCase):
    def test_win_rate(self):
        records = []
        for k in range(1500):
            mapping = {"A": "idfra", "B": "baseline"} if k % 2 else {"A": "baseline", "B": "idfra"}
            wins = k < 813
            choice = next(label for label, method in mapping.items() if (method == "idfra") == wins)
            records.append(VoteRecord(assembly=f"a{k % 5}", voter=f"v{k}", choice=choice, mapping=mapping))
        tally = tally_votes(records)
        self.assertEqual(tally.total, 1500)
        self.assertEqual(tally.method_wins, {"baseline": 687, "idfra": 813})
        self.assertEqual(tally.win_rate_text("idfra"), "54.2")
        self.assertEqual(tally.win_rate_text("baseline"), "45.8")

    def test_empty_tally(self):
        tally = tally_votes([])
        self.assertEqual(tally.win_rate_text("idfra"), "n/a")
        self.assertIsNone(tally.win_rate("idfra"))

    def test_tally_ignores_presentation_order(self):
        rng = random.Random(11)
        methods = ("idfra", "baseline")
        intents = [(f"a{k % 4}", f"v{k}", rng.choice(methods)) for k in range(60)]

        def presented(seed):
            shuffler = random.Random(seed)
            records = []
            for assembly, voter, method in intents:
                first, second = shuffler.sample(methods, 2)
                mapping = {"A": first, "B": second}
                choice = "A" if first == method else "B"
                records.append(VoteRecord(assembly=assembly, voter=voter, choice=choice, mapping=mapping))
            shuffler.shuffle(records)
            return tally_votes(records)

        expected = presented(0)
        self.assertEqual(sum(expected.method_wins.values()), 60)
        for seed in range(1, 101):
            with self.subTest(seed=seed):
                tally = presented(seed)
                self.assertEqual(tally.method_wins, expected.method_wins)
                self.assertEqual(tally.per_assembly, expected.per_assembly)
                self.assertEqual(tally.majority_winners, expected.majority_winners)

    def test_majority_rejects_and_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "votes.csv"
            path.write_text(
                "assembly,voter,choice,mapping\n"
                "house,v1,A,A=idfra;B=baseline\n"
                "house,v2,B,A=baseline;B=idfra\n"
                "house,v3,A,A=baseline;B=idfra\n"
                "bridge,v1,A,A=idfra;B=baseline\n"
                "bridge,v2,A,A=baseline;B=idfra\n"
                "bridge,v3,C,A=idfra;B=baseline\n"
                "bridge,v4,A,A=idfra\n",
                encoding="utf-8",
            )
            tally = tally_votes(load_votes(path))
        self.assertEqual((tally.total, tally.rejects), (5, 2))
        self.assertEqual(tally.per_assembly["house"], {"baseline": 1, "idfra": 2})
        self.assertEqual(tally.majority_winners, {"bridge": None, "house": "idfra"})
        self.assertEqual(tally.majority_count("idfra"), 1)


if __name__ == "__main__":
    unittest.main()
