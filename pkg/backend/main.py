"""
idfra command line.

    python main.py run house assets/blocks/house.json --stub assets/scripts/house_stub.json
    python main.py exec assets/blocks/house_plan.json
    python main.py eval tally votes.csv

Exit codes: 0 success, 1 error, 2 no qualified design, 64 usage error.
"""
import asyncio
import csv
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import typer
from rich.console import Console
from rich.table import Table

from app.agents.idfra import DesignContext, run_iterations, select
from app.core.config import Settings, load_settings
from app.core.errors import IDfRAError, NoQualifiedDesignError
from app.core.orchestration.run_store import report_document
from app.evaluation import (HumanVerdicts, ModelVerdicts, RuleComparator, build_rank_trials, compute_rank_metrics,
                            feasibility_table, improvement_scores, load_pool, load_votes, plot_improvement,
                            run_rank_trials, tally_votes, write_feasibility_csv, write_improvement_csv,
                            write_rank_csv)
from app.evaluation.feasibility import FEASIBILITY_CSV_NAME
from app.evaluation.improvement import IMPROVEMENT_CSV_NAME, IMPROVEMENT_PLOT_NAME
from app.evaluation.recognisability import RANK_CSV_NAME
from app.models.blocks import AssemblyPlan, BlockInventory
from app.models.rendering import ColorMode, Projection
from app.models.run_log import RunLog
from app.services.assembly import inventory_for_plan, match_blocks, parse_inventory, parse_plan, validate_plan
from app.services.assembly.codec import dump_document
from app.services.gateway.backends import create_backend
from app.services.gateway.transcript import TRANSCRIPT_NAME
from app.services.rendering.sequence import render_plan_settled, render_sequence
from app.services.simulation.executor import execute_plan

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_QUALIFIED = 2
EXIT_USAGE = 64

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)
console = Console()
err_console = Console(stderr=True)

app = typer.Typer(add_completion=False, no_args_is_help=True, pretty_exceptions_enable=False,
                  help="Iterative design for robotic assembly")
eval_app = typer.Typer(no_args_is_help=True, help="Recognisability, feasibility, improvement and vote evaluations")
app.add_typer(eval_app, name="eval")

ConfigOption = typer.Option(None, "--config", help="TOML config file (default: ./idfra.toml if present)")
SeedOption = typer.Option(None, "--seed", help="Base seed; overrides the configured run seed")
ReplayOption = typer.Option(None, "--replay", help="Answer model calls from this transcript")
StubOption = typer.Option(None, "--stub", help="Answer model calls from this JSON script")


@app.callback()
def _configure(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging")):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def _settings(config: Optional[Path], seed: Optional[int] = None, replay: Optional[Path] = None,
              stub: Optional[Path] = None, **run: Any) -> Settings:
    """Flags win over env, env over the config file"""
    if replay and stub:
        raise click.UsageError("--replay and --stub are mutually exclusive")
    overrides: Dict[str, Any] = {}
    run_overrides = {key: value for key, value in run.items() if value is not None}
    if seed is not None:
        run_overrides["seed"] = seed
    if run_overrides:
        overrides["run"] = run_overrides
    if replay:
        overrides["backend"] = {"mode": "replay", "transcript_path": replay}
    elif stub:
        overrides["backend"] = {"mode": "stub", "script_path": stub}
    return load_settings(config, **overrides)


def _read_plan(path: Path) -> AssemblyPlan:
    return parse_plan(path.read_text(encoding="utf-8"), target_name=None)


def _read_inventory(path: Optional[Path], plan: Optional[AssemblyPlan] = None) -> BlockInventory:
    if path is None:
        return inventory_for_plan(plan)
    return parse_inventory(path.read_text(encoding="utf-8"))


# --- run -----------------------------------------------------------------------

async def _run(cfg: Settings, target: str, inventory: BlockInventory, inventory_path: Path,
               run_id: Optional[str]):
    backend = create_backend(cfg.backend)
    try:
        ctx = DesignContext.create(cfg, target, inventory, str(inventory_path), backend, run_id)
        log = await run_iterations(ctx)
        return ctx, await select(ctx, log)
    finally:
        await backend.aclose()


@app.command("run")
def cmd_run(
    target: str = typer.Argument(..., help="Target structure name, e.g. house"),
    inventory_path: Path = typer.Argument(..., help="Inventory JSON"),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    replay: Optional[Path] = ReplayOption,
    stub: Optional[Path] = StubOption,
    iterations: Optional[int] = typer.Option(None, "--iterations", "-n", help="Design iterations"),
    runs_root: Optional[Path] = typer.Option(None, "--runs-root", help="Directory holding run directories"),
    run_id: Optional[str] = typer.Option(None, "--run-id", help="Run directory name"),
) -> int:
    """Run the design loop and knockout selection"""
    cfg = _settings(config, seed, replay, stub, iterations=iterations, runs_root=runs_root)
    cfg.check_backend()
    inventory = parse_inventory(inventory_path.read_text(encoding="utf-8"))
    ctx, selection = asyncio.run(_run(cfg, target, inventory, inventory_path, run_id))

    table = Table(title=f"{target}: {len(ctx.log.iterations)} iterations")
    for column in ("iteration", "missing", "stable", "flags", ""):
        table.add_column(column)
    for record in ctx.log.iterations:
        marker = "winner" if record.iteration == selection.winner else ""
        table.add_row(str(record.iteration), str(len(record.missing)), f"{record.stable_fraction:.2f}",
                      ", ".join(record.flags), marker)
    console.print(table)
    console.print(f"winner: iteration {selection.winner}")
    console.print(f"run directory: {ctx.store.run_dir}")
    return EXIT_OK


# --- exec / render / validate --------------------------------------------------

@app.command("exec")
def cmd_exec(
    plan_path: Path = typer.Argument(..., help="Plan JSON"),
    inventory_path: Optional[Path] = typer.Option(None, "--inventory", help="Inventory JSON (default: plan blocks)"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory (default: <plan>_exec)"),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
) -> int:
    """Execute a plan: report.json, frames/ and attempt.gif"""
    cfg = _settings(config, seed)
    plan = _read_plan(plan_path)
    inventory = _read_inventory(inventory_path, plan)
    out = out or plan_path.with_name(f"{plan_path.stem}_exec")
    out.mkdir(parents=True, exist_ok=True)

    report = execute_plan(plan, inventory, cfg.sim, seed=cfg.run.seed, workspace=cfg.workspace)
    (out / "report.json").write_text(dump_document(report_document(report)), encoding="utf-8")
    render_sequence(report, cfg.camera, ColorMode.UNIFORM_GREEN, out_dir=out)

    table = Table(title=f"{plan.target_name}: stable fraction {report.stable_fraction:.3f}")
    for column in ("block", "name", "status", "support"):
        table.add_column(column)
    for outcome in report.per_block:
        table.add_row(str(outcome.index), outcome.semantic_name, outcome.status.value,
                      ", ".join(str(s) for s in outcome.support))
    console.print(table)
    console.print(f"written to {out}")
    return EXIT_OK


@app.command("render")
def cmd_render(
    plan_path: Path = typer.Argument(..., help="Plan JSON"),
    inventory_path: Optional[Path] = typer.Option(None, "--inventory", help="Inventory JSON (default: plan blocks)"),
    out: Optional[Path] = typer.Option(None, "--out", help="PNG path (default: <plan>.png)"),
    projection: Optional[Projection] = typer.Option(None, "--projection", help="Camera projection"),
    config: Optional[Path] = ConfigOption,
) -> int:
    """Settled, plan-coloured still of a plan"""
    cfg = _settings(config)
    plan = _read_plan(plan_path)
    camera = cfg.camera
    if projection is not None and projection != camera.projection:
        camera = camera.model_validate({**camera.model_dump(exclude={"view_dir"}), "projection": projection})
    image = render_plan_settled(plan, _read_inventory(inventory_path, plan), camera, cfg.sim, cfg.workspace)
    out = out or plan_path.with_suffix(".png")
    out.parent.mkdir(parents=True, exist_ok=True)
    image.save(out, format="PNG")
    console.print(f"written to {out}")
    return EXIT_OK


@app.command("validate")
def cmd_validate(
    plan_path: Path = typer.Argument(..., help="Plan JSON"),
    inventory_path: Path = typer.Argument(..., help="Inventory JSON"),
    config: Optional[Path] = ConfigOption,
) -> int:
    """Match a plan against an inventory and check the workspace; exit 0 only when both pass"""
    cfg = _settings(config)
    plan = _read_plan(plan_path)
    match = match_blocks(plan, _read_inventory(inventory_path))
    violations = validate_plan(plan, cfg.workspace)

    console.print(f"matched {len(match.assignments)} of {len(plan.blocks)} blocks")
    for descriptor in match.missing:
        console.print(f"missing: {descriptor.label()}")
    for violation in violations:
        console.print(f"violation: {violation.message}")
    return EXIT_OK if match.complete and not violations else EXIT_ERROR


# --- eval ----------------------------------------------------------------------

@eval_app.command("rank")
def cmd_eval_rank(
    image: Path = typer.Argument(..., help="Rendered assembly PNG"),
    label: str = typer.Option(..., "--label", help="Correct label"),
    n: List[int] = typer.Option([5, 10, 15, 20], "--n", help="List lengths; repeat for several"),
    runs: int = typer.Option(3, "--runs", help="Trials per list length"),
    method: str = typer.Option("idfra", "--method", help="Method label for the metrics table"),
    pool: Optional[Path] = typer.Option(None, "--pool", help="Object pool file (default: configured pool)"),
    out: Path = typer.Option(Path("eval"), "--out", help="Output directory"),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    replay: Optional[Path] = ReplayOption,
    stub: Optional[Path] = StubOption,
) -> int:
    """Rank candidate labels against a render; writes rank_metrics.csv"""
    cfg = _settings(config, seed, replay, stub)
    cfg.check_backend()
    labels = load_pool(pool or cfg.run.object_pool_path)
    trials = [trial for size in n
              for trial in build_rank_trials(image, label, labels, size, runs, cfg.run.seed, method)]

    async def _rank():
        backend = create_backend(cfg.backend)
        try:
            return await run_rank_trials(backend, trials, cfg), backend.transcript
        finally:
            await backend.aclose()

    completed, transcript = asyncio.run(_rank())
    metrics = compute_rank_metrics(completed)
    write_rank_csv(metrics, out / RANK_CSV_NAME)
    transcript.write(out / TRANSCRIPT_NAME)

    table = Table(title=f"recognisability of '{label}'")
    for column in ("N", "method", "top-1 %", "avg rank", "relative %"):
        table.add_column(column)
    for row in metrics:
        table.add_row(str(row.n), row.method, f"{row.top1_pct:.2f}", f"{row.avg_rank:.2f}",
                      f"{row.relative_rank_pct:.2f}")
    console.print(table)
    flagged = sum(1 for trial in completed if trial.flagged)
    if flagged:
        console.print(f"{flagged} trial(s) flagged after invalid rankings")
    return EXIT_OK


@eval_app.command("feasibility")
def cmd_eval_feasibility(
    plan_paths: List[Path] = typer.Argument(..., help="Plan JSON files"),
    inventory_path: Optional[Path] = typer.Option(None, "--inventory", help="Inventory JSON (default: plan blocks)"),
    trials: int = typer.Option(10, "--trials", help="Trials per plan"),
    out: Path = typer.Option(Path("eval"), "--out", help="Output directory"),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
) -> int:
    """Execute plans repeatedly under placement noise; writes feasibility.csv"""
    cfg = _settings(config, seed)
    designs = []
    for path in plan_paths:
        plan = _read_plan(path)
        designs.append((path.stem, plan, _read_inventory(inventory_path, plan)))
    rows = feasibility_table(designs, cfg.sim, trials, cfg.run.seed, cfg.workspace)
    write_feasibility_csv(rows, out / FEASIBILITY_CSV_NAME)

    table = Table(title=f"feasibility over {trials} trials")
    for column in ("design", "% blocks correct", "% assemblies successful"):
        table.add_column(column)
    for row in rows:
        table.add_row(row.design, f"{row.pct_blocks_correct:.2f}", f"{row.pct_assemblies_successful:.2f}")
    console.print(table)
    return EXIT_OK


@eval_app.command("improvement")
def cmd_eval_improvement(
    run_logs: List[Path] = typer.Argument(..., help="run_log.json files, one per run"),
    verdicts: Optional[Path] = typer.Option(None, "--verdicts", help="Human semantic verdicts CSV"),
    model: bool = typer.Option(False, "--model", help="Ask the model when completeness and stability tie"),
    out: Path = typer.Option(Path("eval"), "--out", help="Output directory"),
    config: Optional[Path] = ConfigOption,
    replay: Optional[Path] = ReplayOption,
    stub: Optional[Path] = StubOption,
) -> int:
    """Pairwise cumulative improvement scores; writes improvement.csv and a plot"""
    if verdicts and model:
        raise click.UsageError("--verdicts and --model are mutually exclusive")
    cfg = _settings(config, replay=replay, stub=stub)
    logs = [RunLog.load(path) for path in run_logs]

    async def _score():
        all_scores = []
        for log in logs:
            semantic = HumanVerdicts.load(verdicts) if verdicts else None
            backend = None
            if model:
                cfg.check_backend()
                backend = create_backend(cfg.backend)
                inventory = parse_inventory(Path(log.config.inventory_path).read_text(encoding="utf-8"))
                semantic = ModelVerdicts(backend, log.config.target_name, inventory, cfg)
            try:
                all_scores.append(await improvement_scores(log, RuleComparator(semantic)))
            finally:
                if backend is not None:
                    await backend.aclose()
        return all_scores

    scores = asyncio.run(_score())
    write_improvement_csv(scores, out / IMPROVEMENT_CSV_NAME)
    plot_improvement(scores, out / IMPROVEMENT_PLOT_NAME)

    table = Table(title="improvement scores")
    table.add_column("run")
    for iteration in range(max(len(run) for run in scores)):
        table.add_column(str(iteration))
    for path, run in zip(run_logs, scores):
        table.add_row(path.parent.name or str(path), *(str(score) for score in run))
    console.print(table)
    return EXIT_OK


@eval_app.command("tally")
def cmd_eval_tally(
    votes_path: Path = typer.Argument(..., help="Votes CSV: assembly,voter,choice,mapping"),
    out: Path = typer.Option(Path("eval"), "--out", help="Output directory"),
) -> int:
    """Resolve randomised A/B survey votes to methods; writes tally.csv"""
    tally = tally_votes(load_votes(votes_path))

    table = Table(title=f"{tally.total} votes, {tally.rejects} rejected")
    for column in ("method", "votes", "win rate %", "majority wins"):
        table.add_column(column)
    for method, wins in tally.method_wins.items():
        table.add_row(method, str(wins), tally.win_rate_text(method), str(tally.majority_count(method)))
    console.print(table)

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "tally.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(("assembly", "method", "votes", "majority"))
        for assembly, counts in tally.per_assembly.items():
            for method, votes in counts.items():
                writer.writerow((assembly, method, votes, int(tally.majority_winners.get(assembly) == method)))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    try:
        result = app(args=argv, prog_name="idfra", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_ERROR
    except click.exceptions.Abort:
        return EXIT_ERROR
    except NoQualifiedDesignError as e:
        err_console.print(f"error: {e}")
        return EXIT_NO_QUALIFIED
    except (IDfRAError, OSError, ValueError) as e:
        logger.debug("Command failed", exc_info=True)
        err_console.print(f"error: {e}")
        return EXIT_ERROR
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
