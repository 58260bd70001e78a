import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from app.models.blocks import AssemblyPlan, MatchResult
from app.models.judge import JudgeReport
from app.models.run_log import RunConfig, RunLog, SelectionRecord
from app.models.simulation import ExecutionReport
from app.services.assembly.codec import dump_document, serialize_plan
from app.services.gateway.transcript import TRANSCRIPT_NAME, Transcript

logger = logging.getLogger(__name__)

CONFIG_NAME = "config.json"
RUN_LOG_NAME = "run_log.json"
SELECTION_NAME = "selection.json"


def report_document(report: ExecutionReport) -> Dict[str, Any]:
    """Execution report with frames reduced to their captions; images live under frames/"""
    document = report.model_dump(mode="json", exclude={"frames"})
    document["frames"] = [{"event_index": f.event_index, "caption": f.caption} for f in report.frames]
    return document


def derive_run_id(config: RunConfig) -> str:
    """Stable id from the run configuration, so replays land in the same place"""
    digest = hashlib.sha256(config.model_dump_json().encode("utf-8")).hexdigest()[:10]
    slug = "".join(c if c.isalnum() else "-" for c in config.target_name.lower()).strip("-") or "run"
    return f"{slug}-{digest}"


class RunStore:
    """Owns runs/<id>/ and every artifact written under it"""

    def __init__(self, root: Union[str, Path], run_id: str):
        self.root = Path(root)
        self.run_id = run_id
        self.run_dir = self.root / run_id

    def iter_dir(self, iteration: int) -> Path:
        path = self.run_dir / f"iter_{iteration}"
        path.mkdir(parents=True, exist_ok=True)
        return path

    def relative(self, path: Path) -> str:
        return path.relative_to(self.run_dir).as_posix()

    def _write(self, path: Path, text: str) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        return path

    def write_config(self, config: RunConfig) -> Path:
        return self._write(self.run_dir / CONFIG_NAME, dump_document(config.model_dump(mode="json")))

    def write_iteration(self, iteration: int, plan: AssemblyPlan, match: Optional[MatchResult],
                        report: Optional[ExecutionReport], judge: JudgeReport) -> Dict[str, str]:
        """Write plan/match/report/judge JSON; returns their run-relative paths"""
        directory = self.iter_dir(iteration)
        written = {"plan": self._write(directory / "plan.json", serialize_plan(plan))}
        if match is not None:
            written["match"] = self._write(directory / "match.json", dump_document(match.model_dump(mode="json")))
        if report is not None:
            written["report"] = self._write(directory / "report.json", dump_document(report_document(report)))
        written["judge"] = self._write(directory / "judge.json", dump_document(judge.model_dump(mode="json")))
        for name in ("frames", "attempt.gif"):
            if (directory / name).exists():
                written[name.split(".")[0]] = directory / name
        logger.info(f"Persisted iteration {iteration} to {directory}")
        return {key: self.relative(path) for key, path in written.items()}

    def write_transcript(self, transcript: Transcript) -> Path:
        return transcript.write(self.run_dir / TRANSCRIPT_NAME)

    def write_selection(self, selection: SelectionRecord) -> Path:
        return self._write(self.run_dir / SELECTION_NAME, dump_document(selection.model_dump(mode="json")))

    def write_run_log(self, log: RunLog) -> Path:
        return self._write(self.run_dir / RUN_LOG_NAME, dump_document(log.model_dump(mode="json")))

    def read_json(self, relative: str) -> Any:
        with open(self.run_dir / relative, encoding="utf-8") as handle:
            return json.load(handle)
