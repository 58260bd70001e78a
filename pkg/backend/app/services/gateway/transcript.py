import hashlib
import json
import logging
import threading
from pathlib import Path
from typing import Dict, List, Optional, Union

from app.core.errors import ContractViolation
from app.models.gateway import ChatRequest, TranscriptRecord

logger = logging.getLogger(__name__)

TRANSCRIPT_NAME = "transcript.jsonl"


def request_digest(req: ChatRequest) -> str:
    """sha256 over the canonical JSON form of the request"""
    canonical = json.dumps(req.model_dump(mode="json"), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class Transcript:
    """
    Ordered record of model calls for one run.

    Slots are reserved when a call is issued and filled when it answers, so
    concurrent calls land in issue order regardless of completion order.
    """

    def __init__(self, records: Optional[List[TranscriptRecord]] = None):
        self._lock = threading.Lock()
        self._order: List[str] = []
        self._filled: Dict[str, Optional[TranscriptRecord]] = {}
        for record in records or []:
            self.reserve(record.tag)
            self.fill(record.tag, record.digest, record.response)

    def reserve(self, tag: str) -> None:
        with self._lock:
            if tag in self._filled:
                raise ContractViolation(f"call tag '{tag}' already used in this run")
            self._order.append(tag)
            self._filled[tag] = None

    def fill(self, tag: str, digest: str, response: str) -> None:
        with self._lock:
            if tag not in self._filled:
                raise ContractViolation(f"call tag '{tag}' was never reserved")
            self._filled[tag] = TranscriptRecord(tag=tag, digest=digest, response=response)

    def release(self, tag: str) -> None:
        """Drop a reservation whose call failed"""
        with self._lock:
            if self._filled.get(tag) is None and tag in self._filled:
                del self._filled[tag]
                self._order.remove(tag)

    @property
    def records(self) -> List[TranscriptRecord]:
        with self._lock:
            return [self._filled[tag] for tag in self._order if self._filled[tag] is not None]

    def get(self, tag: str) -> Optional[TranscriptRecord]:
        with self._lock:
            return self._filled.get(tag)

    def __len__(self) -> int:
        return len(self.records)

    def dumps(self) -> str:
        return "".join(json.dumps(record.model_dump(), ensure_ascii=False) + "\n" for record in self.records)

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="utf-8")
        logger.debug(f"Transcript with {len(self)} records written to {path}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Transcript":
        records = []
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                if line.strip():
                    records.append(TranscriptRecord.model_validate_json(line))
        logger.info(f"Loaded transcript with {len(records)} records from {path}")
        return cls(records)
