import csv
import logging
from collections import Counter, defaultdict
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Union

from pydantic import ValidationError

from app.models.evaluation import VoteRecord, VoteTally

logger = logging.getLogger(__name__)

VOTE_CSV_FIELDS = ("assembly", "voter", "choice", "mapping")


def parse_mapping(text: str) -> Dict[str, str]:
    """'A=methodX;B=methodY' -> {'A': 'methodX', 'B': 'methodY'}"""
    mapping = {}
    for item in text.split(";"):
        key, sep, value = item.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise ValueError(f"malformed mapping item '{item}'")
        mapping[key.strip().upper()] = value.strip()
    return mapping


def parse_vote(row: Mapping[str, Any]) -> VoteRecord:
    mapping = row["mapping"]
    return VoteRecord(
        assembly=str(row["assembly"]).strip(),
        voter=str(row["voter"]).strip(),
        choice=str(row["choice"]).strip().upper(),
        mapping=parse_mapping(mapping) if isinstance(mapping, str) else dict(mapping),
    )


def load_votes(path: Union[str, Path]) -> List[Dict[str, str]]:
    """Raw vote rows; validation happens in tally_votes so bad rows count as rejects"""
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def tally_votes(records: Iterable[Union[VoteRecord, Mapping[str, Any]]]) -> VoteTally:
    """Resolve presented A/B choices to methods and count them per assembly and overall"""
    method_wins: Counter = Counter()
    per_assembly: Dict[str, Counter] = defaultdict(Counter)
    rejects = 0
    total = 0
    for position, record in enumerate(records):
        if not isinstance(record, VoteRecord):
            try:
                record = parse_vote(record)
            except (KeyError, TypeError, ValueError, ValidationError) as e:
                rejects += 1
                logger.warning(f"Vote record {position} skipped: {e}")
                continue
        total += 1
        method_wins[record.chosen_method] += 1
        per_assembly[record.assembly][record.chosen_method] += 1
        # both methods appear in every assembly's counts, even with zero votes
        for method in record.mapping.values():
            per_assembly[record.assembly].setdefault(method, 0)
            method_wins.setdefault(method, 0)

    majority_winners = {}
    for assembly, counts in per_assembly.items():
        ranked = counts.most_common()
        if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
            majority_winners[assembly] = None
        else:
            majority_winners[assembly] = ranked[0][0]

    return VoteTally(
        total=total,
        rejects=rejects,
        method_wins=dict(sorted(method_wins.items())),
        per_assembly={assembly: dict(sorted(counts.items())) for assembly, counts in sorted(per_assembly.items())},
        majority_winners=dict(sorted(majority_winners.items())),
    )
