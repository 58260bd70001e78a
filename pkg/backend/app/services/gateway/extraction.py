import json
import logging
import re
from typing import Any, Iterator, Sequence, Tuple

from app.core.errors import ExtractionError, ResponseValidationError

logger = logging.getLogger(__name__)

_FENCE = re.compile(r"```(?:json|JSON)?\s*\n?(.*?)```", re.DOTALL)
_CLOSERS = {"{": "}", "[": "]"}


def _balanced_spans(text: str) -> Iterator[Tuple[int, int]]:
    """Outermost balanced {...} / [...] spans, skipping brackets inside strings"""
    start = None
    stack = []
    in_string = False
    escaped = False
    for position, char in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif char == "\\":
                escaped = True
            elif char == '"':
                in_string = False
            continue
        if char == '"' and stack:
            in_string = True
        elif char in _CLOSERS:
            if not stack:
                start = position
            stack.append(_CLOSERS[char])
        elif stack and char == stack[-1]:
            stack.pop()
            if not stack:
                yield start, position + 1
        elif stack and char in "}]":
            # mismatched closer; abandon this candidate
            stack = []
            start = None


def extract_json(response_text: str) -> Any:
    """
    Parse the JSON value a model response carries.

    Tries the whole text, then fenced blocks, then every outermost balanced
    object or array in order of appearance.
    """
    text = response_text.strip()
    try:
        return json.loads(text)
    except (json.JSONDecodeError, TypeError):
        pass

    candidates = [block.strip() for block in _FENCE.findall(text)]
    for candidate in candidates:
        try:
            return json.loads(candidate)
        except json.JSONDecodeError:
            continue

    for source in candidates + [text]:
        for begin, end in _balanced_spans(source):
            try:
                return json.loads(source[begin:end])
            except json.JSONDecodeError:
                continue

    logger.debug(f"No JSON found in response of {len(response_text)} chars")
    raise ExtractionError("no parseable JSON found in model response", response_text)


_WORD = re.compile(r"[A-Za-z]+")
_PUNCTUATION = " \t\r\n\"'`.,:;!?*()[]"


def extract_choice(response_text: str, options: Sequence[str]) -> str:
    """
    Single-token answer such as "A", "B" or "TIE".

    A bare token (quoted or punctuated, any case), a JSON string or a JSON
    object with an 'answer'/'choice'/'winner' field is taken as is. In free
    text only standalone upper-case option words count, so the article "a"
    is not read as option A. Anything naming more than one option is rejected.
    """
    allowed = {option.upper() for option in options}
    text = response_text.strip()
    try:
        value = json.loads(text)
    except (json.JSONDecodeError, TypeError):
        value = None
    if isinstance(value, dict):
        value = next((value[key] for key in ("answer", "choice", "winner") if key in value), None)
    if isinstance(value, str):
        text = value.strip()

    bare = text.strip(_PUNCTUATION).upper()
    if bare in allowed:
        return bare

    found = {word for word in _WORD.findall(text) if word in allowed}
    if len(found) != 1:
        raise ResponseValidationError(f"expected exactly one of {', '.join(sorted(allowed))}", response_text)
    return found.pop()
