import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

from .evaluation_prompt import COMPARE_PROMPT, RANK_PROMPT
from .judge_prompt import JUDGE_SYSTEM_PROMPT, JUDGE_USER_PROMPT
from .replan_prompt import ORDER_PROMPT, POSITION_CORRECTION_PROMPT, POSITION_PROMPT, REPLAN_PROMPT
from .selector_prompt import SELECTOR_PROMPT

logger = logging.getLogger(__name__)

BUILTIN_TEMPLATES: Dict[str, str] = {
    "judge_system": JUDGE_SYSTEM_PROMPT,
    "judge_user": JUDGE_USER_PROMPT,
    "replan": REPLAN_PROMPT,
    "order": ORDER_PROMPT,
    "position": POSITION_PROMPT,
    "position_correction": POSITION_CORRECTION_PROMPT,
    "selector": SELECTOR_PROMPT,
    "rank": RANK_PROMPT,
    "compare": COMPARE_PROMPT,
}
TEMPLATE_NAMES = tuple(BUILTIN_TEMPLATES)


class PromptSet:
    """Built-in templates with file overrides applied"""

    def __init__(self, overrides: Optional[Mapping[str, Union[str, Path]]] = None):
        self.templates = dict(BUILTIN_TEMPLATES)
        for name, path in (overrides or {}).items():
            if name not in self.templates:
                raise KeyError(f"unknown prompt template '{name}'")
            self.templates[name] = Path(path).read_text(encoding="utf-8")
            logger.info(f"Prompt template '{name}' overridden from {path}")

    def render(self, name: str, **fields) -> str:
        return self.templates[name].format(**fields)


__all__ = ["PromptSet", "BUILTIN_TEMPLATES", "TEMPLATE_NAMES"]
