from .base_agent import BaseAgent
from .state import DesignState

__all__ = [
    "BaseAgent",
    "DesignState",
]
