import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Type

from pydantic import BaseModel

logger = logging.getLogger(__name__)


class BaseAgent(ABC):
    """Base class for LangGraph agents"""

    state_cls: Type[BaseModel] = BaseModel

    def __init__(self, agent_name: str, config: Dict[str, Any]):
        self.agent_name = agent_name
        self.config = config
        self.graph = None
        self._build_graph()

    @abstractmethod
    def _build_graph(self):
        """Build the LangGraph workflow - to be implemented by subclasses"""
        pass

    def _invoke_config(self, initial_state: BaseModel) -> Dict[str, Any]:
        return {"recursion_limit": self.config.get("recursion_limit", 25)}

    async def run(self, initial_state: BaseModel) -> BaseModel:
        """Execute the workflow to completion; errors propagate to the caller"""
        if self.graph is None:
            raise AttributeError(f"Graph not properly initialized for {self.agent_name}")
        logger.info(f"Starting {self.agent_name}")
        try:
            result = await self.graph.ainvoke(initial_state.model_dump(), self._invoke_config(initial_state))
        except Exception as e:
            logger.error("Error in %s: %s", self.agent_name, str(e))
            raise
        logger.info(f"{self.agent_name} finished")
        return self.state_cls(**result)
