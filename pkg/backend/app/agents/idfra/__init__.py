from .agent import IDfRAAgent, run_iterations
from .context import DesignContext
from .selector import select

__all__ = ["IDfRAAgent", "DesignContext", "run_iterations", "select"]
