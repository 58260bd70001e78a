from typing import Any, List, Optional


class IDfRAError(Exception):
    """Base class for every error raised by the design loop"""


class InventoryParseError(IDfRAError, ValueError):
    """Inventory document violates the inventory schema"""

    def __init__(self, message: str, entry_index: Optional[int] = None):
        self.entry_index = entry_index
        prefix = f"inventory entry {entry_index}: " if entry_index is not None else ""
        super().__init__(f"{prefix}{message}")


class PlanParseError(IDfRAError, ValueError):
    """Plan document violates the plan schema"""

    def __init__(self, message: str, block_index: Optional[int] = None):
        self.block_index = block_index
        prefix = f"plan block {block_index}: " if block_index is not None else ""
        super().__init__(f"{prefix}{message}")


class ContractViolation(IDfRAError):
    """A caller broke an operation's precondition"""


class PreconditionError(IDfRAError):
    """Inputs are not in a state the operation can run on"""


class StagingOverflowError(IDfRAError):
    """Staging area cannot hold the remaining blocks at the required spacing"""

    def __init__(self, remaining: List[str]):
        self.remaining = remaining
        super().__init__(f"staging overflow, cannot place: {', '.join(remaining)}")


class RenderConfigError(IDfRAError, ValueError):
    """Camera or render settings are degenerate"""


class SettingsError(IDfRAError, ValueError):
    """Configuration is incomplete for the requested mode"""


class GatewayError(IDfRAError):
    """Transport or HTTP failure talking to the model endpoint"""

    def __init__(self, message: str, status_code: Optional[int] = None):
        self.status_code = status_code
        super().__init__(message)


class ReplayMissError(GatewayError):
    """Replay transcript has no record for a call tag"""


class RequestDriftError(GatewayError):
    """Replayed request no longer matches the recorded digest"""

    def __init__(self, call_tag: str):
        self.call_tag = call_tag
        super().__init__(f"request drift for call tag '{call_tag}'")


class ExtractionError(IDfRAError):
    """No parseable JSON found in a model response"""

    def __init__(self, message: str, raw_text: str):
        self.raw_text = raw_text
        super().__init__(message)


class ResponseValidationError(IDfRAError):
    """Model response parsed but failed the tier's schema or rules"""

    def __init__(self, message: str, payload: Any = None):
        self.payload = payload
        super().__init__(message)


class NoQualifiedDesignError(IDfRAError):
    """Every design in the run has missing blocks"""

    def __init__(self):
        super().__init__("no qualified design")


class RunAborted(IDfRAError):
    """Run stopped on an unrecoverable error; partial log is attached"""

    def __init__(self, message: str, run_log: Any = None):
        self.run_log = run_log
        super().__init__(message)


class EvaluationInputError(IDfRAError, ValueError):
    """Evaluation inputs are malformed or too small"""
