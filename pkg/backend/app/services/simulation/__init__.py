from .executor import execute_plan, placement_correct, settle_plan, topple_cascade
from .geometry import is_stable, support_region
from .staging import initialize_staging

__all__ = [
    "execute_plan",
    "placement_correct",
    "settle_plan",
    "topple_cascade",
    "is_stable",
    "support_region",
    "initialize_staging",
]
