from .codec import parse_inventory, parse_plan, serialize_inventory, serialize_plan
from .matching import inventory_for_plan, match_blocks
from .orientation import orientation_offsets
from .validation import validate_plan

__all__ = [
    "parse_inventory",
    "parse_plan",
    "serialize_inventory",
    "serialize_plan",
    "inventory_for_plan",
    "match_blocks",
    "orientation_offsets",
    "validate_plan",
]
