"""
Canonical JSON codec for inventories and assembly plans.

Floats are quantized to 6 significant digits on the way in and out so that
parse -> serialize -> parse is the identity and golden files stay stable.
"""
import json
import logging
from typing import Any, Dict, List, Optional, Sequence, Union

from pydantic import ValidationError

from app.core.errors import InventoryParseError, PlanParseError
from app.models.blocks import (AssemblyPlan, BlockDescriptor, BlockInventory, BlockShape, BlockSpec,
                               PlannedBlock, Pose, check_block_dims)

logger = logging.getLogger(__name__)

Document = Union[str, bytes, Dict[str, Any], List[Any]]


def canonical_float(value: float) -> float:
    return float(f"{float(value):.6g}")


def _load(document: Document, error_cls) -> Any:
    if isinstance(document, (str, bytes)):
        try:
            return json.loads(document)
        except json.JSONDecodeError as e:
            raise error_cls(f"malformed JSON: {e}") from e
    return document


def _dump(payload: Any) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def _triple(raw: Any, field: str) -> tuple:
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise ValueError(f"'{field}' must be a list of three numbers")
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in raw):
        raise ValueError(f"'{field}' must be a list of three numbers")
    return tuple(canonical_float(v) for v in raw)


def _shape(raw: Any) -> BlockShape:
    try:
        return BlockShape(str(raw).strip().lower())
    except ValueError:
        raise ValueError(f"unknown shape '{raw}'")


def _first_error(e: ValidationError) -> str:
    return e.errors()[0].get("msg", str(e)).removeprefix("Value error, ")


# --- inventory ---------------------------------------------------------------

def parse_inventory(text: Document) -> BlockInventory:
    """Parse an inventory document into a merged, validated BlockInventory"""
    raw = _load(text, InventoryParseError)
    if not isinstance(raw, list):
        raise InventoryParseError("inventory must be a JSON list")

    specs: List[BlockSpec] = []
    for index, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise InventoryParseError("entry must be an object", index)
        for key in ("shape", "dims", "quantity"):
            if key not in entry:
                raise InventoryParseError(f"missing field '{key}'", index)
        try:
            shape = _shape(entry["shape"])
            dims = _triple(entry["dims"], "dims")
            check_block_dims(shape, dims)
            quantity = entry["quantity"]
            if isinstance(quantity, bool) or not isinstance(quantity, int) or quantity < 1:
                raise ValueError("quantity must be a positive integer")
            specs.append(BlockSpec(shape=shape, dims_m=dims, quantity=quantity))
        except ValidationError as e:
            raise InventoryParseError(_first_error(e), index) from e
        except ValueError as e:
            raise InventoryParseError(str(e), index) from e

    inventory = BlockInventory.merged(specs)
    logger.debug(f"Parsed inventory: {len(inventory.entries)} entries, {inventory.total_units} units")
    return inventory


def inventory_to_document(inventory: BlockInventory) -> List[Dict[str, Any]]:
    return [
        {
            "shape": spec.shape.value,
            "dims": [canonical_float(d) for d in spec.dims_m],
            "quantity": spec.quantity,
        }
        for spec in inventory.entries
    ]


def serialize_inventory(inventory: BlockInventory) -> str:
    return _dump(inventory_to_document(inventory))


def descriptors_to_document(descriptors: Sequence[BlockDescriptor]) -> List[Dict[str, Any]]:
    return [{"shape": d.shape.value, "dims": [canonical_float(v) for v in d.dims_m]} for d in descriptors]


# --- plans -------------------------------------------------------------------

def _parse_block(index: int, entry: Any) -> PlannedBlock:
    if not isinstance(entry, dict):
        raise PlanParseError("block must be an object", index)
    for key in ("shape", "dims", "position"):
        if key not in entry:
            raise PlanParseError(f"missing field '{key}'", index)
    try:
        shape = _shape(entry["shape"])
        dims = _triple(entry["dims"], "dims")
        position = _triple(entry["position"], "position")
        yaw = entry.get("yaw", 0.0)
        if isinstance(yaw, bool) or not isinstance(yaw, (int, float)):
            raise ValueError("'yaw' must be a number of degrees")
        return PlannedBlock(
            semantic_name=str(entry.get("name", "")),
            color=entry.get("color", "gray"),
            shape=shape,
            dims_m=dims,
            pose=Pose(position_m=position, yaw_deg=canonical_float(canonical_float(yaw) % 360.0)),
        )
    except ValidationError as e:
        raise PlanParseError(_first_error(e), index) from e
    except ValueError as e:
        raise PlanParseError(str(e), index) from e


def parse_plan(text: Document, target_name: Optional[str] = None,
               iteration: Optional[int] = None) -> AssemblyPlan:
    """
    Parse a plan document.

    target_name / iteration override whatever the document says; model
    responses often omit both.
    """
    raw = _load(text, PlanParseError)
    if isinstance(raw, list):
        raw = {"blocks": raw}
    if not isinstance(raw, dict):
        raise PlanParseError("plan must be a JSON object")
    blocks = raw.get("blocks")
    if not isinstance(blocks, list):
        raise PlanParseError("plan must contain a 'blocks' list")

    target = target_name if target_name is not None else raw.get("target")
    if not isinstance(target, str) or not target:
        raise PlanParseError("plan must name its target")
    it = iteration if iteration is not None else raw.get("iteration", 0)
    if isinstance(it, bool) or not isinstance(it, int) or it < 0:
        raise PlanParseError("iteration must be a non-negative integer")

    parsed = tuple(_parse_block(index, entry) for index, entry in enumerate(blocks))
    return AssemblyPlan(target_name=target, iteration=it, blocks=parsed)


def block_to_document(block: PlannedBlock, strip_names: bool = False) -> Dict[str, Any]:
    doc: Dict[str, Any] = {}
    if not strip_names:
        doc["name"] = block.semantic_name
    doc["color"] = block.color if isinstance(block.color, str) else list(block.color)
    doc["shape"] = block.shape.value
    doc["dims"] = [canonical_float(d) for d in block.dims_m]
    doc["position"] = [canonical_float(v) for v in block.pose.position_m]
    doc["yaw"] = canonical_float(block.pose.yaw_deg)
    return doc


def plan_to_document(plan: AssemblyPlan, strip_names: bool = False) -> Dict[str, Any]:
    return {
        "target": plan.target_name,
        "iteration": plan.iteration,
        "blocks": [block_to_document(block, strip_names) for block in plan.blocks],
    }


def serialize_plan(plan: AssemblyPlan, strip_names: bool = False) -> str:
    return _dump(plan_to_document(plan, strip_names))


def dump_document(payload: Any) -> str:
    """Canonical text form for any JSON payload written next to plans"""
    return _dump(payload)
