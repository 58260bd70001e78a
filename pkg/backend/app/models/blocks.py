import logging
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

# Dimensions are authored constants, so matching is exact up to float noise.
DIM_TOL_M = 1e-9

Vec3 = Tuple[float, float, float]
RGB = Tuple[int, int, int]

NAMED_COLORS: Dict[str, RGB] = {
    "red": (200, 40, 40),
    "orange": (235, 130, 30),
    "yellow": (235, 210, 50),
    "green": (40, 160, 60),
    "blue": (40, 90, 200),
    "purple": (120, 60, 170),
    "pink": (235, 140, 180),
    "brown": (130, 80, 40),
    "black": (30, 30, 30),
    "white": (240, 240, 240),
    "gray": (128, 128, 128),
    "cyan": (40, 200, 210),
    "magenta": (200, 40, 180),
    "beige": (225, 205, 160),
    "navy": (20, 30, 100),
    "teal": (20, 128, 128),
}
FALLBACK_COLOR = "gray"


class BlockShape(str, Enum):
    CUBOID = "cuboid"
    CYLINDER = "cylinder"


def dims_close(a: Vec3, b: Vec3, tol: float = DIM_TOL_M) -> bool:
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def check_block_dims(shape: BlockShape, dims: Vec3) -> None:
    """Raise ValueError when dims break the positive / round-cylinder rules"""
    if any(d <= 0 for d in dims):
        raise ValueError("non-positive dimension")
    if shape == BlockShape.CYLINDER and abs(dims[0] - dims[1]) > DIM_TOL_M:
        raise ValueError("cylinder diameter mismatch")


class BlockDescriptor(BaseModel):
    """Shape plus dimensions, no identity; used for missing-block lists"""
    model_config = ConfigDict(frozen=True)

    shape: BlockShape
    dims_m: Vec3 = Field(validation_alias=AliasChoices("dims_m", "dims"))

    def label(self) -> str:
        dims = "x".join(f"{d:g}" for d in self.dims_m)
        return f"{self.shape.value} {dims}"


class BlockSpec(BaseModel):
    """One inventory line: a block type and how many units are available"""
    model_config = ConfigDict(frozen=True)

    shape: BlockShape
    dims_m: Vec3
    quantity: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_dims(self) -> "BlockSpec":
        check_block_dims(self.shape, self.dims_m)
        return self

    @property
    def merge_key(self) -> Tuple[str, Vec3]:
        dims = self.dims_m
        if self.shape == BlockShape.CUBOID:
            dims = tuple(sorted(dims))
        return self.shape.value, tuple(round(d, 9) for d in dims)

    def descriptor(self) -> BlockDescriptor:
        return BlockDescriptor(shape=self.shape, dims_m=self.dims_m)


class BlockInventory(BaseModel):
    """Multiset of available blocks; entries never share a merge key"""
    model_config = ConfigDict(frozen=True)

    entries: Tuple[BlockSpec, ...] = ()

    @model_validator(mode="after")
    def _check_unique(self) -> "BlockInventory":
        seen = set()
        for spec in self.entries:
            if spec.merge_key in seen:
                raise ValueError(f"duplicate inventory entry {spec.merge_key}")
            seen.add(spec.merge_key)
        return self

    @classmethod
    def merged(cls, specs: List[BlockSpec]) -> "BlockInventory":
        """Build an inventory, merging specs that share shape and dims"""
        order: List[Tuple[str, Vec3]] = []
        merged: Dict[Tuple[str, Vec3], BlockSpec] = {}
        for spec in specs:
            key = spec.merge_key
            if key in merged:
                first = merged[key]
                merged[key] = first.model_copy(update={"quantity": first.quantity + spec.quantity})
            else:
                merged[key] = spec
                order.append(key)
        return cls(entries=tuple(merged[key] for key in order))

    @property
    def total_units(self) -> int:
        return sum(spec.quantity for spec in self.entries)

    def add_unit(self, index: int) -> "BlockInventory":
        entries = list(self.entries)
        entries[index] = entries[index].model_copy(update={"quantity": entries[index].quantity + 1})
        return BlockInventory(entries=tuple(entries))


class Pose(BaseModel):
    """Block centre pose; roll and pitch come from dimension switching only"""
    model_config = ConfigDict(frozen=True)

    position_m: Vec3
    yaw_deg: float = 0.0
    roll_deg: int = 0
    pitch_deg: int = 0

    @field_validator("yaw_deg")
    @classmethod
    def _normalize_yaw(cls, v: float) -> float:
        yaw = float(v) % 360.0
        if yaw >= 360.0 or yaw == 0.0:
            yaw = 0.0
        return yaw

    @field_validator("roll_deg", "pitch_deg")
    @classmethod
    def _right_angle(cls, v: int) -> int:
        if v not in (0, 90):
            raise ValueError("roll and pitch offsets must be 0 or 90 degrees")
        return v

    @property
    def x(self) -> float:
        return self.position_m[0]

    @property
    def y(self) -> float:
        return self.position_m[1]

    @property
    def z(self) -> float:
        return self.position_m[2]


class PlannedBlock(BaseModel):
    """A block as the planner placed it, dims oriented as placed"""
    model_config = ConfigDict(frozen=True)

    semantic_name: str = ""
    color: Union[str, RGB] = FALLBACK_COLOR
    shape: BlockShape
    dims_m: Vec3
    pose: Pose

    @field_validator("color", mode="before")
    @classmethod
    def _resolve_color(cls, v):
        if isinstance(v, str):
            name = v.strip().lower()
            if name not in NAMED_COLORS:
                logger.warning(f"Unknown colour '{v}', falling back to {FALLBACK_COLOR}")
                return FALLBACK_COLOR
            return name
        if isinstance(v, (list, tuple)) and len(v) == 3:
            rgb = tuple(int(c) for c in v)
            if any(c < 0 or c > 255 for c in rgb):
                raise ValueError("colour channels must be within 0-255")
            return rgb
        raise ValueError("colour must be a name or an [r, g, b] triple")

    @model_validator(mode="after")
    def _check_dims(self) -> "PlannedBlock":
        check_block_dims(self.shape, self.dims_m)
        return self

    @property
    def rgb(self) -> RGB:
        if isinstance(self.color, str):
            return NAMED_COLORS.get(self.color, NAMED_COLORS[FALLBACK_COLOR])
        return self.color

    def descriptor(self) -> BlockDescriptor:
        return BlockDescriptor(shape=self.shape, dims_m=self.dims_m)


class AssemblyPlan(BaseModel):
    """Ordered placements; list order is execution order"""
    model_config = ConfigDict(frozen=True)

    target_name: str
    iteration: int = Field(default=0, ge=0)
    blocks: Tuple[PlannedBlock, ...] = ()

    def with_iteration(self, iteration: int) -> "AssemblyPlan":
        return self.model_copy(update={"iteration": iteration})


class Assignment(BaseModel):
    """Plan block bound to one inventory unit and an axis permutation"""
    model_config = ConfigDict(frozen=True)

    entry_index: int
    unit_index: int
    # planned axis k takes the inventory axis permutation[k]
    permutation: Tuple[int, int, int] = (0, 1, 2)
    extents_m: Vec3
    lying: bool = False


class MatchResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    assignments: Dict[int, Assignment] = Field(default_factory=dict)
    missing: Tuple[BlockDescriptor, ...] = ()
    missing_indices: Tuple[int, ...] = ()

    @property
    def complete(self) -> bool:
        return not self.missing


class PlanViolation(BaseModel):
    model_config = ConfigDict(frozen=True)

    block_index: int
    code: str
    message: str


class OrientationOffsets(BaseModel):
    """Right-angle reorientation applied before placement, roll then pitch then yaw"""
    model_config = ConfigDict(frozen=True)

    roll_deg: int = 0
    pitch_deg: int = 0
    yaw_offset_deg: int = 0

    @property
    def reoriented(self) -> bool:
        return bool(self.roll_deg or self.pitch_deg or self.yaw_offset_deg)
