from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .blocks import OrientationOffsets, PlannedBlock, Pose, Vec3

TABLE_SUPPORT = -1


class WorkspaceConfig(BaseModel):
    """Tabletop geometry; table top at z = 0, centred on the origin"""
    model_config = ConfigDict(frozen=True)

    table_size_m: Tuple[float, float] = (1.0, 1.0)
    assembly_region_m: Tuple[float, float] = (0.4, 0.4)
    min_spacing_m: float = Field(default=0.05, ge=0)
    max_staging_attempts: int = Field(default=10_000, ge=1)

    @property
    def table_half(self) -> Tuple[float, float]:
        return self.table_size_m[0] / 2, self.table_size_m[1] / 2

    @property
    def region_half(self) -> Tuple[float, float]:
        return self.assembly_region_m[0] / 2, self.assembly_region_m[1] / 2


class NoiseParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma_xy_m: float = Field(default=0.002, ge=0)
    sigma_yaw_deg: float = Field(default=1.0, ge=0)
    seed: int = 0

    @property
    def silent(self) -> bool:
        return self.sigma_xy_m == 0 and self.sigma_yaw_deg == 0


class SimParams(BaseModel):
    """Quasi-static simulator parameters; friction is kept for parity only"""
    model_config = ConfigDict(frozen=True)

    density_kgpm3: float = Field(default=1000.0, ge=0)
    lateral_friction: float = Field(default=0.5, ge=0)
    spinning_friction: float = Field(default=0.2, ge=0)
    gravity_mps2: float = -9.81
    contact_tol_m: float = Field(default=1e-4, ge=0)
    stability_margin_m: float = Field(default=1e-3, ge=0)
    noise: NoiseParams = Field(default_factory=NoiseParams)

    def noiseless(self) -> "SimParams":
        return self.model_copy(update={"noise": self.noise.model_copy(update={"sigma_xy_m": 0.0,
                                                                               "sigma_yaw_deg": 0.0})})


class BlockStatus(str, Enum):
    PLACED = "placed"
    SETTLED_LOWER = "settled_lower"
    TOPPLED = "toppled"
    COLLIDED = "collided"


class StabilityVerdict(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    UNSUPPORTED = "unsupported"


class FootprintKind(str, Enum):
    RECT = "rect"
    DISK = "disk"


class PlacedBlock(BaseModel):
    """A block in the world with its resolved extents and actual pose"""
    model_config = ConfigDict(frozen=True)

    index: int
    block: PlannedBlock
    extents_m: Vec3
    footprint: FootprintKind = FootprintKind.RECT
    pose: Pose
    status: BlockStatus = BlockStatus.PLACED
    support: Tuple[int, ...] = ()

    @property
    def bottom_z(self) -> float:
        return self.pose.z - self.extents_m[2] / 2

    @property
    def top_z(self) -> float:
        return self.pose.z + self.extents_m[2] / 2

    @property
    def toppled(self) -> bool:
        return self.status == BlockStatus.TOPPLED


class WorldState(BaseModel):
    """Mutable scene owned by a single execution"""

    placed: List[PlacedBlock] = Field(default_factory=list)
    table_m: Tuple[float, float] = (1.0, 1.0)
    gravity_mps2: float = -9.81
    params: SimParams = Field(default_factory=SimParams)

    def find(self, index: int) -> Optional[PlacedBlock]:
        for placed in self.placed:
            if placed.index == index:
                return placed
        return None

    def replace(self, updated: PlacedBlock) -> None:
        for pos, placed in enumerate(self.placed):
            if placed.index == updated.index:
                self.placed[pos] = updated
                return
        self.placed.append(updated)

    def others(self, index: int) -> List[PlacedBlock]:
        return [placed for placed in self.placed if placed.index != index]


class StagedBlock(BaseModel):
    model_config = ConfigDict(frozen=True)

    entry_index: int
    unit_index: int
    pose: Pose


class FrameRecord(BaseModel):
    """Snapshot of placed blocks after one execution event"""
    model_config = ConfigDict(frozen=True)

    event_index: int
    caption: str
    blocks: Tuple[PlacedBlock, ...] = ()


class BlockOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    semantic_name: str = ""
    nominal: Pose
    actual: Pose
    status: BlockStatus
    support: Tuple[int, ...] = ()
    extents_m: Vec3
    offsets: OrientationOffsets = Field(default_factory=OrientationOffsets)
    picked_from: Optional[Pose] = None
    rolling_risk: bool = False


class ExecutionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    target_name: str = ""
    iteration: int = 0
    seed: int = 0
    table_m: Tuple[float, float] = (1.0, 1.0)
    per_block: Tuple[BlockOutcome, ...] = ()
    stable_fraction: float = Field(default=1.0, ge=0, le=1)
    all_placed: bool = True
    frames: Tuple[FrameRecord, ...] = ()

    @model_validator(mode="after")
    def _check_all_placed(self) -> "ExecutionReport":
        if self.all_placed:
            ok = {BlockStatus.PLACED, BlockStatus.SETTLED_LOWER}
            if any(outcome.status not in ok for outcome in self.per_block):
                raise ValueError("all_placed requires every block placed or settled_lower")
        return self

    @property
    def final_blocks(self) -> Tuple[PlacedBlock, ...]:
        return self.frames[-1].blocks if self.frames else ()
