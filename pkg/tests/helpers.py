"""Builders shared by the test modules"""
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'backend')))

from app.core.config.settings import ASSETS_DIR, Settings  # noqa: E402
from app.models.blocks import AssemblyPlan, BlockInventory, BlockShape, BlockSpec, PlannedBlock, Pose  # noqa: E402

HOUSE_INVENTORY = ASSETS_DIR / "blocks" / "house.json"
HOUSE_PLAN = ASSETS_DIR / "blocks" / "house_plan.json"
HOUSE_STUB = ASSETS_DIR / "scripts" / "house_stub.json"
HOUSE_GOLDEN = ASSETS_DIR / "fixtures" / "house.jsonl"

CUBE = (0.04, 0.04, 0.04)


def cuboid(dims=CUBE, position=(0.0, 0.0, 0.02), yaw: float = 0.0, name: str = "", color="green") -> PlannedBlock:
    return PlannedBlock(semantic_name=name, color=color, shape=BlockShape.CUBOID, dims_m=tuple(dims),
                        pose=Pose(position_m=tuple(position), yaw_deg=yaw))


def cylinder(diameter: float = 0.02, height: float = 0.04, position=(0.0, 0.0, 0.02), name: str = "",
             color="gray") -> PlannedBlock:
    return PlannedBlock(semantic_name=name, color=color, shape=BlockShape.CYLINDER,
                        dims_m=(diameter, diameter, height), pose=Pose(position_m=tuple(position)))


def plan_of(*blocks: PlannedBlock, target: str = "test", iteration: int = 0) -> AssemblyPlan:
    return AssemblyPlan(target_name=target, iteration=iteration, blocks=tuple(blocks))


def inventory_of(*entries: Tuple[str, Tuple[float, float, float], int]) -> BlockInventory:
    return BlockInventory.merged([BlockSpec(shape=BlockShape(shape), dims_m=tuple(dims), quantity=quantity)
                                  for shape, dims, quantity in entries])


def tower(levels: int = 3, dims=CUBE) -> AssemblyPlan:
    """Centred stack of identical cuboids resting exactly on each other"""
    height = dims[2]
    return plan_of(*(cuboid(dims, (0.0, 0.0, height / 2 + level * height), name=f"level {level}")
                     for level in range(levels)), target="tower")


def overhang_plan() -> AssemblyPlan:
    """Second cube's centre of mass lies beyond the first cube's edge"""
    return plan_of(cuboid(name="base"), cuboid(position=(0.035, 0.0, 0.06), name="ledge"), target="ledge")


def make_settings(tmp_dir: Path, iterations: int = 3, seed: int = 0, script: Optional[Path] = None,
                  transcript: Optional[Path] = None, **backend: Any) -> Settings:
    """Settings with runs under tmp_dir and a stub or replay backend"""
    if transcript is not None:
        backend_section: Dict[str, Any] = {"mode": "replay", "transcript_path": transcript}
    else:
        backend_section = {"mode": "stub", "script_path": script or HOUSE_STUB}
    backend_section.update(backend)
    return Settings(
        backend=backend_section,
        run={"iterations": iterations, "seed": seed, "runs_root": tmp_dir / "runs"},
    )


def load_script(path: Path = HOUSE_STUB) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path
