from itertools import permutations
from typing import List, Optional, Tuple

from app.core.errors import ContractViolation
from app.models.blocks import DIM_TOL_M, OrientationOffsets, Vec3, dims_close

# Right-angle rotations act on axis-aligned extents as axis swaps:
# roll (about X) swaps Y/Z, pitch (about Y) swaps X/Z, yaw (about Z) swaps X/Y.
_ROLL = (0, 2, 1)
_PITCH = (2, 1, 0)
_YAW = (1, 0, 2)

# Fewest rotations first; roll/pitch-only solutions ahead of any yaw offset.
_CANDIDATES: List[OrientationOffsets] = [
    OrientationOffsets(),
    OrientationOffsets(roll_deg=90),
    OrientationOffsets(pitch_deg=90),
    OrientationOffsets(roll_deg=90, pitch_deg=90),
    OrientationOffsets(yaw_offset_deg=90),
    OrientationOffsets(roll_deg=90, yaw_offset_deg=90),
]


def _swap(extents: Vec3, axes: Tuple[int, int, int]) -> Vec3:
    return tuple(extents[a] for a in axes)


def rotated_extents(extents: Vec3, offsets: OrientationOffsets) -> Vec3:
    """Axis-aligned extents after applying roll, then pitch, then yaw offset"""
    result = tuple(extents)
    if offsets.roll_deg:
        result = _swap(result, _ROLL)
    if offsets.pitch_deg:
        result = _swap(result, _PITCH)
    if offsets.yaw_offset_deg:
        result = _swap(result, _YAW)
    return result


def find_permutation(planned: Vec3, available: Vec3, tol: float = DIM_TOL_M) -> Optional[Tuple[int, int, int]]:
    """First axis permutation p with planned[k] == available[p[k]], identity first"""
    for perm in permutations(range(3)):
        if dims_close(planned, _swap(available, perm), tol):
            return perm
    return None


def orientation_offsets(planned_dims: Vec3, inventory_dims: Vec3) -> OrientationOffsets:
    """
    Minimal right-angle reorientation turning an inventory block into the planned one.

    Symmetric blocks resolve to the identity because it is tried first.
    """
    for offsets in _CANDIDATES:
        if dims_close(rotated_extents(inventory_dims, offsets), planned_dims):
            return offsets
    raise ContractViolation(f"{tuple(planned_dims)} is not an axis permutation of {tuple(inventory_dims)}")
