import math
from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

from .blocks import RGB, Vec3


class Projection(str, Enum):
    ISOMETRIC = "isometric"
    FRONT = "front"
    TOP = "top"


class ColorMode(str, Enum):
    UNIFORM_GREEN = "uniform_green"
    PLAN_COLORS = "plan_colors"


def _eye_direction(azimuth_deg: float, elevation_deg: float) -> Vec3:
    az, el = math.radians(azimuth_deg), math.radians(elevation_deg)
    return math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)


_DEFAULT_VIEW = {
    Projection.ISOMETRIC: _eye_direction(45.0, 35.0),
    Projection.FRONT: (0.0, -1.0, 0.0),
    Projection.TOP: (0.0, 0.0, 1.0),
}


class CameraSpec(BaseModel):
    """
    Orthographic camera.

    view_dir points from the scene towards the eye; it defaults to the
    projection's standard direction. Degenerate values are rejected when a
    frame is rendered, not here, so a config can be loaded and reported on.
    """
    model_config = ConfigDict(frozen=True)

    projection: Projection = Projection.ISOMETRIC
    view_dir: Optional[Vec3] = Field(default=None, validate_default=True)
    image_px: Tuple[int, int] = (640, 480)
    scale_px_per_m: float = 1100.0
    target_m: Vec3 = (0.0, 0.0, 0.08)
    background: RGB = (255, 255, 255)
    table_color: RGB = (205, 200, 190)

    @field_validator("view_dir")
    @classmethod
    def _fill_view(cls, v: Optional[Vec3], info: ValidationInfo) -> Vec3:
        view = v if v is not None else _DEFAULT_VIEW[info.data.get("projection", Projection.ISOMETRIC)]
        norm = math.sqrt(sum(c * c for c in view))
        if norm > 0:
            view = tuple(c / norm for c in view)
        return tuple(view)


class FrameSequence(BaseModel):
    """Rendered execution events as PNG bytes, initial and final frames included"""
    model_config = ConfigDict(frozen=True)

    frames: Tuple[bytes, ...]
    event_indices: Tuple[int, ...]
    captions: Tuple[str, ...]
    gif: bytes = b""

    @model_validator(mode="after")
    def _check_lengths(self) -> "FrameSequence":
        if len(self.frames) < 2:
            raise ValueError("a frame sequence needs at least the initial and final frames")
        if not len(self.frames) == len(self.event_indices) == len(self.captions):
            raise ValueError("frames, event indices and captions must align")
        return self

    def __len__(self) -> int:
        return len(self.frames)
