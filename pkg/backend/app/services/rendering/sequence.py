import io
import logging
from pathlib import Path
from typing import List, Optional, Union

from PIL import Image

from app.models.blocks import AssemblyPlan, BlockInventory
from app.models.rendering import CameraSpec, ColorMode, FrameSequence
from app.models.simulation import ExecutionReport, SimParams, WorkspaceConfig
from app.services.simulation.executor import settle_plan
from .rasterizer import png_bytes, render_blocks

logger = logging.getLogger(__name__)

# 2 frames per second
GIF_FRAME_MS = 500
FRAMES_DIR = "frames"
GIF_NAME = "attempt.gif"


def encode_gif(images: List[Image.Image]) -> bytes:
    """Looping GIF89a of the given frames"""
    palettized = [image.convert("P", palette=Image.Palette.ADAPTIVE) for image in images]
    buffer = io.BytesIO()
    palettized[0].save(buffer, format="GIF", save_all=True, append_images=palettized[1:],
                       duration=GIF_FRAME_MS, loop=0)
    return buffer.getvalue()


def render_sequence(report: ExecutionReport, camera: CameraSpec,
                    color_mode: ColorMode = ColorMode.UNIFORM_GREEN,
                    out_dir: Optional[Union[str, Path]] = None) -> FrameSequence:
    """
    Render every recorded execution event on the table the report was executed on.

    With out_dir set, writes frames/NNN.png and attempt.gif under it.
    """
    if not report.frames:
        raise ValueError("execution report carries no frames")

    images = [render_blocks(frame.blocks, report.table_m, camera, color_mode) for frame in report.frames]
    pngs = tuple(png_bytes(image) for image in images)
    gif = encode_gif(images)

    if out_dir is not None:
        out = Path(out_dir)
        frames_dir = out / FRAMES_DIR
        frames_dir.mkdir(parents=True, exist_ok=True)
        for position, data in enumerate(pngs):
            (frames_dir / f"{position:03d}.png").write_bytes(data)
        (out / GIF_NAME).write_bytes(gif)
        logger.info(f"Wrote {len(pngs)} frames and {GIF_NAME} to {out}")

    return FrameSequence(
        frames=pngs,
        event_indices=tuple(frame.event_index for frame in report.frames),
        captions=tuple(frame.caption for frame in report.frames),
        gif=gif,
    )


def render_plan_settled(plan: AssemblyPlan, inventory: BlockInventory, camera: CameraSpec,
                        params: Optional[SimParams] = None,
                        workspace: Optional[WorkspaceConfig] = None) -> Image.Image:
    """Plan-coloured still of the plan after zero-noise settling"""
    workspace = workspace or WorkspaceConfig()
    blocks = settle_plan(plan, inventory, params, workspace)
    return render_blocks(blocks, workspace.table_size_m, camera, ColorMode.PLAN_COLORS)
