from .rasterizer import png_bytes, render_blocks, render_world
from .sequence import encode_gif, render_plan_settled, render_sequence

__all__ = [
    "png_bytes",
    "render_blocks",
    "render_world",
    "encode_gif",
    "render_plan_settled",
    "render_sequence",
]
