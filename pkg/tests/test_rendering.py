import io
import tempfile
import unittest
from pathlib import Path

from PIL import Image

from tests.helpers import cuboid, plan_of, tower

from app.core.errors import RenderConfigError
from app.models.blocks import NAMED_COLORS
from app.models.rendering import CameraSpec, ColorMode, Projection
from app.models.simulation import SimParams, WorkspaceConfig, WorldState
from app.services.assembly.matching import inventory_for_plan
from app.services.rendering import png_bytes, render_blocks, render_plan_settled, render_sequence, render_world
from app.services.rendering.rasterizer import SHADE_TOP
from app.services.simulation.executor import execute_plan, settle_plan

SMALL = CameraSpec(image_px=(160, 120), scale_px_per_m=300.0)


def _colors(image):
    return {color for _, color in image.getcolors(maxcolors=1 << 16)}


class TestRasterizer(unittest.TestCase):
    def setUp(self):
        self.plan = plan_of(cuboid(name="red", color="red"), cuboid(position=(0.0, 0.0, 0.06), color="blue"))
        self.blocks = settle_plan(self.plan, inventory_for_plan(self.plan))

    def test_png_bytes_are_deterministic(self):
        first = png_bytes(render_blocks(self.blocks, (1.0, 1.0), SMALL))
        second = png_bytes(render_blocks(self.blocks, (1.0, 1.0), SMALL))
        self.assertEqual(first, second)
        self.assertEqual(Image.open(io.BytesIO(first)).size, (160, 120))

    def test_colour_modes(self):
        top_red = tuple(int(round(c * SHADE_TOP)) for c in NAMED_COLORS["red"])
        plan_colors = _colors(render_blocks(self.blocks, (1.0, 1.0), SMALL, ColorMode.PLAN_COLORS))
        uniform = _colors(render_blocks(self.blocks, (1.0, 1.0), SMALL, ColorMode.UNIFORM_GREEN))
        self.assertIn(NAMED_COLORS["blue"], plan_colors)
        self.assertNotIn(top_red, uniform)
        self.assertNotIn(NAMED_COLORS["blue"], uniform)
        self.assertIn(NAMED_COLORS["green"], uniform)

    def test_projections_differ(self):
        views = {png_bytes(render_blocks(self.blocks, (1.0, 1.0),
                                         CameraSpec(projection=projection, image_px=(160, 120), scale_px_per_m=300.0)))
                 for projection in Projection}
        self.assertEqual(len(views), len(Projection))

    def test_world_render_matches_its_blocks(self):
        world = WorldState(placed=list(self.blocks))
        expected = png_bytes(render_blocks(self.blocks, world.table_m, SMALL))
        self.assertEqual(png_bytes(render_world(world, SMALL)), expected)

    def test_degenerate_camera(self):
        with self.assertRaises(RenderConfigError):
            render_blocks(self.blocks, (1.0, 1.0), CameraSpec(view_dir=(0.0, 0.0, 0.0)))
        with self.assertRaises(RenderConfigError):
            render_blocks(self.blocks, (1.0, 1.0), CameraSpec(scale_px_per_m=0.0))


class TestRenderSequence(unittest.TestCase):
    def test_one_frame_per_event_and_gif(self):
        plan = tower(3)
        report = execute_plan(plan, inventory_for_plan(plan), SimParams().noiseless(), seed=0)
        with tempfile.TemporaryDirectory() as tmp:
            frames = render_sequence(report, SMALL, out_dir=tmp)
            self.assertEqual(len(frames), len(report.frames))
            self.assertEqual(frames.event_indices, tuple(range(len(plan.blocks) + 2)))
            self.assertEqual(frames.captions[0], "initial")
            self.assertEqual(frames.captions[-1], "final")
            written = sorted(p.name for p in (Path(tmp) / "frames").iterdir())
            self.assertEqual(written, [f"{k:03d}.png" for k in range(len(frames))])
            self.assertTrue(frames.gif.startswith(b"GIF89a"))
            self.assertEqual(frames.gif, (Path(tmp) / "attempt.gif").read_bytes())

    def test_frames_use_the_executed_table(self):
        plan = tower(2)
        workspace = WorkspaceConfig(table_size_m=(0.8, 0.6))
        report = execute_plan(plan, inventory_for_plan(plan), SimParams().noiseless(), seed=0, workspace=workspace)
        self.assertEqual(report.table_m, (0.8, 0.6))
        wide = CameraSpec(image_px=(160, 120), scale_px_per_m=100.0)
        last = report.frames[-1].blocks
        frames = render_sequence(report, wide)
        self.assertEqual(frames.frames[-1], png_bytes(render_blocks(last, (0.8, 0.6), wide)))
        self.assertNotEqual(frames.frames[-1], png_bytes(render_blocks(last, (1.0, 1.0), wide)))

    def test_settled_render_uses_plan_colours(self):
        plan = plan_of(cuboid(color="blue"))
        image = render_plan_settled(plan, inventory_for_plan(plan), SMALL)
        self.assertIn(NAMED_COLORS["blue"], _colors(image))


if __name__ == "__main__":
    unittest.main()
