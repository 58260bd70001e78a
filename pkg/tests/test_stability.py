import random
import unittest

from tests.helpers import cuboid

from app.models.blocks import Pose
from app.models.simulation import TABLE_SUPPORT, FootprintKind, PlacedBlock, SimParams, StabilityVerdict, WorldState
from app.services.simulation.geometry import (footprint_polygon, is_stable, stability_of, support_contacts,
                                              support_region)

MARGIN = SimParams().stability_margin_m


def _placed(index, dims, x, y, z, yaw=0.0, footprint=FootprintKind.RECT):
    block = cuboid(dims, (x, y, z), yaw)
    return PlacedBlock(index=index, block=block, extents_m=tuple(dims), footprint=footprint,
                       pose=Pose(position_m=(x, y, z), yaw_deg=yaw))


class TestSupport(unittest.TestCase):
    def test_block_on_table(self):
        world = WorldState()
        block = _placed(0, (0.04, 0.04, 0.04), 0.0, 0.0, 0.02)
        contacts = support_contacts(world, block)
        self.assertEqual([index for index, _ in contacts], [TABLE_SUPPORT])
        self.assertAlmostEqual(support_region(world, block).area, 0.0016)
        self.assertEqual(is_stable(world, block), StabilityVerdict.STABLE)

    def test_block_in_the_air_is_unsupported(self):
        block = _placed(0, (0.04, 0.04, 0.04), 0.0, 0.0, 0.1)
        self.assertEqual(is_stable(WorldState(), block), StabilityVerdict.UNSUPPORTED)

    def test_centred_stack_and_overhang(self):
        base = _placed(0, (0.04, 0.04, 0.04), 0.0, 0.0, 0.02)
        world = WorldState(placed=[base])
        on_top = _placed(1, (0.04, 0.04, 0.04), 0.0, 0.0, 0.06)
        self.assertEqual([index for index, _ in support_contacts(world, on_top)], [0])
        self.assertEqual(is_stable(world, on_top), StabilityVerdict.STABLE)
        ledge = _placed(1, (0.04, 0.04, 0.04), 0.035, 0.0, 0.06)
        self.assertEqual(is_stable(world, ledge), StabilityVerdict.UNSTABLE)

    def test_bridge_over_two_pillars_is_stable(self):
        world = WorldState(placed=[_placed(0, (0.02, 0.02, 0.04), -0.04, 0.0, 0.02),
                                   _placed(1, (0.02, 0.02, 0.04), 0.04, 0.0, 0.02)])
        beam = _placed(2, (0.12, 0.02, 0.02), 0.0, 0.0, 0.05)
        self.assertEqual(sorted(index for index, _ in support_contacts(world, beam)), [0, 1])
        self.assertEqual(is_stable(world, beam), StabilityVerdict.STABLE)

    def test_edge_contact_is_not_support(self):
        base = _placed(0, (0.04, 0.04, 0.04), 0.0, 0.0, 0.02)
        touching = _placed(1, (0.04, 0.04, 0.04), 0.04, 0.0, 0.06)
        self.assertEqual(support_contacts(WorldState(placed=[base]), touching), [])

    def test_com_on_the_margin_is_unstable(self):
        region = footprint_polygon(0.0, 0.0, 0.0, (0.04, 0.04))
        self.assertEqual(stability_of(region, (0.02 - MARGIN / 2, 0.0), MARGIN), StabilityVerdict.UNSTABLE)
        self.assertEqual(stability_of(region, (0.02 - 2 * MARGIN, 0.0), MARGIN), StabilityVerdict.STABLE)

    def test_matches_support_rectangle_oracle(self):
        """
        Random two-block stacks on an axis-aligned base. The support region is
        the overlap of the base top face with the top block's footprint, and
        eroding an intersection of convex sets erodes each one, so the top block
        is stable exactly when its centre lies inside the base face shrunk by the
        margin.
        """
        rng = random.Random(1234)
        checked = 0
        for case in range(200):
            bx, by, bz = (rng.uniform(0.02, 0.12) for _ in range(3))
            tx, ty, tz = (rng.uniform(0.02, 0.12) for _ in range(3))
            dx, dy = rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08)
            yaw = rng.choice([0.0, rng.uniform(0.0, 90.0)])
            base = _placed(0, (bx, by, bz), 0.0, 0.0, bz / 2)
            top = _placed(1, (tx, ty, tz), dx, dy, bz + tz / 2, yaw)

            inner_x, inner_y = bx / 2 - MARGIN, by / 2 - MARGIN
            slack = min(abs(abs(dx) - inner_x), abs(abs(dy) - inner_y), abs(abs(dx) - bx / 2), abs(abs(dy) - by / 2))
            if slack < 1e-5:
                continue
            expected = abs(dx) < inner_x and abs(dy) < inner_y
            verdict = is_stable(WorldState(placed=[base]), top)
            with self.subTest(case=case):
                self.assertEqual(verdict == StabilityVerdict.STABLE, expected)
            checked += 1
        self.assertGreater(checked, 150)


if __name__ == "__main__":
    unittest.main()
