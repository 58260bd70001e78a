import math
import unittest
from itertools import combinations

from tests.helpers import inventory_of

from app.core.errors import StagingOverflowError
from app.models.simulation import WorkspaceConfig
from app.services.simulation.staging import initialize_staging

INVENTORY = inventory_of(("cuboid", (0.04, 0.04, 0.04), 6), ("cylinder", (0.02, 0.02, 0.06), 3),
                         ("cuboid", (0.12, 0.12, 0.02), 1))


class TestInitializeStaging(unittest.TestCase):
    def test_every_unit_staged_outside_region(self):
        workspace = WorkspaceConfig()
        staged = initialize_staging(INVENTORY, workspace, seed=3)
        self.assertEqual(len(staged), INVENTORY.total_units)
        self.assertEqual(len({(s.entry_index, s.unit_index) for s in staged}), INVENTORY.total_units)
        region_hx, region_hy = workspace.region_half
        table_hx, table_hy = workspace.table_half
        for s in staged:
            x, y, _ = s.pose.position_m
            self.assertTrue(abs(x) > region_hx or abs(y) > region_hy)
            self.assertLessEqual(abs(x), table_hx)
            self.assertLessEqual(abs(y), table_hy)

    def test_units_rest_on_the_table_and_keep_spacing(self):
        workspace = WorkspaceConfig()
        staged = initialize_staging(INVENTORY, workspace, seed=11)
        for s in staged:
            height = INVENTORY.entries[s.entry_index].dims_m[2]
            self.assertAlmostEqual(s.pose.z, height / 2)
        for a, b in combinations(staged, 2):
            self.assertGreaterEqual(math.hypot(a.pose.x - b.pose.x, a.pose.y - b.pose.y), workspace.min_spacing_m)

    def test_seeded(self):
        workspace = WorkspaceConfig()
        self.assertEqual(initialize_staging(INVENTORY, workspace, 5), initialize_staging(INVENTORY, workspace, 5))
        self.assertNotEqual(initialize_staging(INVENTORY, workspace, 5), initialize_staging(INVENTORY, workspace, 6))

    def test_overflow_names_remaining_units(self):
        workspace = WorkspaceConfig(table_size_m=(0.5, 0.5), min_spacing_m=0.3, max_staging_attempts=200)
        crowded = inventory_of(("cuboid", (0.04, 0.04, 0.04), 30))
        with self.assertRaises(StagingOverflowError) as caught:
            initialize_staging(crowded, workspace, seed=0)
        self.assertTrue(caught.exception.remaining)
        self.assertIn("cuboid", caught.exception.remaining[0])


if __name__ == "__main__":
    unittest.main()
