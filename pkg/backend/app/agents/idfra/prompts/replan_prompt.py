REPLAN_PROMPT = """You design structures that a robot arm builds from toy blocks on a table.

TARGET STRUCTURE: {target_name}

AVAILABLE BLOCKS (JSON, dimensions in metres; each entry may be used up to its quantity):
{inventory_json}

FEEDBACK ON THE LATEST ATTEMPT:
{feedback_json}

ALL PREVIOUS PLANS (JSON, oldest first):
{history_json}

Create a new high-level design from scratch that addresses the feedback.
- Use only blocks from the inventory. You may switch a block's dimensions (for example list a
  0.02 x 0.02 x 0.06 block as 0.06 x 0.02 x 0.02 to lay it down); the robot reorients it.
- Give every block a short semantic name and a colour.
- Describe where each block goes relative to other named blocks or the table. Do not give coordinates.

Respond with a JSON object:
{{"blocks": [{{"name": "...", "color": "...", "shape": "cuboid|cylinder", "dims": [dx, dy, dz],
              "placement": "<relative placement, e.g. 'on the table, left of base_1'>"}}]}}"""

ORDER_PROMPT = """You order the placements of a block structure for a robot arm.

TARGET STRUCTURE: {target_name}

HIGH-LEVEL PLAN (JSON):
{high_level_json}

Reorder the blocks so that every block is placed after everything it rests on. Foundations come
first, upper components last. Do not add, remove, rename or resize blocks.

Respond with the same JSON object, blocks in build order:
{{"blocks": [...]}}"""

POSITION_PROMPT = """You turn an ordered block design into exact placements for a robot arm.

TARGET STRUCTURE: {target_name}

ORDERED HIGH-LEVEL PLAN (JSON):
{ordered_json}

WORKSPACE:
- The table top is the plane z = 0, centred on the origin, {table_x} m by {table_y} m.
- Build inside the central region |x| <= {region_hx} m, |y| <= {region_hy} m.
- Positions are block centres in metres; a block resting on the table has z = dz / 2.
- Yaw is in degrees about the vertical axis.

Keep the block order. Respond with a JSON object:
{{"target": "{target_name}", "blocks": [{{"name": "...", "color": "...", "shape": "cuboid|cylinder",
  "dims": [dx, dy, dz], "position": [x, y, z], "yaw": 0}}]}}"""

POSITION_CORRECTION_PROMPT = """Your placements break these workspace rules:
{violations}
Fix every listed block and return the complete corrected plan."""
