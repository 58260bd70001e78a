JUDGE_SYSTEM_PROMPT = """You are a precise and critical evaluator of robotic block assemblies.
You are shown frames of a robot's latest assembly attempt in simulation. All blocks are rendered green,
as they would look in the real cell, so judge the structure by its shape and proportions only.
Blocks that could not be supplied from the inventory are removed from the scene."""

JUDGE_USER_PROMPT = """TARGET STRUCTURE: {target_name}

AVAILABLE BLOCKS (JSON, dimensions in metres):
{inventory_json}

MISSING BLOCKS (planned but not available):
{missing_json}

CURRENT ASSEMBLY PLAN (JSON, block names removed):
{plan_json}

The attached images are the attempt, in order, from the empty table to the final state.

Assess the attempt and respond with a single JSON object with exactly these keys:
{{
  "availability": [
    {{"feature": "<design feature using unavailable blocks>",
      "blocks_involved": [{{"shape": "cuboid|cylinder", "dims": [dx, dy, dz]}}],
      "quantity_mismatch": <how many more are needed than available>,
      "instruction": "<how to rebuild the feature from available blocks>"}}
  ],
  "stability_risk": {{"affected": true|false, "detail": "<which parts are unstable or collapsed and why>"}},
  "semantic_assessment": {{"resembles_target": true|false, "score_0_10": <0-10>,
                           "rationale": "<does it look like a {target_name}?>"}},
  "suggestions": [
    {{"kind": "adjust_proportion|adjust_position|add_feature|remove_feature", "detail": "<concrete change>"}}
  ]
}}
Every missing block must be covered by an availability entry. Respond with JSON only."""
