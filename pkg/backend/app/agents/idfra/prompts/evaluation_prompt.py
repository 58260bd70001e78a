RANK_PROMPT = """The image shows a structure built from toy blocks.

Rank every object in this list by how much the structure resembles it, most similar first:
{candidates_json}

Respond with a JSON array containing each listed object exactly once."""

COMPARE_PROMPT = """Two block assemblies were built to look like a {target_name}.
The first image is design A, the second is design B.

Which one is more recognisable as a {target_name}? Answer A, B, or TIE."""
