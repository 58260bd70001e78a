SELECTOR_PROMPT = """Two block assemblies were built to look like a {target_name}.
The first image is design A, the second is design B. Both were settled under gravity.

Choose the better design. Prefer the more stable structure; if both are equally stable,
prefer the one that more clearly resembles a {target_name}.

Answer with a single letter: A or B."""
