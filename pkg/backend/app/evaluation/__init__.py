from .feasibility import aggregate_feasibility, feasibility_table, feasibility_trials, write_feasibility_csv
from .improvement import (HumanVerdicts, ModelVerdicts, RuleComparator, aggregate_improvement, compare_designs,
                          improvement_scores, plot_improvement, write_improvement_csv)
from .recognisability import (build_rank_trials, compute_rank_metrics, load_pool, run_rank_trial, run_rank_trials,
                              write_rank_csv)
from .votes import load_votes, tally_votes

__all__ = [
    "aggregate_feasibility",
    "feasibility_table",
    "feasibility_trials",
    "write_feasibility_csv",
    "HumanVerdicts",
    "ModelVerdicts",
    "RuleComparator",
    "aggregate_improvement",
    "compare_designs",
    "improvement_scores",
    "plot_improvement",
    "write_improvement_csv",
    "build_rank_trials",
    "compute_rank_metrics",
    "load_pool",
    "run_rank_trial",
    "run_rank_trials",
    "write_rank_csv",
    "load_votes",
    "tally_votes",
]
