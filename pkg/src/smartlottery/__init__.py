"""Efficiency-improving school-choice lotteries under ex-post stability."""

from .errors import (
    BudgetExceededError,
    InstanceFormatError,
    InvalidMatchingError,
    MarketError,
    NotAnEdgeError,
    NotStrictError,
    SolverError,
    UnstableMatchingError,
)
from .io import load_instance, parse_instance, save_instance, serialize_instance
from .lottery_opt import LotterySolution, PirmesConfig, draw, pirmes_heur, run_pirmes
from .market import (
    Lottery,
    MarketInstance,
    Matching,
    RandomMatching,
    SdComparison,
    average_rank,
    blocking_pairs,
    expected_ranks,
    is_weakly_stable,
    sd_compare,
)
from .mechanisms import (
    TieBreaking,
    da_with_tie_breaking,
    deferred_acceptance,
    eada,
    exact_da_distribution,
    sample_da_distribution,
)
from .oracle import (
    best_stable_pareto_improvement,
    enumerate_weakly_stable,
    exact_constrained_optimum,
    is_constrained_sd_efficient,
    is_ex_post_stable,
)
from .sic import build_envy_graph, resolve_to_constrained_efficient, resolve_with_trace

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError", "InstanceFormatError", "InvalidMatchingError", "Lottery", "LotterySolution",
    "MarketError", "MarketInstance", "Matching", "NotAnEdgeError", "NotStrictError", "PirmesConfig",
    "RandomMatching", "SdComparison", "SolverError", "TieBreaking", "UnstableMatchingError", "average_rank",
    "best_stable_pareto_improvement", "blocking_pairs", "build_envy_graph", "da_with_tie_breaking",
    "deferred_acceptance", "draw", "eada", "enumerate_weakly_stable", "exact_constrained_optimum",
    "exact_da_distribution", "expected_ranks", "is_constrained_sd_efficient", "is_ex_post_stable",
    "is_weakly_stable", "load_instance", "parse_instance", "pirmes_heur", "resolve_to_constrained_efficient", "resolve_with_trace", "run_pirmes",
    "sample_da_distribution", "save_instance", "sd_compare", "serialize_instance",
]
