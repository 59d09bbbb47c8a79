"""Column generation for sd-improving random matchings under ex-post stability."""

from .colgen import IterationRecord, LotterySolution, PirmesConfig, draw, pirmes_heur, run_pirmes
from .master import (
    IdenticalPairs,
    MasterProblem,
    MasterSolution,
    artificial_cost,
    identical_pairs,
    restricted_list,
    solve_master,
    total_rank,
)
from .pricing import (
    EPS_STRICT,
    CutoffModel,
    Duals,
    PricingResult,
    build_cutoff_constraints,
    edge_weights,
    price_columns,
    reduced_cost,
    solve_pricing,
    variant_b_costs,
)

__all__ = [
    "EPS_STRICT", "CutoffModel", "Duals", "IdenticalPairs", "IterationRecord", "LotterySolution",
    "MasterProblem", "MasterSolution", "PirmesConfig", "PricingResult", "artificial_cost",
    "build_cutoff_constraints", "draw", "edge_weights", "identical_pairs", "pirmes_heur", "price_columns",
    "reduced_cost", "restricted_list", "run_pirmes", "solve_master", "solve_pricing", "total_rank",
    "variant_b_costs",
]
