"""Method matrix, metrics and parameter sweeps.

All random matchings compared on one instance come from the same tie-breaking
draws: DA, EE and EADA are evaluated on identical orderings so their
differences are paired rather than independent estimates.
"""

from __future__ import annotations

import csv
import logging
import time
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .errors import MarketError
from .lottery_opt import LotterySolution, PirmesConfig, run_pirmes
from .market import (
    EPS_SD,
    Edge,
    Lottery,
    MarketInstance,
    Matching,
    Number,
    RandomMatching,
    SdComparison,
    average_rank,
    blocking_pairs,
    expected_ranks,
    sd_compare,
)
from .instance_gen import GenConfig, generate
from .mechanisms import (
    Mode,
    TieBreaking,
    count_tie_breakings,
    da_with_tie_breaking,
    eada_with_tie_breaking,
    iter_tie_breakings,
    lottery_from_outcomes,
    sample_tie_breakings,
)
from .sic import resolve_to_constrained_efficient

log = logging.getLogger(__name__)

BASES = ("DA", "EE", "EADA")
VARIANTS = ("heur", "CG", "N")


@dataclass
class MethodReport:
    method: str
    average_rank: float
    fraction_improving: float
    average_improvement: float
    expected_blocking_pairs: float | None
    runtime: float = 0.0
    status: str = "ok"
    dominates_base: bool | None = None


def compute_metrics(instance: MarketInstance, base: Mapping[Edge, Number], q: Mapping[Edge, Number],
                    decomposition: Lottery | None = None, eps: float = EPS_SD,
                    require_blocking_pairs: bool = False) -> dict[str, Any]:
    """Average rank of ``q``, share of students whose expected rank drops below ``base``, and their mean gain."""
    rb = expected_ranks(instance, base)
    rq = expected_ranks(instance, q)
    gains = [float(rb[i] - rq[i]) for i in instance.students]
    improvers = [g for g in gains if g > eps]
    n = max(instance.n_students, 1)
    bp: float | None = None
    if decomposition is not None:
        bp = float(sum(float(w) * len(blocking_pairs(instance, m)) for m, w in zip(decomposition.support,
                                                                                   decomposition.weights)))
    elif require_blocking_pairs:
        raise MarketError("expected blocking pairs need a decomposition of q")
    return {
        "average_rank": float(average_rank(instance, q)),
        "fraction_improving": len(improvers) / n,
        "average_improvement": float(np.mean(improvers)) if improvers else 0.0,
        "expected_blocking_pairs": bp,
    }


@dataclass
class Draws:
    """Tie-breakings and the per-draw outcomes of DA, EE and EADA."""

    instance: MarketInstance
    tie_breakings: list[TieBreaking]
    seed: int
    exact: bool = False
    _cache: dict[str, list[Matching]] = field(default_factory=dict)

    def outcomes(self, base: str) -> list[Matching]:
        if base not in self._cache:
            inst = self.instance
            if base == "DA":
                out = [da_with_tie_breaking(inst, tb) for tb in self.tie_breakings]
            elif base == "EE":
                seeds = np.random.SeedSequence([self.seed, 7]).generate_state(len(self.tie_breakings))
                out = [resolve_to_constrained_efficient(inst, m, seed=int(s))
                       for m, s in zip(self.outcomes("DA"), seeds)]
            elif base == "EADA":
                out = [eada_with_tie_breaking(inst, tb) for tb in self.tie_breakings]
            else:
                raise MarketError(f"unknown base mechanism {base!r}")
            self._cache[base] = out
        return self._cache[base]

    def lottery(self, base: str) -> Lottery:
        prov = {"kind": "exact" if self.exact else "sampled", "n": len(self.tie_breakings), "seed": self.seed}
        return lottery_from_outcomes(self.outcomes(base), len(self.tie_breakings), prov)

    def random_matching(self, base: str) -> RandomMatching:
        return self.lottery(base).random_matching()

    def warm_support(self) -> list[Matching]:
        """DA outcomes followed by their cycle-resolved versions, deduplicated in order."""
        return list(dict.fromkeys([*self.outcomes("DA"), *self.outcomes("EE")]))


def paired_draws(instance: MarketInstance, n_samples: int = 1000, seed: int = 0, mode: Mode = "single",
                 exact: bool = False) -> Draws:
    if exact:
        count_tie_breakings(instance, mode)
        return Draws(instance, list(iter_tie_breakings(instance, mode)), seed, exact=True)
    return Draws(instance, sample_tie_breakings(instance, mode, n_samples, seed), seed)


@dataclass
class MethodParams:
    n_samples: int = 1000
    exact: bool = False
    mode: Mode = "single"
    extra_samples: int = 1000  # N in X-PIRMES-N
    pirmes: PirmesConfig = field(default_factory=PirmesConfig)


def parse_method(method: str) -> tuple[str, str | None]:
    """Split ``X-PIRMES-V`` into (X, V); plain baselines give (name, None)."""
    if method in BASES:
        return method, None
    parts = method.split("-")
    if len(parts) == 3 and parts[0] in BASES and parts[1] == "PIRMES":
        v = parts[2]
        if v in ("heur", "CG") or v.isdigit() or v == "N":
            return parts[0], v
    raise MarketError(f"unknown method {method!r}")


def run_method(instance: MarketInstance, method: str, params: MethodParams | None = None, seed: int = 0,
               draws: Draws | None = None) -> tuple[RandomMatching, MethodReport, LotterySolution | Lottery]:
    """Evaluate one method; metrics are relative to DA on the same draws."""
    params = params or MethodParams()
    base, variant = parse_method(method)
    t0 = time.monotonic()
    d = draws or paired_draws(instance, params.n_samples, seed, params.mode, params.exact)
    da = d.random_matching("DA")
    base_lottery = d.lottery(base)
    base_q = base_lottery.random_matching()
    if variant is None:
        m = compute_metrics(instance, da, base_q, base_lottery)
        return base_q, MethodReport(method, runtime=time.monotonic() - t0, **m), base_lottery

    cfg = params.pirmes
    warm = d.warm_support()
    if variant == "heur":
        cfg = PirmesConfig(**{**cfg.__dict__, "max_rounds": 0})
    elif variant != "CG":
        n_extra = params.extra_samples if variant == "N" else int(variant)
        extra = paired_draws(instance, n_extra, seed + 1_000_003, params.mode)
        warm = list(dict.fromkeys([*warm, *extra.outcomes("DA"), *extra.outcomes("EE")]))
    q, sol = run_pirmes(instance, base_q, warm, cfg)
    status = sol.status
    cmp = sd_compare(instance, q, base_q, eps=1e-7)
    if status == "artificial-active":
        status = "infeasible"
    decomposition = sol if sol.support else base_lottery
    m = compute_metrics(instance, da, q, decomposition)
    report = MethodReport(method, runtime=time.monotonic() - t0, status=status,
                          dominates_base=cmp is not SdComparison.INCOMPARABLE and status != "infeasible", **m)
    return q, report, sol


# ---------------------------------------------------------------------------
# sweeps

METRICS = ("average_rank", "fraction_improving", "average_improvement", "expected_blocking_pairs", "runtime")


@dataclass(frozen=True)
class Cell:
    n: int
    m: int
    alpha: float
    beta: float


def _summary(values: Sequence[float]) -> dict[str, float]:
    if not values:
        return {"mean": float("nan"), "q25": float("nan"), "q75": float("nan")}
    a = np.asarray(values, dtype=float)
    return {"mean": float(a.mean()), "q25": float(np.quantile(a, 0.25)), "q75": float(np.quantile(a, 0.75))}


def sweep(grid: Iterable[Cell], methods: Sequence[str], seeds: Sequence[int],
          params: MethodParams | None = None) -> list[dict[str, Any]]:
    """Run every method on every (cell, seed) instance; one summary row per (cell, method).

    Failures are recorded per cell and do not stop the sweep.
    """
    grid = list(grid)
    if not grid:
        raise MarketError("empty grid")
    params = params or MethodParams()
    rows = []
    for cell in grid:
        per_method: dict[str, list[MethodReport]] = {m: [] for m in methods}
        failures: dict[str, list[str]] = {m: [] for m in methods}
        for seed in seeds:
            inst = generate(GenConfig(cell.n, cell.m, cell.alpha, cell.beta, seed))
            d = paired_draws(inst, params.n_samples, seed, params.mode)
            for method in methods:
                try:
                    _, rep, _ = run_method(inst, method, params, seed, draws=d)
                    per_method[method].append(rep)
                except Exception as exc:  # recorded, the sweep goes on
                    log.warning("cell %s seed %s method %s failed: %s", cell, seed, method, exc)
                    failures[method].append(f"seed {seed}: {exc}")
        for method in methods:
            reps = per_method[method]
            row: dict[str, Any] = {**asdict(cell), "method": method, "instances": len(reps),
                                   "failed": len(failures[method]),
                                   "infeasible": sum(r.status == "infeasible" for r in reps),
                                   "optimal": sum(r.status == "optimal" for r in reps)}
            for metric in METRICS:
                vals = [getattr(r, metric) for r in reps if getattr(r, metric) is not None]
                for k, v in _summary(vals).items():
                    row[f"{metric}_{k}"] = v
            row["errors"] = " | ".join(failures[method])
            rows.append(row)
    return rows


def write_table(rows: Sequence[Mapping[str, Any]], path: str | Path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    keys = list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, delimiter="\t")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})


def report_fields() -> list[str]:
    return [f.name for f in fields(MethodReport)]
