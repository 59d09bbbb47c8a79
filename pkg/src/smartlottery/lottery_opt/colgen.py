"""The column-generation loop and the lottery it returns."""

from __future__ import annotations

import logging
import time
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from ..errors import MarketError, UnstableMatchingError
from ..market import (
    Edge,
    Lottery,
    MarketInstance,
    Matching,
    Number,
    RandomMatching,
    augment_with_dummy,
    average_rank,
    blocking_pairs,
    drop_dummy,
    lift_matching,
    lift_random_matching,
)
from ..sic import resolve_to_constrained_efficient
from .master import MasterProblem, MasterSolution, identical_pairs
from .pricing import EPS_STRICT, build_cutoff_constraints, price_columns

log = logging.getLogger(__name__)

PricingBackend = Literal["auto", "enumerate", "mip"]

#: instances up to this many students are priced by full enumeration under ``auto``
AUTO_ENUMERATE_MAX_STUDENTS = 8


@dataclass
class PirmesConfig:
    pricing: PricingBackend = "auto"
    variant: Literal["A", "B"] = "B"
    zeta: float | None = None  # None: the master's current average rank
    batch_size: int = 500
    time_limit: float = 600.0
    max_rounds: int | None = None
    equal_treatment: bool = False
    lp_backend: Literal["auto", "simplex", "highs"] = "auto"
    eps_strict: float = EPS_STRICT
    resolve_columns: bool = True
    pricing_time_limit: float | None = None

    def __post_init__(self) -> None:
        if self.pricing not in ("auto", "enumerate", "mip"):
            raise MarketError(f"unknown pricing backend {self.pricing!r}")
        if self.variant not in ("A", "B"):
            raise MarketError(f"unknown pricing variant {self.variant!r}")
        if self.lp_backend not in ("auto", "simplex", "highs"):
            raise MarketError(f"unknown LP backend {self.lp_backend!r}")
        if self.batch_size < 1:
            raise MarketError("batch_size must be positive")
        if self.time_limit <= 0:
            raise MarketError("time_limit must be positive")
        if self.max_rounds is not None and self.max_rounds < 0:
            raise MarketError("max_rounds must be nonnegative")
        if self.eps_strict <= 0:
            raise MarketError("eps_strict must be positive")


@dataclass
class IterationRecord:
    round: int
    objective: float
    average_rank: float
    support_size: int
    new_columns: int
    artificial_weight: float
    elapsed: float


@dataclass
class LotterySolution(Lottery):
    """Decomposition of q into weakly stable matchings, with the final master duals."""

    q: RandomMatching = field(default_factory=RandomMatching)
    mu: dict[Edge, float] = field(default_factory=dict)
    delta: float = 0.0
    eta: dict[tuple[str, str, str], float] = field(default_factory=dict)
    objective: float = 0.0
    average_rank: float = 0.0
    status: str = "optimal"
    rounds: int = 0
    log: list[IterationRecord] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)


def _zeta(mp: MasterProblem, sol: MasterSolution, fixed: float | None) -> float:
    if fixed is not None:
        return fixed
    avg = _genuine_avg(mp, sol)
    if avg == avg:
        return avg
    if mp.costs:
        return min(mp.costs) / max(mp.instance.n_students, 1)
    return 1.0


def draw(solution: Lottery, seed: int | None = None) -> Matching:
    """Sample one matching from the decomposition (the lottery's second step)."""
    if not solution.support:
        raise MarketError("solution has an empty decomposition")
    return solution.draw(np.random.default_rng(seed))


def run_pirmes(instance: MarketInstance, p: Mapping[Edge, Number], warm_support: Iterable[Mapping[str, str]] = (),
               config: PirmesConfig | None = None, stable_set=None) -> tuple[RandomMatching, LotterySolution]:
    """sd-improve ``p`` by column generation over weakly stable matchings.

    Returns ``q`` on the original instance together with its decomposition.
    If no ex-post stable random matching covering ``p`` is found, ``p`` itself
    is returned with status ``artificial-active``.
    """
    cfg = config or PirmesConfig()
    t0 = time.monotonic()
    aug = augment_with_dummy(instance)
    pl = lift_random_matching(aug, p)
    for e in pl:
        if e not in aug.rank:
            raise MarketError(f"p has an entry on non-edge {e}")
    for i in aug.students:
        if pl.mass(i) > 1 + 1e-9:
            raise MarketError(f"student {i} has probability mass {float(pl.mass(i))} > 1")
    et = identical_pairs(aug, pl) if cfg.equal_treatment else None
    mp = MasterProblem(aug, pl, et, backend=_lp_backend(cfg.lp_backend, instance))
    warm = []
    for m in warm_support:
        lm = lift_matching(aug, m)
        if blocking_pairs(aug, lm):
            raise UnstableMatchingError(f"warm-start matching {dict(m)} is not weakly stable")
        warm.append(lm)
    if cfg.resolve_columns:
        # a matching with an improvement cycle is beaten by its resolution, so keep both
        warm = list(dict.fromkeys([*warm, *(resolve_to_constrained_efficient(aug, m) for m in warm)]))
    mp.add(warm)

    backend = cfg.pricing
    if backend == "auto":
        backend = "enumerate" if instance.n_students <= AUTO_ENUMERATE_MAX_STUDENTS else "mip"
    model = None
    if cfg.max_rounds != 0:
        if backend == "enumerate" and stable_set is None:
            from ..oracle import enumerate_weakly_stable

            stable_set = enumerate_weakly_stable(aug)
        elif stable_set is not None and stable_set.instance != aug:
            stable_set = None if backend == "mip" else _lift_set(stable_set, aug)
        if backend == "mip":
            model = build_cutoff_constraints(aug)

    history: list[IterationRecord] = []
    rounds = 0
    status = "optimal"
    while True:
        sol = mp.solve()
        elapsed = time.monotonic() - t0
        avg = _genuine_avg(mp, sol)
        history.append(IterationRecord(rounds, sol.objective, avg, len(mp.support), 0, sol.artificial_weight, elapsed))
        if cfg.max_rounds is not None and rounds >= cfg.max_rounds:
            status = "max-rounds"
            break
        left = cfg.time_limit - elapsed
        if left <= 0:
            status = "time-limit"
            break
        zeta = _zeta(mp, sol, cfg.zeta)
        res = price_columns(aug, sol, cfg.variant, zeta, backend, cfg.batch_size, cfg.eps_strict,
                            stable_set=stable_set, time_limit=min(left, cfg.pricing_time_limit or left),
                            model=model)
        rounds += 1
        if not res.columns:
            status = "optimal" if res.certified else "time-limit"
            break
        cols = []
        for m in res.columns:
            if cfg.resolve_columns:
                r = resolve_to_constrained_efficient(aug, m)
                cols.append(r)
                if r in mp:
                    cols.append(m)
            else:
                cols.append(m)
        added = mp.add(cols)
        history[-1].new_columns = len(added)
        log.debug("round %d: objective %.6f, %d new columns", rounds, sol.objective, len(added))
        if not added:
            status = "stalled"
            break

    if sol.status == "artificial-active":
        status = "artificial-active"
    return _finish(instance, aug, p, mp, sol, status, rounds, history, t0)


def _lp_backend(name: str, instance: MarketInstance) -> str:
    """``auto``: the embedded simplex on small markets, HiGHS on large ones when scipy is importable."""
    if name != "auto":
        return name
    if instance.n_students <= AUTO_ENUMERATE_MAX_STUDENTS:
        return "simplex"
    try:
        import scipy.optimize  # noqa: F401
    except ImportError:
        return "simplex"
    return "highs"


def _lift_set(ss, aug: MarketInstance):
    from ..oracle import StableSet

    return StableSet(aug, [lift_matching(aug, m) for m in ss.matchings], ss.complete, ss.nodes)


def _genuine_avg(mp: MasterProblem, sol: MasterSolution) -> float:
    w = sol.genuine_weight
    if w <= 1e-12:
        return float("nan")
    return sum(x * c for x, c in zip(sol.weights, mp.costs)) / (w * max(mp.instance.n_students, 1))


def _finish(instance, aug, p, mp, sol, status, rounds, history, t0) -> tuple[RandomMatching, LotterySolution]:
    common = dict(mu=sol.mu, delta=sol.delta, eta=sol.eta, objective=sol.objective, rounds=rounds,
                  log=history, info={"support_size": len(mp.support), "elapsed": time.monotonic() - t0})
    if status == "artificial-active":
        q = RandomMatching(p)
        return q, LotterySolution([], [], q=q, average_rank=float(average_rank(instance, p)),
                                  status=status, **common)
    keep = [(m, max(w, 0.0)) for m, w in zip(sol.support, sol.weights) if w > 1e-12]
    total = sum(w for _, w in keep)
    support = [drop_dummy(aug, m) for m, _ in keep]
    weights = [w / total for _, w in keep]
    q = RandomMatching.from_lottery(support, weights)
    return q, LotterySolution(support, weights, q=q, average_rank=float(average_rank(instance, q)),
                              status=status, **common)


def pirmes_heur(instance: MarketInstance, p: Mapping[Edge, Number], warm_support: Iterable[Mapping[str, str]],
                config: PirmesConfig | None = None) -> tuple[RandomMatching, LotterySolution]:
    """Master over the warm support only, with no pricing rounds."""
    cfg = config or PirmesConfig()
    cfg = PirmesConfig(**{**cfg.__dict__, "max_rounds": 0})
    return run_pirmes(instance, p, warm_support, cfg)
