"""Brute-force ground truth for small markets.

Enumerates every weakly stable matching, then answers ex-post stability,
the exact sd-improvement optimum and the best stable Pareto improvement by
working over the full set.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BudgetExceededError, MarketError, UnstableMatchingError
from .lp import solve_lp
from .market import (
    EPS_SD,
    Edge,
    Lottery,
    MarketInstance,
    Matching,
    Number,
    RandomMatching,
    SdComparison,
    augment_with_dummy,
    average_rank,
    blocking_pairs,
    drop_dummy,
    lift_random_matching,
    sd_compare,
)

DEFAULT_NODE_BUDGET = 2_000_000


@dataclass
class StableSet:
    instance: MarketInstance
    matchings: list[Matching]
    complete: bool = True
    nodes: int = 0

    def __len__(self) -> int:
        return len(self.matchings)

    def __iter__(self):
        return iter(self.matchings)


def enumerate_weakly_stable(instance: MarketInstance, budget: int = DEFAULT_NODE_BUDGET) -> StableSet:
    """All weakly stable matchings, by backtracking over students in index order.

    A branch is cut as soon as two decided students form justified envy.
    Wastefulness can only be judged at a leaf.  Raises ``BudgetExceededError``
    once more than ``budget`` search nodes have been visited.
    """
    students = instance.students
    pc = instance.prio_class
    cap = instance.capacity
    load = dict.fromkeys(instance.schools, 0)
    assign: dict[str, str] = {}
    found: list[Matching] = []
    nodes = 0

    def envy_ok(i: str, s: str | None) -> bool:
        # i against students already placed at schools i prefers to s
        for t in instance.preferences[i]:
            if t == s:
                break
            ci = pc[(i, t)]
            for k, u in assign.items():
                if u == t and pc[(k, t)] > ci:
                    return False
        if s is None:
            return True
        # earlier students who prefer s and outrank i there
        ci = pc[(i, s)]
        rank = instance.rank
        for k, u in assign.items():
            if (k, s) in rank and (u is None or rank[(k, s)] < rank[(k, u)]) and pc[(k, s)] < ci:
                return False
        return True

    def rec(idx: int) -> None:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceededError(f"stable-set enumeration exceeded {budget} nodes")
        if idx == len(students):
            m = Matching({i: s for i, s in assign.items() if s is not None})
            if not blocking_pairs(instance, m):
                found.append(m)
            return
        i = students[idx]
        options: list[str | None] = list(instance.preferences[i])
        if instance.dummy_school is None:
            options.append(None)
        for s in options:
            if s is not None and load[s] >= cap[s]:
                continue
            if not envy_ok(i, s):
                continue
            assign[i] = s  # type: ignore[assignment]
            if s is not None:
                load[s] += 1
            rec(idx + 1)
            if s is not None:
                load[s] -= 1
            del assign[i]

    rec(0)
    return StableSet(instance, found, True, nodes)


def _require_complete(stable_set: StableSet) -> None:
    if not stable_set.complete:
        raise MarketError("stable set is not a complete enumeration; oracle answers would be unsound")


def _rationalize(weights: list[float], support: list[Matching], target: Mapping[Edge, Number]) -> list[Number]:
    """Snap float weights to small fractions when that reproduces ``target`` exactly."""
    if not all(isinstance(v, (int, Fraction)) for v in target.values()):
        return weights
    fr = [Fraction(w).limit_denominator(10_000) for w in weights]
    if sum(fr) != 1:
        return weights
    if RandomMatching.from_lottery(support, fr).max_abs_diff(target) == 0:
        return fr
    return weights


def is_ex_post_stable(instance: MarketInstance, p: Mapping[Edge, Number],
                      stable_set: StableSet | None = None) -> tuple[bool, Lottery | None]:
    """Decide whether ``p`` is a convex combination of weakly stable matchings; return a witness if so."""
    ss = stable_set if stable_set is not None else enumerate_weakly_stable(instance)
    _require_complete(ss)
    for e in p:
        if e not in instance.rank:
            raise MarketError(f"p has an entry on non-edge {e}")
    if not ss.matchings:
        return False, None
    edges = instance.edges
    idx = instance.edge_index
    A = np.zeros((len(edges) + 1, len(ss.matchings)))
    for k, m in enumerate(ss.matchings):
        for i, s in m.items():
            A[idx[(i, s)], k] = 1.0
    A[-1] = 1.0
    b = np.array([float(p.get(e, 0)) for e in edges] + [1.0])
    res = solve_lp(np.zeros(len(ss.matchings)), A, ["="] * len(b), b)
    if res.status != "optimal":
        return False, None
    keep = [(m, float(w)) for m, w in zip(ss.matchings, res.x) if w > 1e-12]
    support = [m for m, _ in keep]
    total = sum(w for _, w in keep)
    weights = [w / total for _, w in keep]
    return True, Lottery(support, _rationalize(weights, support, p))


@dataclass
class OptimumReport:
    q: RandomMatching
    lottery: Lottery
    average_rank: float
    base_average_rank: float
    ex_post_stable_base: bool
    constrained_sd_efficient: bool
    comparison: SdComparison
    status: str
    info: dict = field(default_factory=dict)


def exact_constrained_optimum(instance: MarketInstance, p: Mapping[Edge, Number],
                              stable_set: StableSet | None = None, equal_treatment: bool = False,
                              tol: float = 1e-7) -> OptimumReport:
    """Minimum-average-rank ex-post stable random matching sd-dominating ``p``, over every stable matching.

    ``p`` is constrained-sd-efficient exactly when it is ex-post stable and the
    optimum cannot lower its average rank.
    """
    from .lottery_opt.master import identical_pairs, solve_master

    aug = augment_with_dummy(instance)
    ss = stable_set if stable_set is not None and stable_set.instance == aug else enumerate_weakly_stable(aug)
    _require_complete(ss)
    pl = lift_random_matching(aug, p)
    et = identical_pairs(aug, pl) if equal_treatment else None
    sol = solve_master(aug, ss.matchings, pl, et)
    base = float(average_rank(instance, p))
    if sol.status == "artificial-active":
        ok, _ = is_ex_post_stable(instance, p)
        return OptimumReport(RandomMatching(p), Lottery([], []), base, base, ok, False,
                             SdComparison.EQUAL, "infeasible", {"artificial_weight": sol.artificial_weight})
    keep = [(m, w) for m, w in zip(sol.support, sol.weights) if w > 1e-12]
    total = sum(w for _, w in keep)
    support = [drop_dummy(aug, m) for m, _ in keep]
    weights = [w / total for _, w in keep]
    q = RandomMatching.from_lottery(support, weights)
    value = float(average_rank(instance, q))
    ok, _ = is_ex_post_stable(instance, p, _project(ss, aug, instance))
    return OptimumReport(
        q=q,
        lottery=Lottery(support, weights),
        average_rank=value,
        base_average_rank=base,
        ex_post_stable_base=ok,
        constrained_sd_efficient=ok and value >= base - tol,
        comparison=sd_compare(instance, q, p, eps=max(tol, EPS_SD)),
        status="optimal",
    )


def _project(ss: StableSet, aug: MarketInstance, instance: MarketInstance) -> StableSet:
    if aug is instance:
        return ss
    return StableSet(instance, [drop_dummy(aug, m) for m in ss.matchings], ss.complete, ss.nodes)


def is_constrained_sd_efficient(instance: MarketInstance, p: Mapping[Edge, Number],
                                stable_set: StableSet | None = None) -> bool:
    return exact_constrained_optimum(instance, p, stable_set).constrained_sd_efficient


def best_stable_pareto_improvement(instance: MarketInstance, m: Mapping[str, str],
                                   stable_set: StableSet | None = None) -> Matching:
    """Among weakly stable matchings no student likes less than ``m``, one with minimum average rank."""
    if blocking_pairs(instance, m):
        raise UnstableMatchingError("best_stable_pareto_improvement needs a weakly stable matching")
    ss = stable_set if stable_set is not None else enumerate_weakly_stable(instance)
    _require_complete(ss)
    rank = instance.rank

    def r(x: Mapping[str, str], i: str) -> int:
        return rank[(i, x[i])] if i in x else instance.unassigned_rank(i)

    best = m if isinstance(m, Matching) else Matching(m)
    best_val = average_rank(instance, best)
    for cand in ss.matchings:
        if all(r(cand, i) <= r(m, i) for i in instance.students):
            v = average_rank(instance, cand)
            if v < best_val:
                best, best_val = cand, v
    return best
