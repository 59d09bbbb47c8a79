"""Deferred Acceptance, tie-breaking, DA lotteries and simplified EADA."""

from __future__ import annotations

import itertools
import math
from collections import deque
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Literal

import numpy as np

from .errors import BudgetExceededError, MarketError, NotStrictError
from .market import Edge, Lottery, MarketInstance, Matching, RandomMatching

Mode = Literal["single", "multiple"]

#: 8! orderings; the default ceiling for exact enumeration.
DEFAULT_ENUM_BUDGET = 40320


@dataclass(frozen=True)
class TieBreaking:
    """Strict refinement of weak priorities.

    ``order`` is a permutation of the students (single mode) or a mapping
    school -> permutation (multiple mode).  Earlier students win ties.
    """

    mode: Mode
    order: tuple[str, ...] | Mapping[str, tuple[str, ...]]

    def __post_init__(self) -> None:
        if self.mode not in ("single", "multiple"):
            raise MarketError(f"unknown tie-breaking mode {self.mode!r}")
        perms = [self.order] if self.mode == "single" else list(self.order.values())
        for perm in perms:
            if len(set(perm)) != len(perm):
                raise MarketError("tie-breaking order repeats a student")

    @classmethod
    def single(cls, order: Iterable[Any]) -> TieBreaking:
        return cls("single", tuple(str(i) for i in order))

    def position(self, school: str) -> dict[str, int]:
        perm = self.order if self.mode == "single" else self.order[school]
        return {i: k for k, i in enumerate(perm)}


def _check_tb(instance: MarketInstance, tb: TieBreaking) -> None:
    want = set(instance.students)
    perms = [tb.order] if tb.mode == "single" else [tb.order.get(s, ()) for s in instance.schools]
    for perm in perms:
        if set(perm) != want:
            raise MarketError("tie-breaking order is not a permutation of the students")


def strict_keys(instance: MarketInstance, tb: TieBreaking | None = None) -> dict[Edge, tuple[int, int]]:
    """Sort keys (class, tie position) per edge; smaller means higher priority."""
    pc = instance.prio_class
    if tb is None:
        return {e: (pc[e], 0) for e in instance.edges}
    if tb.mode == "single":
        pos = tb.position("")
        return {(i, s): (pc[(i, s)], pos[i]) for i, s in instance.edges}
    positions = {s: tb.position(s) for s in instance.schools}
    return {(i, s): (pc[(i, s)], positions[s][i]) for i, s in instance.edges}


def break_ties(instance: MarketInstance, tb: TieBreaking) -> MarketInstance:
    """Refine every indifference class by the tie-breaking order; output priorities are strict."""
    _check_tb(instance, tb)
    prio: dict[str, list[tuple[str, ...]]] = {}
    for s in instance.schools:
        pos = tb.position(s)
        prio[s] = [(i,) for cls_ in instance.priorities[s] for i in sorted(cls_, key=pos.__getitem__)]
    return MarketInstance(
        students=instance.students,
        schools=instance.schools,
        capacity=instance.capacity,
        preferences=instance.preferences,
        priorities=prio,
        dummy_school=instance.dummy_school,
        metadata=instance.metadata,
    )


def _da(
    students: Sequence[str],
    prefs: Mapping[str, Sequence[str]],
    key: Mapping[Edge, Any],
    capacity: Mapping[str, int],
) -> tuple[dict[str, str], set[str]]:
    """Student-proposing DA.  Returns the assignment and the set of schools that rejected someone."""
    nxt = dict.fromkeys(students, 0)
    queue = deque(students)
    held: dict[str, list[tuple[Any, str]]] = {}
    rejecting: set[str] = set()
    while queue:
        i = queue.popleft()
        lst = prefs[i]
        k = nxt[i]
        if k >= len(lst):
            continue
        s = lst[k]
        nxt[i] = k + 1
        h = held.setdefault(s, [])
        h.append((key[(i, s)], i))
        if len(h) > capacity[s]:
            worst = max(h)
            h.remove(worst)
            rejecting.add(s)
            queue.append(worst[1])
    assign = {i: s for s, h in held.items() for _, i in h}
    return assign, rejecting


def _ordered(instance: MarketInstance, assign: Mapping[str, str]) -> Matching:
    return Matching((i, assign[i]) for i in instance.students if i in assign)


def deferred_acceptance(strict_instance: MarketInstance) -> Matching:
    """Student-optimal stable matching of an instance with strict priorities."""
    if not strict_instance.is_strict:
        raise NotStrictError("deferred_acceptance needs strict priorities; call break_ties first")
    keys = strict_keys(strict_instance)
    assign, _ = _da(strict_instance.students, strict_instance.preferences, keys, strict_instance.capacity)
    return _ordered(strict_instance, assign)


def da_with_tie_breaking(instance: MarketInstance, tb: TieBreaking) -> Matching:
    """DA on the tie-broken instance without materialising it."""
    assign, _ = _da(instance.students, instance.preferences, strict_keys(instance, tb), instance.capacity)
    return _ordered(instance, assign)


def _eada(instance: MarketInstance, keys: Mapping[Edge, Any]) -> Matching:
    # Rounds of DA; schools that rejected nobody are settled with their assignees and leave the market.
    active_students = list(instance.students)
    active_schools = set(instance.schools)
    final: dict[str, str] = {}
    while active_students and active_schools:
        prefs = {i: [s for s in instance.preferences[i] if s in active_schools] for i in active_students}
        assign, rejecting = _da(active_students, prefs, keys, instance.capacity)
        # the outside option never rejects, so unassigned students settle there
        unassigned = {i for i in active_students if i not in assign}
        underdemanded = active_schools - rejecting
        if not underdemanded and not unassigned:
            final.update(assign)
            break
        settled = {i for i, s in assign.items() if s in underdemanded} | unassigned
        for i in settled - unassigned:
            final[i] = assign[i]
        active_schools -= underdemanded
        active_students = [i for i in active_students if i not in settled]
    return _ordered(instance, final)


def eada(strict_instance: MarketInstance) -> Matching:
    """Simplified Efficiency-Adjusted DA (all students consent)."""
    if not strict_instance.is_strict:
        raise NotStrictError("eada needs strict priorities; call break_ties first")
    return _eada(strict_instance, strict_keys(strict_instance))


def eada_with_tie_breaking(instance: MarketInstance, tb: TieBreaking) -> Matching:
    return _eada(instance, strict_keys(instance, tb))


# ---------------------------------------------------------------------------
# lotteries over tie-breakings


@dataclass
class DaDistribution(Lottery):
    """Lottery induced by a mechanism over random tie-breakings.

    ``provenance`` records ``{"kind": "exact"}`` or
    ``{"kind": "sampled", "n_samples": n, "seed": s}`` plus the mode.
    """

    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def prob(self) -> RandomMatching:
        return self.random_matching()


def count_tie_breakings(instance: MarketInstance, mode: Mode = "single") -> int:
    if mode == "single":
        return math.factorial(len(instance.students))
    return math.prod(math.factorial(len(c)) for s in instance.schools for c in instance.priorities[s])


def iter_tie_breakings(instance: MarketInstance, mode: Mode = "single") -> Iterator[TieBreaking]:
    """All single orderings, or all combinations of within-class orders per school."""
    if mode == "single":
        for perm in itertools.permutations(instance.students):
            yield TieBreaking("single", perm)
        return
    slots = [(s, c) for s in instance.schools for c in instance.priorities[s]]
    for combo in itertools.product(*(itertools.permutations(c) for _, c in slots)):
        per_school: dict[str, list[str]] = {s: [] for s in instance.schools}
        for (s, _), perm in zip(slots, combo):
            per_school[s].extend(perm)
        order = {}
        for s, lst in per_school.items():
            rest = [i for i in instance.students if i not in set(lst)]
            order[s] = tuple(lst + rest)
        yield TieBreaking("multiple", order)


def sample_tie_breakings(instance: MarketInstance, mode: Mode, n_samples: int, seed: int) -> list[TieBreaking]:
    """``n_samples`` uniform i.i.d. tie-breakings from a seeded generator."""
    if n_samples < 1:
        raise MarketError("n_samples must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    students = np.array(instance.students, dtype=object)
    out = []
    for _ in range(n_samples):
        if mode == "single":
            out.append(TieBreaking("single", tuple(students[rng.permutation(len(students))])))
        else:
            order = {s: tuple(students[rng.permutation(len(students))]) for s in instance.schools}
            out.append(TieBreaking("multiple", order))
    return out


def lottery_from_outcomes(outcomes: Iterable[Matching], total: int, provenance: dict[str, Any]) -> DaDistribution:
    """Deduplicate outcomes (first-seen order) with exact frequency weights."""
    counts: dict[Matching, int] = {}
    for m in outcomes:
        counts[m] = counts.get(m, 0) + 1
    return DaDistribution(
        support=list(counts),
        weights=[Fraction(c, total) for c in counts.values()],
        provenance=provenance,
    )


Outcome = Callable[[MarketInstance, TieBreaking], Matching]


def exact_lottery(instance: MarketInstance, mode: Mode = "single", outcome: Outcome = da_with_tie_breaking,
                  budget: int = DEFAULT_ENUM_BUDGET) -> DaDistribution:
    total = count_tie_breakings(instance, mode)
    if total > budget:
        raise BudgetExceededError(
            f"{total} tie-breakings exceed the enumeration budget {budget}; use sample_da_distribution"
        )
    outs = (outcome(instance, tb) for tb in iter_tie_breakings(instance, mode))
    return lottery_from_outcomes(outs, total, {"kind": "exact", "mode": mode})


def exact_da_distribution(instance: MarketInstance, mode: Mode = "single",
                          budget: int = DEFAULT_ENUM_BUDGET) -> DaDistribution:
    """DA lottery under uniform tie-breaking, by enumerating every ordering (exact rationals)."""
    return exact_lottery(instance, mode, da_with_tie_breaking, budget)


def sample_da_distribution(instance: MarketInstance, mode: Mode = "single", n_samples: int = 1000,
                           seed: int = 0) -> DaDistribution:
    """Monte-Carlo DA lottery; weights are frequency / n_samples."""
    tbs = sample_tie_breakings(instance, mode, n_samples, seed)
    outs = (da_with_tie_breaking(instance, tb) for tb in tbs)
    return lottery_from_outcomes(outs, n_samples, {"kind": "sampled", "mode": mode, "n_samples": n_samples, "seed": seed})
