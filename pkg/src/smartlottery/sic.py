"""Stable improvement cycles: envy graph, cycle search and elimination, and the
best disjoint cycle family via min-cost circulation."""

from __future__ import annotations

import random
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

from .circulation import Arc, min_cost_circulation
from .errors import MarketError, UnstableMatchingError
from .market import MarketInstance, Matching, average_rank, blocking_pairs

Policy = Literal["first-found", "greedy"]


@dataclass
class EnvyGraph:
    """Arcs i -> j mean i envies M(j) and is among its highest-priority envious students."""

    nodes: tuple[str, ...]
    succ: dict[str, list[str]]
    label: dict[tuple[str, str], str] = field(default_factory=dict)

    @property
    def arcs(self) -> set[tuple[str, str]]:
        return {(i, j) for i, js in self.succ.items() for j in js}

    def has_arc(self, i: str, j: str) -> bool:
        return (i, j) in self.label


@dataclass(frozen=True)
class ImprovementCycle:
    """Students i_1..i_k; i_j moves to the school of i_{j+1} (cyclically)."""

    students: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.students) < 2 or len(set(self.students)) != len(self.students):
            raise MarketError(f"invalid cycle {self.students}")

    def arcs(self) -> list[tuple[str, str]]:
        s = self.students
        return [(s[k], s[(k + 1) % len(s)]) for k in range(len(s))]

    def canonical(self) -> tuple[str, ...]:
        k = self.students.index(min(self.students))
        return self.students[k:] + self.students[:k]


def _envy_graph(instance: MarketInstance, m: Mapping[str, str]) -> EnvyGraph:
    pc = instance.prio_class
    at: dict[str, list[str]] = {}
    for i in instance.students:
        s = m.get(i)
        if s is not None:
            at.setdefault(s, []).append(i)
    # best (lowest) priority class among all students envying each school, matched or not
    best: dict[str, int] = {}
    for i in instance.students:
        current = m.get(i)
        for s in instance.preferences[i]:
            if s == current:
                break
            c = pc[(i, s)]
            if c < best.get(s, 1 << 30):
                best[s] = c
    succ: dict[str, list[str]] = {}
    label: dict[tuple[str, str], str] = {}
    for i in instance.students:
        current = m.get(i)
        if current is None:
            continue
        out: list[str] = []
        for s in instance.preferences[i]:
            if s == current:
                break
            if pc[(i, s)] == best[s]:
                for j in at.get(s, ()):
                    out.append(j)
                    label[(i, j)] = s
        order = instance.student_index
        succ[i] = sorted(out, key=order.__getitem__)
    nodes = tuple(i for i in instance.students if i in m)
    return EnvyGraph(nodes, succ, label)


def build_envy_graph(instance: MarketInstance, m: Mapping[str, str]) -> EnvyGraph:
    """Envy graph of a weakly stable matching."""
    if blocking_pairs(instance, m):
        raise UnstableMatchingError("envy graph requires a weakly stable matching")
    return _envy_graph(instance, m)


def find_cycle(g: EnvyGraph, seed: int | None = None, exclude: Iterable[str] = ()) -> ImprovementCycle | None:
    """Any directed cycle avoiding ``exclude``; DFS from the lowest-index node unless ``seed`` shuffles."""
    banned = set(exclude)
    rng = random.Random(seed) if seed is not None else None
    starts = [v for v in g.nodes if v not in banned]
    if rng:
        rng.shuffle(starts)
    color: dict[str, int] = {}
    for root in starts:
        if color.get(root):
            continue
        stack: list[tuple[str, list[str]]] = []
        path: list[str] = []
        pos: dict[str, int] = {}

        def push(v: str) -> None:
            nbrs = [w for w in g.succ.get(v, ()) if w not in banned]
            if rng:
                rng.shuffle(nbrs)
            nbrs.reverse()
            color[v] = 1
            pos[v] = len(path)
            path.append(v)
            stack.append((v, nbrs))

        push(root)
        while stack:
            v, nbrs = stack[-1]
            if not nbrs:
                stack.pop()
                path.pop()
                color[v] = 2
                continue
            w = nbrs.pop()
            c = color.get(w, 0)
            if c == 1:
                return ImprovementCycle(tuple(path[pos[w]:]))
            if c == 0:
                push(w)
    return None


def eliminate(instance: MarketInstance, m: Mapping[str, str], cycles: Sequence[ImprovementCycle],
              graph: EnvyGraph | None = None) -> Matching:
    """Move every cycle member to the next member's school."""
    if not cycles:
        return m if isinstance(m, Matching) else Matching(m)
    g = graph if graph is not None else build_envy_graph(instance, m)
    used: set[str] = set()
    new = dict(m)
    for cyc in cycles:
        if used & set(cyc.students):
            raise MarketError("cycles are not student-disjoint")
        used |= set(cyc.students)
        for i, j in cyc.arcs():
            if not g.has_arc(i, j):
                raise MarketError(f"({i}, {j}) is not an arc of the envy graph")
            new[i] = m[j]
    return Matching((i, new[i]) for i in instance.students if i in new)


def best_disjoint_cycle_set(instance: MarketInstance, m: Mapping[str, str],
                            graph: EnvyGraph | None = None) -> list[ImprovementCycle]:
    """Vertex-disjoint cycle family of the envy graph with the largest total rank decrease."""
    g = graph if graph is not None else build_envy_graph(instance, m)
    idx = {v: k for k, v in enumerate(g.nodes)}
    arcs: list[Arc] = [Arc(2 * k, 2 * k + 1, 1, 0) for k in range(len(g.nodes))]
    envy: list[tuple[str, str]] = []
    rank = instance.rank
    for (i, j), s in g.label.items():
        arcs.append(Arc(2 * idx[i] + 1, 2 * idx[j], 1, rank[(i, s)] - rank[(i, m[i])]))
        envy.append((i, j))
    if not envy:
        return []
    min_cost_circulation(2 * len(g.nodes), arcs)
    nxt = {i: j for (i, j), a in zip(envy, arcs[len(g.nodes):]) if a.flow}
    cycles: list[ImprovementCycle] = []
    seen: set[str] = set()
    for start in g.nodes:
        if start in seen or start not in nxt:
            continue
        cyc = [start]
        seen.add(start)
        v = nxt[start]
        while v != start:
            cyc.append(v)
            seen.add(v)
            v = nxt[v]
        cycles.append(ImprovementCycle(tuple(cyc)))
    return cycles


@dataclass
class ResolutionStep:
    cycles: list[ImprovementCycle]
    average_rank: Fraction


def _steps(instance: MarketInstance, m: Mapping[str, str], policy: Policy,
           seed: int | None) -> Iterator[tuple[list[ImprovementCycle], Matching]]:
    if blocking_pairs(instance, m):
        raise UnstableMatchingError("cycle resolution requires a weakly stable matching")
    if policy not in ("first-found", "greedy"):
        raise MarketError(f"unknown policy {policy!r}")
    cur = m if isinstance(m, Matching) else Matching(m)
    rng = random.Random(seed) if seed is not None else None
    while True:
        g = _envy_graph(instance, cur)
        if policy == "greedy":
            cycles = best_disjoint_cycle_set(instance, cur, graph=g)
        else:
            c = find_cycle(g, seed=rng.randrange(1 << 30) if rng else None)
            cycles = [c] if c else []
        if not cycles:
            return
        cur = eliminate(instance, cur, cycles, graph=g)
        yield cycles, cur


def resolve_with_trace(instance: MarketInstance, m: Mapping[str, str], policy: Policy = "first-found",
                       seed: int | None = None, check: bool = False) -> tuple[Matching, list[ResolutionStep]]:
    """Eliminate cycles until none remain; returns the final matching and each step taken."""
    cur = m if isinstance(m, Matching) else Matching(m)
    trace: list[ResolutionStep] = []
    for cycles, cur in _steps(instance, m, policy, seed):
        if check and blocking_pairs(instance, cur):
            raise AssertionError("cycle elimination produced an unstable matching")
        trace.append(ResolutionStep(cycles, average_rank(instance, cur)))
    return cur, trace


def resolve_to_constrained_efficient(instance: MarketInstance, m: Mapping[str, str],
                                     policy: Policy = "first-found", seed: int | None = None) -> Matching:
    """Weakly stable Pareto improvement of ``m`` admitting no stable improvement cycle."""
    cur = m if isinstance(m, Matching) else Matching(m)
    for _, cur in _steps(instance, m, policy, seed):
        pass
    return cur
