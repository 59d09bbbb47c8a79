"""Minimum-cost circulation by negative-cycle canceling (Bellman-Ford detection).

Intended for small graphs with integer costs and capacities; every canceled
cycle lowers the cost by at least one unit, so the loop terminates with an
integral optimum.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class Arc:
    tail: int
    head: int
    capacity: int
    cost: int
    flow: int = 0


def _negative_cycle(n_nodes: int, arcs: list[Arc]) -> list[tuple[int, int]] | None:
    """Residual negative cycle as (arc index, direction) pairs; direction +1 forward, -1 backward."""
    residual: list[tuple[int, int, int, int]] = []
    for k, a in enumerate(arcs):
        if a.flow < a.capacity:
            residual.append((a.tail, a.head, a.cost, k))
        if a.flow > 0:
            residual.append((a.head, a.tail, -a.cost, ~k))
    dist = [0] * n_nodes
    pred: list[tuple[int, int] | None] = [None] * n_nodes
    last = -1
    for _ in range(n_nodes):
        last = -1
        for u, v, c, k in residual:
            if dist[u] + c < dist[v]:
                dist[v] = dist[u] + c
                pred[v] = (u, k)
                last = v
        if last == -1:
            return None
    # walk back n steps to land on the cycle
    v = last
    for _ in range(n_nodes):
        v = pred[v][0]
    cycle: list[tuple[int, int]] = []
    u = v
    while True:
        p, k = pred[u]
        cycle.append((k, 1) if k >= 0 else (~k, -1))
        u = p
        if u == v:
            break
    cycle.reverse()
    return cycle


def min_cost_circulation(n_nodes: int, arcs: list[Arc]) -> int:
    """Set ``arc.flow`` to a minimum-cost circulation in place; returns the total cost."""
    while True:
        cycle = _negative_cycle(n_nodes, arcs)
        if cycle is None:
            break
        delta = min(arcs[k].capacity - arcs[k].flow if d > 0 else arcs[k].flow for k, d in cycle)
        for k, d in cycle:
            arcs[k].flow += d * delta
    return sum(a.flow * a.cost for a in arcs)
