"""Restricted master LP over an explicit support of weakly stable matchings.

Rows, in order: one cumulative dominance row per edge (i, s_k) requiring the
lottery to give i a k-th-choice-or-better probability at least that of p, the
convexity row, then optional equal-treatment rows.  Columns are matchings; an
artificial all-ones column is brought in only when the support alone cannot
cover p.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..errors import MarketError, SolverError
from ..lp import DenseSimplex, LPResult, solve_lp
from ..market import Edge, MarketInstance, Matching, Number, cumulative

ARTIFICIAL_FACTOR = 1000
WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class IdenticalPairs:
    """Student pairs with identical relevant preferences, and the schools they must share equally."""

    pairs: dict[tuple[str, str], tuple[str, ...]] = field(default_factory=dict)

    def __contains__(self, pair: object) -> bool:
        if not isinstance(pair, tuple) or len(pair) != 2:
            return False
        i, j = pair
        return (i, j) in self.pairs or (j, i) in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def rows(self) -> list[tuple[str, str, str]]:
        return [(i, j, s) for (i, j), schools in self.pairs.items() for s in schools]


def restricted_list(instance: MarketInstance, p: Mapping[Edge, Number], i: str) -> tuple[str, ...]:
    """Schools strictly better than the worst school where ``i`` has positive probability."""
    pref = instance.preferences[i]
    worst = max((k for k, s in enumerate(pref) if p.get((i, s), 0) > 0), default=-1)
    return pref[:max(worst, 0)]


def identical_pairs(instance: MarketInstance, p: Mapping[Edge, Number]) -> IdenticalPairs:
    lists = {i: restricted_list(instance, p, i) for i in instance.students}
    pc = instance.prio_class
    out: dict[tuple[str, str], tuple[str, ...]] = {}
    st = instance.students
    for a in range(len(st)):
        for b in range(a + 1, len(st)):
            i, j = st[a], st[b]
            if lists[i] != lists[j]:
                continue
            if all(pc[(i, s)] == pc[(j, s)] for s in lists[i]):
                out[(i, j)] = lists[i]
    return IdenticalPairs(out)


def total_rank(instance: MarketInstance, m: Mapping[str, str]) -> int:
    rank = instance.rank
    return sum(rank[(i, m[i])] if i in m else instance.unassigned_rank(i) for i in instance.students)


def artificial_cost(instance: MarketInstance) -> float:
    max_rank = max((len(instance.preferences[i]) for i in instance.students), default=0)
    return float((max_rank + 1) * max(instance.n_students, 1) * ARTIFICIAL_FACTOR)


@dataclass
class MasterSolution:
    support: list[Matching]
    weights: list[float]
    mu: dict[Edge, float]
    delta: float
    eta: dict[tuple[str, str, str], float]
    objective: float
    status: str
    artificial_weight: float = 0.0

    @property
    def genuine_weight(self) -> float:
        return float(sum(self.weights))


class MasterProblem:
    """Incremental master; columns are added between solves and the embedded simplex warm-starts."""

    def __init__(self, instance: MarketInstance, p: Mapping[Edge, Number],
                 equal_treatment: IdenticalPairs | None = None, backend: str = "simplex") -> None:
        if backend not in ("simplex", "highs"):
            raise SolverError(f"unknown LP backend {backend!r}")
        self.instance = instance
        self.backend = backend
        self.edges = instance.edges
        self.et_rows = equal_treatment.rows() if equal_treatment else []
        n_e = len(self.edges)
        self.n_rows = n_e + 1 + len(self.et_rows)
        rhs = []
        for i in instance.students:
            rhs.extend(float(v) for v in cumulative(instance, p, i))
        self.rhs = np.array(rhs + [1.0] + [0.0] * len(self.et_rows))
        self.senses = [">"] * n_e + ["="] * (1 + len(self.et_rows))
        self._first_edge = {}
        k = 0
        for i in instance.students:
            self._first_edge[i] = k
            k += len(instance.preferences[i])
        self._et_index: dict[tuple[str, str], list[tuple[int, int]]] = {}
        for r, (i, j, s) in enumerate(self.et_rows):
            self._et_index.setdefault((i, s), []).append((n_e + 1 + r, 1))
            self._et_index.setdefault((j, s), []).append((n_e + 1 + r, -1))
        self.support: list[Matching] = []
        self._seen: set[Matching] = set()
        self.columns: list[np.ndarray] = []
        self.costs: list[float] = []
        self.has_artificial = False
        self._lp: DenseSimplex | None = None
        self._pending = 0

    def __contains__(self, m: object) -> bool:
        return m in self._seen

    def column(self, m: Mapping[str, str]) -> np.ndarray:
        inst = self.instance
        col = np.zeros(self.n_rows)
        for i in inst.students:
            s = m.get(i)
            if s is None:
                continue
            r = inst.rank[(i, s)]
            base = self._first_edge[i]
            col[base + r - 1: base + len(inst.preferences[i])] = 1.0
            for row, sign in self._et_index.get((i, s), ()):
                col[row] += sign
        col[len(self.edges)] = 1.0
        return col

    def _artificial_column(self) -> np.ndarray:
        col = np.zeros(self.n_rows)
        for i in self.instance.students:
            base = self._first_edge[i]
            n = len(self.instance.preferences[i])
            col[base: base + n] = np.arange(1, n + 1)
        col[len(self.edges)] = 1.0
        return col

    def add(self, matchings: Iterable[Matching]) -> list[Matching]:
        """Add new columns; returns the ones that were not already present."""
        new = []
        for m in matchings:
            m = m if isinstance(m, Matching) else Matching(m)
            if m in self._seen:
                continue
            self._seen.add(m)
            self.support.append(m)
            self.columns.append(self.column(m))
            self.costs.append(float(total_rank(self.instance, m)))
            new.append(m)
        self._pending += len(new)
        return new

    # column order inside the LP: artificial (if any) is appended where it was introduced,
    # so keep an explicit map from LP variable to support index
    def _fresh(self, with_artificial: bool) -> tuple[DenseSimplex | None, list[int]]:
        cols = list(self.columns)
        costs = list(self.costs)
        order = list(range(len(self.support)))
        if with_artificial:
            cols.append(self._artificial_column())
            costs.append(artificial_cost(self.instance))
            order.append(-1)
        A = np.column_stack(cols) if cols else np.zeros((self.n_rows, 0))
        if self.backend == "highs":
            return None, order
        return DenseSimplex(A, self.senses, self.rhs, costs), order

    def _solve_from_scratch(self, with_artificial: bool) -> tuple[LPResult, list[int], DenseSimplex | None]:
        lp, order = self._fresh(with_artificial)
        if lp is None:
            cols = [self.columns[k] if k >= 0 else self._artificial_column() for k in order]
            costs = [self.costs[k] if k >= 0 else artificial_cost(self.instance) for k in order]
            A = np.column_stack(cols) if cols else np.zeros((self.n_rows, 0))
            return solve_lp(costs, A, self.senses, self.rhs, backend="highs"), order, None
        return lp.solve(), order, lp

    def solve(self) -> MasterSolution:
        if not self.support and not self.has_artificial:
            self.has_artificial = True
        res: LPResult
        if self.backend == "simplex" and self._lp is not None:
            if self._pending:
                start = len(self.support) - self._pending
                self._lp.add_columns(np.column_stack(self.columns[start:]), self.costs[start:])
                self._order.extend(range(start, len(self.support)))
            res = self._lp.solve()
        else:
            res, self._order, self._lp = self._solve_from_scratch(self.has_artificial)
        self._pending = 0
        if res.status == "infeasible" and not self.has_artificial:
            self.has_artificial = True
            if self._lp is not None:
                self._lp.add_columns(self._artificial_column()[:, None], [artificial_cost(self.instance)])
                self._order.append(-1)
                res = self._lp.solve()
            else:
                res, self._order, self._lp = self._solve_from_scratch(True)
        if res.status != "optimal":
            raise SolverError(f"master LP ended with status {res.status}: {res.info}")
        sol = self._extract(res)
        if sol.artificial_weight > WEIGHT_TOL:
            # a finite penalty can trade off against feasibility; confirm without the artificial column
            retry, order, lp = self._solve_from_scratch(False)
            if retry.status == "optimal":
                self.has_artificial = False
                self._order, self._lp = order, lp
                sol = self._extract(retry)
        return sol

    def _extract(self, res: LPResult) -> MasterSolution:
        weights = [0.0] * len(self.support)
        art = 0.0
        for v, k in zip(res.x, self._order):
            if k < 0:
                art = float(v)
            else:
                weights[k] = float(v)
        n_e = len(self.edges)
        y = res.duals
        mu = {e: max(float(y[k]), 0.0) for k, e in enumerate(self.edges)}
        eta = {row: float(y[n_e + 1 + r]) for r, row in enumerate(self.et_rows)}
        status = "artificial-active" if art > WEIGHT_TOL else "optimal"
        return MasterSolution(
            support=list(self.support), weights=weights, mu=mu, delta=float(y[n_e]), eta=eta,
            objective=float(res.objective), status=status, artificial_weight=art,
        )


def solve_master(instance: MarketInstance, support: Sequence[Matching], p: Mapping[Edge, Number],
                 equal_treatment: IdenticalPairs | None = None, backend: str = "simplex") -> MasterSolution:
    """One-shot master solve; the support must be nonempty and weakly stable on ``instance``."""
    if not support:
        raise MarketError("master needs a nonempty support")
    mp = MasterProblem(instance, p, equal_treatment, backend)
    mp.add(support)
    return mp.solve()
