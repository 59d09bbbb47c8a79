"""Linear programming: an embedded dense two-phase simplex, plus an optional HiGHS backend.

Problems have the form ``min c.x  s.t.  A x (<=|>=|=) b,  x >= 0``.  Row duals
follow the usual minimization convention: ``>=`` rows have nonnegative duals,
``<=`` rows nonpositive, ``=`` rows free.

The embedded solver keeps a dense basis inverse, which is fine for the few
hundred rows the masters in this package have.  :class:`DenseSimplex` can take extra
columns after a solve and re-optimize from the current basis, which is what
column generation needs.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import SolverError

log = logging.getLogger(__name__)

Sense = Literal["<", ">", "="]
Status = Literal["optimal", "infeasible", "unbounded"]

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_FEAS_TOL = 1e-8
_REFACTOR_EVERY = 100
_STALL_LIMIT = 50


@dataclass
class LPResult:
    status: Status
    x: np.ndarray
    objective: float
    duals: np.ndarray
    iterations: int = 0
    info: dict = field(default_factory=dict)


class DenseSimplex:
    """Revised two-phase simplex with an explicit dense basis inverse.

    Dantzig pricing, with a switch to Bland's rule after a run of degenerate
    pivots.  The inverse is rebuilt from scratch every ``_REFACTOR_EVERY``
    pivots and at the end of each phase.
    """

    def __init__(self, A: np.ndarray, senses: Sequence[str], b: Sequence[float], c: Sequence[float],
                 max_iter: int = 100_000) -> None:
        A = np.asarray(A, dtype=float)
        m, n = A.shape
        b = np.asarray(b, dtype=float)
        if len(senses) != m or b.shape != (m,) or len(c) != n:
            raise SolverError("inconsistent LP dimensions")
        self.m = m
        self.max_iter = max_iter
        sign = np.where(b < 0, -1.0, 1.0)
        flip = {"<": ">", ">": "<", "=": "="}
        senses = [flip[s] if sg < 0 else s for s, sg in zip(senses, sign)]
        self.row_sign = sign
        self.b = b * sign
        kinds = ["x"] * n
        cost = list(c)
        basis = np.empty(m, dtype=int)
        extra: list[np.ndarray] = []
        # slack (<) / surplus (>) columns, then artificials for > and = rows
        for r, s in enumerate(senses):
            if s in "<>":
                col = np.zeros(m)
                col[r] = 1.0 if s == "<" else -1.0
                extra.append(col)
                kinds.append("s")
                cost.append(0.0)
                if s == "<":
                    basis[r] = n + len(extra) - 1
        for r, s in enumerate(senses):
            if s in ">=":
                col = np.zeros(m)
                col[r] = 1.0
                extra.append(col)
                kinds.append("a")
                cost.append(0.0)
                basis[r] = n + len(extra) - 1
        cols = [A * sign[:, None]]
        if extra:
            cols.append(np.column_stack(extra))
        self.A = np.hstack(cols) if m else np.zeros((0, n))
        self.c = np.asarray(cost, dtype=float)
        self.kind = np.array(kinds)
        self.struct = list(range(n))
        self.basis = basis
        self.binv = np.eye(m)
        self.xb = self.b.copy()
        self.iterations = 0

    def _refactor(self) -> None:
        try:
            self.binv = np.linalg.inv(self.A[:, self.basis])
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular basis during refactorization") from exc
        self.xb = self.binv @ self.b
        self.xb[np.abs(self.xb) < 1e-12] = 0.0

    def add_columns(self, cols: np.ndarray, costs: Sequence[float]) -> list[int]:
        """Append structural columns (given in the caller's row orientation); returns their x indices."""
        cols = np.asarray(cols, dtype=float).reshape(self.m, -1) * self.row_sign[:, None]
        k = cols.shape[1]
        start = self.A.shape[1]
        first = len(self.struct)
        self.A = np.hstack([self.A, cols])
        self.c = np.concatenate([self.c, np.asarray(costs, dtype=float)])
        self.kind = np.concatenate([self.kind, np.array(["x"] * k)])
        self.struct.extend(range(start, start + k))
        return list(range(first, first + k))

    def _pivot(self, r: int, j: int, col: np.ndarray) -> None:
        piv = col[r]
        self.binv[r] /= piv
        self.xb[r] /= piv
        col = col.copy()
        col[r] = 0.0
        self.binv -= np.outer(col, self.binv[r])
        self.xb -= col * self.xb[r]
        self.xb[np.abs(self.xb) < 1e-12] = 0.0
        self.basis[r] = j
        self.iterations += 1

    def _reduced(self, cost: np.ndarray) -> np.ndarray:
        return cost - (cost[self.basis] @ self.binv) @ self.A

    def _run(self, cost: np.ndarray, allowed: np.ndarray) -> Status:
        """Primal simplex from the current feasible basis on ``cost``."""
        stall = 0
        best = np.inf
        since_refactor = 0
        art_basic = self.kind[self.basis] == "a"
        while True:
            if self.iterations > self.max_iter:
                raise SolverError(f"simplex iteration limit {self.max_iter} reached")
            d = self._reduced(cost)
            d[~allowed] = 0.0
            d[self.basis] = 0.0
            obj = float(cost[self.basis] @ self.xb)
            if obj < best - 1e-12:
                best, stall = obj, 0
            else:
                stall += 1
            bland = stall > _STALL_LIMIT
            cand = np.nonzero(d < -_COST_TOL)[0]
            if cand.size == 0:
                return "optimal"
            j = int(cand[0]) if bland else int(cand[np.argmin(d[cand])])
            col = self.binv @ self.A[:, j]
            # a zero-level artificial must leave before the entering column can push it positive
            if art_basic.any():
                stuck = np.nonzero(art_basic & (self.xb <= _FEAS_TOL) & (np.abs(col) > 1e-7))[0]
                if stuck.size:
                    r = int(stuck[0])
                    self._pivot(r, j, col)
                    art_basic[r] = False
                    continue
            pos = np.nonzero(col > _PIVOT_TOL)[0]
            if pos.size == 0:
                return "unbounded"
            ratios = self.xb[pos] / col[pos]
            rmin = ratios.min()
            ties = pos[ratios <= rmin + 1e-12]
            # prefer pushing artificials out of the basis, then the smallest basic index
            art = [r for r in ties if art_basic[r]]
            pool = art or list(ties)
            r = min(pool, key=lambda k: self.basis[k]) if bland or art else max(pool, key=lambda k: col[k])
            self._pivot(int(r), j, col)
            art_basic[r] = False
            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                self._refactor()
                since_refactor = 0

    def _drive_out_artificials(self) -> None:
        arts = self.kind == "a"
        for r in range(self.m):
            if not arts[self.basis[r]]:
                continue
            row = self.binv[r] @ self.A
            row[arts] = 0.0
            nz = np.nonzero(np.abs(row) > 1e-7)[0]
            if nz.size:
                j = int(nz[np.argmax(np.abs(row[nz]))])
                self._pivot(r, j, self.binv @ self.A[:, j])

    def solve(self) -> LPResult:
        not_art = self.kind != "a"
        art_basic = self.kind[self.basis] == "a"
        if np.any(art_basic & (self.xb > _FEAS_TOL)):
            phase1 = (self.kind == "a").astype(float)
            self._run(phase1, not_art)
            self._refactor()
            infeas = float(phase1[self.basis] @ self.xb)
            if infeas > _FEAS_TOL:
                return self._result("infeasible", info={"infeasibility": infeas})
        self._drive_out_artificials()
        status = self._run(self.c, not_art)
        self._refactor()
        if status == "optimal":
            # clean up after refactorization drift
            status = self._run(self.c, not_art)
        if np.any(self.xb < -1e-7):
            raise SolverError(f"lost primal feasibility (min basic value {self.xb.min():.3g})")
        return self._result(status)

    def _result(self, status: Status, info: dict | None = None) -> LPResult:
        full = np.zeros(len(self.c))
        full[self.basis] = np.maximum(self.xb, 0.0)
        x = full[self.struct]
        duals = (self.c[self.basis] @ self.binv) * self.row_sign
        obj = float(self.c[self.struct] @ x)
        return LPResult(status, x, obj, duals, self.iterations, info or {})


def _solve_highs(c, A, senses, b) -> LPResult:
    try:
        from scipy.optimize import linprog
    except ImportError as exc:
        raise SolverError("the highs backend needs scipy") from exc

    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    senses = list(senses)
    ub_rows = [r for r, s in enumerate(senses) if s != "="]
    eq_rows = [r for r, s in enumerate(senses) if s == "="]
    sgn = np.array([1.0 if senses[r] == "<" else -1.0 for r in ub_rows])
    kw = {}
    if ub_rows:
        kw["A_ub"] = A[ub_rows] * sgn[:, None]
        kw["b_ub"] = b[ub_rows] * sgn
    if eq_rows:
        kw["A_eq"] = A[eq_rows]
        kw["b_eq"] = b[eq_rows]
    m = len(senses)
    duals = np.zeros(m)
    if len(c) == 0:
        # linprog rejects an empty variable vector; the only point is the origin
        ok = all((s == "<" and r >= 0) or (s == ">" and r <= 0) or (s == "=" and r == 0) for s, r in zip(senses, b))
        return LPResult("optimal" if ok else "infeasible", np.zeros(0), 0.0 if ok else np.inf, duals)
    res = linprog(c, bounds=(0, None), method="highs", **kw)
    if res.status == 2:
        return LPResult("infeasible", np.zeros(len(c)), np.inf, duals, info={"message": res.message})
    if res.status == 3:
        return LPResult("unbounded", np.zeros(len(c)), -np.inf, duals, info={"message": res.message})
    if res.status != 0:
        raise SolverError(f"HiGHS failed: {res.message}")
    if ub_rows:
        duals[ub_rows] = res.ineqlin.marginals * sgn
    if eq_rows:
        duals[eq_rows] = res.eqlin.marginals
    return LPResult("optimal", res.x, float(res.fun), duals, int(getattr(res, "nit", 0)))


def solve_lp(c: Sequence[float], A: np.ndarray, senses: Sequence[str], b: Sequence[float],
             backend: str = "simplex") -> LPResult:
    """Solve a single LP with the embedded simplex (``simplex``) or scipy's HiGHS (``highs``)."""
    if backend == "simplex":
        return DenseSimplex(A, senses, b, c).solve()
    if backend == "highs":
        return _solve_highs(c, A, senses, b)
    raise SolverError(f"unknown LP backend {backend!r}")
