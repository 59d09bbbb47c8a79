"""Pricing: reduced costs, the cut-off-rank stability model, and column search backends."""

from __future__ import annotations

import time
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ..errors import MarketError, SolverError
from ..market import Edge, MarketInstance, Matching

Variant = Literal["A", "B"]
EPS_STRICT = 1e-7
_RC_BOUND_STEP = 1e-5
_MAX_RC_BOUND = 1e-2
VarKey = tuple  # ("x", i, s) | ("y", s) | ("f", s)


@dataclass
class Duals:
    mu: Mapping[Edge, float]
    delta: float
    eta: Mapping[tuple[str, str, str], float] = field(default_factory=dict)


def _duals(d) -> Duals:
    if isinstance(d, Duals):
        return d
    if isinstance(d, tuple):
        return Duals(*d)
    return Duals(d.mu, d.delta, getattr(d, "eta", {}))


def edge_weights(instance: MarketInstance, duals) -> dict[Edge, float]:
    """Per-edge contribution to the reduced cost: suffix sum of mu along i's list, minus rank, plus eta terms."""
    d = _duals(duals)
    w: dict[Edge, float] = {}
    for i in instance.students:
        pref = instance.preferences[i]
        acc = 0.0
        for r in range(len(pref), 0, -1):
            s = pref[r - 1]
            acc += float(d.mu.get((i, s), 0.0))
            w[(i, s)] = acc - r
    for (i, j, s), v in d.eta.items():
        w[(i, s)] += v
        w[(j, s)] -= v
    return w


def reduced_cost(instance: MarketInstance, m: Mapping[str, str], duals) -> float:
    """Gain of adding ``m`` to the master; positive means the master can improve."""
    d = _duals(duals)
    w = edge_weights(instance, d)
    return sum(w[(i, s)] for i, s in m.items()) + float(d.delta)


def variant_b_costs(instance: MarketInstance, duals, zeta: float) -> dict[Edge, float]:
    """Per-edge objective of the low-rank pricing: rank minus a normalized dual bonus."""
    mu = _duals(duals).mu
    top = max((float(v) for v in mu.values()), default=0.0)
    out = {}
    for e, r in instance.rank.items():
        bonus = zeta * float(mu.get(e, 0.0)) / top if top > 0 else 0.0
        out[e] = r - bonus
    return out


# ---------------------------------------------------------------------------
# cut-off rank model


@dataclass
class Row:
    coeffs: dict[VarKey, float]
    lb: float
    ub: float
    school: str | None = None
    tag: str = ""

    def holds(self, values: Mapping[VarKey, float], tol: float = 1e-9) -> bool:
        v = sum(c * values.get(k, 0.0) for k, c in self.coeffs.items())
        return self.lb - tol <= v <= self.ub + tol


@dataclass
class CutoffModel:
    """Linear system over edge indicators x, cut-off ranks y and fill flags f.

    Its 0/1 points (with integer y in 1..rbar+1) are exactly the weakly stable
    matchings.
    """

    instance: MarketInstance
    rows: list[Row]
    rbar: dict[str, int]
    variables: list[VarKey]

    def bounds(self, key: VarKey) -> tuple[int, int]:
        if key[0] == "y":
            return 1, self.rbar[key[1]] + 1
        return 0, 1

    def assignment(self, m: Mapping[str, str]) -> dict[VarKey, float]:
        return {("x", i, s): 1.0 for i, s in m.items()}

    def completion(self, m: Mapping[str, str]) -> dict[VarKey, float] | None:
        """Search every (y, f) per school for values making ``m`` feasible; None if there are none."""
        vals = self.assignment(m)
        for r in self.rows:
            if r.school is None and not r.holds(vals):
                return None
        by_school: dict[str, list[Row]] = {}
        for r in self.rows:
            if r.school is not None:
                by_school.setdefault(r.school, []).append(r)
        for s in self.instance.schools:
            rows = by_school.get(s, [])
            for y in range(1, self.rbar[s] + 2):
                ok = False
                for f in (0, 1):
                    vals[("y", s)] = y
                    vals[("f", s)] = f
                    if all(r.holds(vals) for r in rows):
                        ok = True
                        break
                if ok:
                    break
            else:
                return None
        return vals

    def check(self, m: Mapping[str, str]) -> bool:
        return self.completion(m) is not None

    def matrix(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        col = {k: n for n, k in enumerate(self.variables)}
        A = np.zeros((len(self.rows), len(self.variables)))
        for r, row in enumerate(self.rows):
            for k, c in row.coeffs.items():
                A[r, col[k]] += c
        lb = np.array([r.lb for r in self.rows])
        ub = np.array([r.ub for r in self.rows])
        return A, lb, ub


def build_cutoff_constraints(instance: MarketInstance) -> CutoffModel:
    pc = instance.prio_class
    rbar = {s: len(instance.priorities[s]) for s in instance.schools}
    rows: list[Row] = []
    inf = np.inf
    for i, s in instance.edges:
        r = pc[(i, s)]
        big = rbar[s] + 1
        # y_s >= r_is * x_is
        rows.append(Row({("y", s): 1.0, ("x", i, s): -float(r)}, 0.0, inf, s, "link"))
        # y_s - (rbar+1) * [i at s or better] <= r_is
        coeffs: dict[VarKey, float] = {("y", s): 1.0}
        for t in instance.preferences[i]:
            coeffs[("x", i, t)] = -float(big)
            if t == s:
                break
        rows.append(Row(coeffs, -inf, float(r), s, "fair"))
    for s in instance.schools:
        c = instance.capacity[s]
        xs = {("x", i, s): 1.0 for i in instance.applicants.get(s, ())}
        rows.append(Row({**xs, ("f", s): -float(c)}, 0.0, inf, s, "fill"))
        rows.append(Row(dict(xs), -inf, float(c), s, "capacity"))
        rows.append(Row({("y", s): 1.0, ("f", s): float(rbar[s] + 1)}, float(rbar[s] + 1), inf, s, "waste"))
    for i in instance.students:
        rows.append(Row({("x", i, s): 1.0 for s in instance.preferences[i]}, -inf, 1.0, None, "student"))
    variables: list[VarKey] = [("x", i, s) for i, s in instance.edges]
    variables += [("y", s) for s in instance.schools] + [("f", s) for s in instance.schools]
    return CutoffModel(instance, rows, rbar, variables)


# ---------------------------------------------------------------------------
# pricing backends


@dataclass
class PricingResult:
    columns: list[Matching]
    certified: bool  # True when the search proved no improving column exists
    best_value: float | None = None
    elapsed: float = 0.0
    info: dict = field(default_factory=dict)


def _select(instance: MarketInstance, candidates: Iterable[Matching], duals, variant: Variant,
            zeta: float, batch: int, eps: float) -> tuple[list[Matching], float | None]:
    w = edge_weights(instance, duals)
    delta = float(_duals(duals).delta)
    costs = variant_b_costs(instance, duals, zeta) if variant == "B" else None
    scored = []
    best = None
    for m in candidates:
        rc = sum(w[e] for e in m.items()) + delta
        best = rc if best is None else max(best, rc)
        if rc < eps:
            continue
        key = -rc if costs is None else sum(costs[e] for e in m.items())
        scored.append((key, len(scored), m))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [m for _, _, m in scored[:batch]], best


def _price_enumerate(instance, duals, variant, zeta, batch, eps, stable_set) -> PricingResult:
    from ..oracle import enumerate_weakly_stable

    ss = stable_set if stable_set is not None else enumerate_weakly_stable(instance)
    cols, best = _select(instance, ss.matchings, duals, variant, zeta, batch, eps)
    return PricingResult(cols, certified=ss.complete and not cols, best_value=best)


def _price_mip(instance, duals, variant, zeta, batch, eps, time_limit, model) -> PricingResult:
    try:
        from scipy.optimize import Bounds, LinearConstraint, milp
        from scipy.sparse import csr_matrix
    except ImportError as exc:  # pragma: no cover - exercised only without scipy
        raise SolverError("mip pricing needs scipy >= 1.9") from exc
    model = model or build_cutoff_constraints(instance)
    A, lb, ub = model.matrix()
    nv = len(model.variables)
    n_x = len(instance.edges)
    lo = np.array([model.bounds(k)[0] for k in model.variables], dtype=float)
    hi = np.array([model.bounds(k)[1] for k in model.variables], dtype=float)
    w = edge_weights(instance, duals)
    delta = float(_duals(duals).delta)
    wvec = np.zeros(nv)
    wvec[:n_x] = [w[e] for e in instance.edges]
    if variant == "A":
        c = -wvec
        rows = [(A, lb, ub)]
    else:
        cb = variant_b_costs(instance, duals, zeta)
        c = np.zeros(nv)
        c[:n_x] = [cb[e] for e in instance.edges]
        rows = [(A, lb, ub)]
    # rc >= eps holds only up to the solver's feasibility tolerance; on a violation the bound is raised
    rc_bound = eps
    cuts: list[np.ndarray] = []
    cut_rhs: list[float] = []
    found: list[Matching] = []
    certified = False
    best = None
    start = time.monotonic()
    status_log = []
    while len(found) < batch:
        left = time_limit - (time.monotonic() - start)
        if left <= 0:
            break
        cons = [LinearConstraint(csr_matrix(a), l, u) for a, l, u in rows]
        if variant == "B":
            cons.append(LinearConstraint(csr_matrix(wvec[None, :]), rc_bound - delta, np.inf))
        if cuts:
            cons.append(LinearConstraint(csr_matrix(np.vstack(cuts)), -np.inf, np.array(cut_rhs)))
        res = milp(c, constraints=cons, integrality=np.ones(nv), bounds=Bounds(lo, hi),
                   options={"time_limit": max(left, 0.01), "disp": False})
        status_log.append(int(res.status))
        if res.x is None:
            certified = res.status == 2 and not found
            break
        x = np.round(res.x[:n_x])
        m = Matching((i, s) for (i, s), v in zip(instance.edges, x) if v > 0.5)
        rc = sum(w[e] for e in m.items()) + delta
        best = rc if best is None else best
        if rc < eps:
            if variant == "A" or rc_bound >= _MAX_RC_BOUND:
                certified = variant == "A" and res.status == 0 and not found
                break
            rc_bound = min(max(10 * rc_bound, _RC_BOUND_STEP), _MAX_RC_BOUND)
            continue
        found.append(m)
        cut = np.zeros(nv)
        cut[:n_x] = np.where(x > 0.5, 1.0, -1.0)
        cuts.append(cut)
        cut_rhs.append(float(x.sum()) - 1.0)
        if res.status != 0:
            break
    return PricingResult(found, certified, best, time.monotonic() - start, {"milp_status": status_log})


def price_columns(instance: MarketInstance, duals, variant: Variant = "B", zeta: float = 1.0,
                  backend: str = "enumerate", batch: int = 1, eps_strict: float = EPS_STRICT,
                  stable_set=None, time_limit: float = 60.0, model: CutoffModel | None = None) -> PricingResult:
    """Up to ``batch`` weakly stable matchings whose reduced cost is at least ``eps_strict``.

    Variant A ranks candidates by reduced cost; variant B by rank minus the
    normalized dual bonus.
    """
    if variant not in ("A", "B"):
        raise MarketError(f"unknown pricing variant {variant!r}")
    t0 = time.monotonic()
    if backend == "enumerate":
        res = _price_enumerate(instance, duals, variant, zeta, batch, eps_strict, stable_set)
    elif backend == "mip":
        res = _price_mip(instance, duals, variant, zeta, batch, eps_strict, time_limit, model)
    else:
        raise SolverError(f"unknown pricing backend {backend!r}")
    res.elapsed = time.monotonic() - t0
    return res


def solve_pricing(instance: MarketInstance, duals, variant: Variant = "B", zeta: float = 1.0,
                  backend: str = "enumerate", **kw) -> Matching | None:
    cols = price_columns(instance, duals, variant, zeta, backend, batch=1, **kw).columns
    return cols[0] if cols else None
