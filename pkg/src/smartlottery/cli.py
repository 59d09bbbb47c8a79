"""Command-line entry point: ``smartlottery <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from dataclasses import asdict
from pathlib import Path
from typing import Any

from .errors import MarketError
from .experiments import Cell, MethodParams, paired_draws, report_fields, run_method, sweep, write_table
from .instance_gen import GenConfig, estonian_priorities, generate, read_records
from .io import (
    dump_json,
    load_instance,
    load_random_matching,
    number_to_json,
    parse_lottery,
    save_instance,
    serialize_lottery,
    serialize_random_matching,
)
from .lottery_opt import PirmesConfig, draw, run_pirmes
from .market import Matching, average_rank
from .mechanisms import exact_da_distribution, sample_da_distribution
from .oracle import enumerate_weakly_stable, exact_constrained_optimum, is_ex_post_stable
from .sic import resolve_with_trace

log = logging.getLogger("smartlottery")


def _out_dir(path: str) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_matching(path: str) -> Matching:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and "matching" in data:
        data = data["matching"]
    if isinstance(data, list):
        return Matching((str(e["student"]), str(e["school"])) for e in data)
    return Matching({str(i): str(s) for i, s in data.items()})


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = GenConfig(args.n, args.m, args.alpha, args.beta, args.seed, args.capacity_rule)
    save_instance(generate(cfg), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    inst = estonian_priorities(read_records(args.records), args.sib, args.dist)
    save_instance(inst, args.out)
    print(f"wrote {args.out} ({inst.n_students} students, {len(inst.schools)} schools)")
    return 0


def cmd_da_sample(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    if args.exact:
        dist = exact_da_distribution(inst, args.mode)
    else:
        dist = sample_da_distribution(inst, args.mode, args.n, args.seed)
    out = _out_dir(args.out)
    dump_json({**serialize_lottery(dist), "provenance": dist.provenance}, out / "distribution.json")
    dump_json(serialize_random_matching(dist.prob), out / "random_matching.json")
    print(f"{len(dist.support)} distinct matchings, average rank {float(average_rank(inst, dist.prob)):.6f}")
    return 0


def cmd_ee(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    m = _load_matching(args.matching)
    print(f"start: average rank {average_rank(inst, m)}")
    final, trace = resolve_with_trace(inst, m, args.policy, args.seed)
    for k, step in enumerate(trace, 1):
        cyc = "; ".join(" -> ".join(c.students) for c in step.cycles)
        print(f"step {k}: eliminated {cyc}; average rank {step.average_rank}")
    print(f"final: {json.dumps(dict(final))}")
    return 0


def _base_distribution(args: argparse.Namespace, inst):
    if args.base.startswith("file:"):
        return load_random_matching(args.base[5:]), None
    base = args.base.upper()
    if base not in ("DA", "EE", "EADA"):
        raise MarketError(f"unknown base {args.base!r}")
    d = paired_draws(inst, args.samples, args.seed, exact=args.exact)
    return d.random_matching(base), d


def cmd_pirmes(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    cfg = PirmesConfig(pricing=args.pricing, variant=args.variant, equal_treatment=args.equal_treatment,
                       time_limit=args.time_limit, lp_backend=args.lp_backend)
    p, draws = _base_distribution(args, inst)
    warm = draws.warm_support() if draws is not None else ()
    q, sol = run_pirmes(inst, p, warm, cfg)
    out = _out_dir(args.out)
    dump_json(serialize_random_matching(q), out / "q.json")
    dump_json(serialize_random_matching(p), out / "base.json")
    dump_json(serialize_lottery(sol), out / "decomposition.json")
    dump_json({"mu": [{"student": i, "school": s, "value": v} for (i, s), v in sol.mu.items()],
               "delta": sol.delta,
               "eta": [{"i": i, "j": j, "school": s, "value": v} for (i, j, s), v in sol.eta.items()]},
              out / "duals.json")
    dump_json([asdict(r) for r in sol.log], out / "iterations.json")
    summary: dict[str, Any] = {"status": sol.status, "rounds": sol.rounds,
                               "base_average_rank": float(average_rank(inst, p)),
                               "average_rank": sol.average_rank, "support_size": len(sol.support)}
    if args.draw:
        summary["drawn"] = dict(draw(sol, args.seed))
    dump_json(summary, out / "summary.json")
    print(json.dumps(summary, indent=2))
    return 0 if sol.status != "artificial-active" else 2


def cmd_oracle(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    if args.check == "enumerate":
        ss = enumerate_weakly_stable(inst)
        print(f"{len(ss)} weakly stable matchings")
        for m in ss.matchings:
            print(json.dumps(dict(m)))
        return 0
    if not args.p:
        raise MarketError(f"--check {args.check} needs --p")
    text = Path(args.p).read_text()
    data = json.loads(text)
    p = (parse_lottery(data).random_matching() if data.get("format") == "smartlottery/lottery"
         else load_random_matching(args.p))
    if args.check == "ex-post":
        ok, witness = is_ex_post_stable(inst, p)
        print(f"ex-post stable: {ok}")
        if witness is not None:
            print(json.dumps({"support": [dict(m) for m in witness.support],
                              "weights": [number_to_json(w) for w in witness.weights]}, indent=2))
        return 0 if ok else 1
    rep = exact_constrained_optimum(inst, p)
    print(f"constrained-sd-efficient: {rep.constrained_sd_efficient}")
    print(f"base average rank {rep.base_average_rank:.6f}, optimum {rep.average_rank:.6f} ({rep.comparison.value})")
    return 0 if rep.constrained_sd_efficient else 1


def _parse_grid(text: str) -> list[Cell]:
    """``n:m:alpha:beta`` cells separated by commas; alpha and beta accept ``a/b/c`` alternatives."""
    cells = []
    for item in text.split(","):
        parts = item.strip().split(":")
        if len(parts) != 4:
            raise MarketError(f"grid cell {item!r} is not n:m:alpha:beta")
        n, m = int(parts[0]), int(parts[1])
        for a in parts[2].split("/"):
            for b in parts[3].split("/"):
                cells.append(Cell(n, m, float(a), float(b)))
    return cells


def _parse_seeds(text: str) -> list[int]:
    if "-" in text and "," not in text:
        lo, hi = text.split("-")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",")]


def cmd_experiment(args: argparse.Namespace) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    params = MethodParams(n_samples=args.samples, extra_samples=args.extra_samples,
                          pirmes=PirmesConfig(time_limit=args.time_limit, pricing=args.pricing))
    rows = sweep(_parse_grid(args.grid), methods, _parse_seeds(args.seeds), params)
    out = _out_dir(args.out)
    write_table(rows, out / "results.tsv")
    lines = []
    for r in rows:
        lines.append(f"n={r['n']} m={r['m']} alpha={r['alpha']} beta={r['beta']} {r['method']:<18} "
                     f"avg rank {r['average_rank_mean']:.4f}  improving {r['fraction_improving_mean']:.3f}  "
                     f"ok {r['instances']}  failed {r['failed']}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if all(r["failed"] == 0 for r in rows) else 1


def cmd_method(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    params = MethodParams(n_samples=args.samples, exact=args.exact,
                          pirmes=PirmesConfig(time_limit=args.time_limit))
    _, rep, _ = run_method(inst, args.method, params, args.seed)
    print(json.dumps({k: getattr(rep, k) for k in report_fields()}, indent=2, default=str))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smartlottery", description="sd-improving school-choice lotteries")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic market")
    g.add_argument("--n", type=int, default=40)
    g.add_argument("--m", type=int, default=8)
    g.add_argument("--alpha", type=float, default=0.0)
    g.add_argument("--beta", type=float, default=0.2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--capacity-rule", choices=("equal", "ceil"), default="equal")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    g = sub.add_parser("ingest", help="build an instance from admission records")
    g.add_argument("--records", required=True)
    g.add_argument("--sib", choices=("sib", "nosib"), default="sib")
    g.add_argument("--dist", choices=("reldist", "dist3"), default="reldist")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_ingest)

    g = sub.add_parser("da-sample", help="DA lottery under random tie-breaking")
    g.add_argument("--instance", required=True)
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mode", choices=("single", "multiple"), default="single")
    g.add_argument("--exact", action="store_true", help="enumerate every tie-breaking")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_da_sample)

    g = sub.add_parser("ee", help="resolve stable improvement cycles and print the trace")
    g.add_argument("--instance", required=True)
    g.add_argument("--matching", required=True)
    g.add_argument("--policy", choices=("first-found", "greedy"), default="first-found")
    g.add_argument("--seed", type=int, default=None)
    g.set_defaults(func=cmd_ee)

    g = sub.add_parser("pirmes", help="sd-improve a random matching by column generation")
    g.add_argument("--instance", required=True)
    g.add_argument("--base", default="da", help="da, ee, eada or file:PATH")
    g.add_argument("--samples", type=int, default=1000)
    g.add_argument("--exact", action="store_true", help="enumerate tie-breakings instead of sampling")
    g.add_argument("--pricing", choices=("auto", "enumerate", "mip"), default="auto")
    g.add_argument("--variant", choices=("A", "B"), default="B")
    g.add_argument("--lp-backend", choices=("auto", "simplex", "highs"), default="auto")
    g.add_argument("--equal-treatment", action="store_true")
    g.add_argument("--time-limit", type=float, default=600.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--draw", action="store_true", help="also draw one matching from the decomposition")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_pirmes)

    g = sub.add_parser("oracle", help="exact checks on small instances")
    g.add_argument("--instance", required=True)
    g.add_argument("--check", choices=("ex-post", "csd-eff", "enumerate"), required=True)
    g.add_argument("--p")
    g.set_defaults(func=cmd_oracle)

    g = sub.add_parser("method", help="evaluate one method on one instance")
    g.add_argument("--instance", required=True)
    g.add_argument("--method", required=True, help="DA, EE, EADA or X-PIRMES-heur|CG|N")
    g.add_argument("--samples", type=int, default=1000)
    g.add_argument("--exact", action="store_true")
    g.add_argument("--time-limit", type=float, default=600.0)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_method)

    g = sub.add_parser("experiment", help="sweep methods over generated markets")
    g.add_argument("--grid", required=True, help="n:m:alpha:beta cells, e.g. 40:8:0/0.4/0.8:0.2")
    g.add_argument("--methods", default="DA,EE,DA-PIRMES-heur,DA-PIRMES-CG")
    g.add_argument("--seeds", default="0-9", help="comma list or lo-hi range")
    g.add_argument("--samples", type=int, default=1000)
    g.add_argument("--extra-samples", type=int, default=1000)
    g.add_argument("--pricing", choices=("auto", "enumerate", "mip"), default="auto")
    g.add_argument("--time-limit", type=float, default=600.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_experiment)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MarketError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
