from __future__ import annotations

import pytest

from instances import EX1_MATCHINGS, example1, example1_p, example1_q, kesten
from smartlottery.errors import MarketError
from smartlottery.experiments import (
    Cell,
    MethodParams,
    compute_metrics,
    paired_draws,
    parse_method,
    run_method,
    sweep,
    write_table,
)
from smartlottery.instance_gen import GenConfig, generate
from smartlottery.lottery_opt import PirmesConfig
from smartlottery.market import Lottery, average_rank, expected_ranks, sd_compare

EXACT = MethodParams(exact=True)


def test_metrics_example1_optimum():
    lot = Lottery([EX1_MATCHINGS["M3"], EX1_MATCHINGS["M4"]], [0.5, 0.5])
    got = compute_metrics(example1(), example1_p(), example1_q(), lot)
    assert got["fraction_improving"] == 1.0
    assert got["average_improvement"] == pytest.approx(0.125)
    assert got["expected_blocking_pairs"] == 0.0
    assert got["average_rank"] == 1.5


def test_metrics_identity():
    got = compute_metrics(example1(), example1_p(), example1_p())
    assert got["fraction_improving"] == 0 and got["average_improvement"] == 0
    assert got["expected_blocking_pairs"] is None
    with pytest.raises(MarketError):
        compute_metrics(example1(), example1_p(), example1_p(), require_blocking_pairs=True)


def test_ee_on_example1_equals_da():
    q, rep, _ = run_method(example1(), "EE", EXACT)
    assert q == example1_p()
    assert rep.fraction_improving == 0


def test_da_pirmes_cg_on_example1():
    q, rep, sol = run_method(example1(), "DA-PIRMES-CG", EXACT)
    assert rep.average_rank == pytest.approx(1.5)
    assert rep.status == "optimal" and rep.dominates_base
    assert rep.expected_blocking_pairs == 0
    assert rep.fraction_improving == 1.0


def test_da_single_sample_is_point_mass():
    q, rep, lot = run_method(example1(), "DA", MethodParams(n_samples=1), seed=3)
    assert len(lot.support) == 1 and set(q.values()) == {1}


def test_eada_on_kesten_is_unstable():
    q, rep, lot = run_method(kesten(), "EADA", EXACT)
    assert rep.expected_blocking_pairs > 0
    assert rep.fraction_improving == pytest.approx(2 / 3)
    _, rep2, _ = run_method(kesten(), "EADA-PIRMES-CG", EXACT)
    assert rep2.status == "infeasible" and not rep2.dominates_base


def test_parse_method():
    assert parse_method("DA") == ("DA", None)
    assert parse_method("EE-PIRMES-CG") == ("EE", "CG")
    assert parse_method("DA-PIRMES-500") == ("DA", "500")
    for bad in ("XX", "DA-PIRMES-foo", "DA-CG"):
        with pytest.raises(MarketError):
            parse_method(bad)


def test_paired_draws_give_sample_wise_ordering():
    inst = generate(GenConfig(15, 4, 0.3, 0.2, seed=2))
    d = paired_draws(inst, 100, seed=1)
    rank = inst.rank
    for da, ee in zip(d.outcomes("DA"), d.outcomes("EE")):
        assert all(rank[(i, ee[i])] <= rank[(i, da[i])] for i in inst.students)
    rda = expected_ranks(inst, d.random_matching("DA"))
    ree = expected_ranks(inst, d.random_matching("EE"))
    assert all(ree[i] <= rda[i] for i in inst.students)


def test_method_chain_on_generated_market():
    inst = generate(GenConfig(16, 4, 0.4, 0.2, seed=5))
    params = MethodParams(n_samples=200, pirmes=PirmesConfig(time_limit=30))
    d = paired_draws(inst, 200, seed=5)
    out = {m: run_method(inst, m, params, 5, draws=d) for m in ("DA", "EE", "DA-PIRMES-heur", "DA-PIRMES-CG",
                                                                 "EE-PIRMES-CG", "DA-PIRMES-50")}
    r = {m: v[1].average_rank for m, v in out.items()}
    assert r["DA-PIRMES-CG"] <= r["DA-PIRMES-heur"] + 1e-9 <= r["EE"] + 2e-9 <= r["DA"] + 3e-9
    assert r["DA-PIRMES-50"] <= r["DA-PIRMES-heur"] + 1e-9
    for m in ("DA-PIRMES-heur", "DA-PIRMES-CG", "EE-PIRMES-CG"):
        assert out[m][1].expected_blocking_pairs == pytest.approx(0.0)
    ee = d.random_matching("EE")
    assert sd_compare(inst, out["EE-PIRMES-CG"][0], ee, eps=1e-7).weakly_dominates


def test_sweep_single_cell_da():
    rows = sweep([Cell(10, 3, 0.2, 0.2)], ["DA"], [0], MethodParams(n_samples=50))
    assert len(rows) == 1
    inst = generate(GenConfig(10, 3, 0.2, 0.2, 0))
    da = paired_draws(inst, 50, 0).random_matching("DA")
    assert rows[0]["average_rank_mean"] == pytest.approx(float(average_rank(inst, da)))
    with pytest.raises(MarketError):
        sweep([], ["DA"], [0])


def test_sweep_is_deterministic(tmp_path):
    params = MethodParams(n_samples=50)
    grid = [Cell(10, 3, 0.0, 0.2), Cell(10, 3, 0.8, 0.2)]
    a = sweep(grid, ["DA", "EE", "DA-PIRMES-heur"], [0, 1], params)
    b = sweep(grid, ["DA", "EE", "DA-PIRMES-heur"], [0, 1], params)
    strip = lambda rows: [{k: v for k, v in r.items() if not k.startswith("runtime")} for r in rows]
    assert strip(a) == strip(b)
    write_table(a, tmp_path / "t.tsv")
    lines = (tmp_path / "t.tsv").read_text().splitlines()
    assert len(lines) == 7 and lines[0].startswith("n\tm\talpha")


def test_sweep_records_failures():
    rows = sweep([Cell(6, 2, 0.0, 0.2)], ["DA", "BOGUS"], [0], MethodParams(n_samples=10))
    assert rows[1]["failed"] == 1 and "unknown method" in rows[1]["errors"]
    assert rows[0]["failed"] == 0


def test_pirmes_lead_over_ee_grows_with_alpha():
    params = MethodParams(n_samples=200, pirmes=PirmesConfig(time_limit=10))
    rows = sweep([Cell(20, 4, 0.0, 0.2), Cell(20, 4, 0.8, 0.2)], ["EE", "DA-PIRMES-CG"], range(6), params)
    frac = {(r["alpha"], r["method"]): r["fraction_improving_mean"] for r in rows}
    gap = {a: frac[(a, "DA-PIRMES-CG")] - frac[(a, "EE")] for a in (0.0, 0.8)}
    assert gap[0.8] > gap[0.0]
