from __future__ import annotations

import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings

from conftest import brute_force_stable, instances, random_instance
from instances import (
    EX1_MATCHINGS,
    FDAT_M1,
    FDAT_M2,
    SIX_M,
    example1,
    example1_p,
    example1_q,
    fdat_example,
    fdat_p_prime,
    kesten,
    m,
    six_student,
)
from smartlottery.errors import BudgetExceededError, MarketError, UnstableMatchingError
from smartlottery.lottery_opt import pirmes_heur
from smartlottery.market import MarketInstance, RandomMatching, SdComparison, average_rank, blocking_pairs
from smartlottery.mechanisms import deferred_acceptance, exact_da_distribution
from smartlottery.oracle import (
    StableSet,
    best_stable_pareto_improvement,
    enumerate_weakly_stable,
    exact_constrained_optimum,
    is_constrained_sd_efficient,
    is_ex_post_stable,
)

# regression value: exhaustive enumeration, cross-checked by the brute-force filter below
EX1_STABLE_COUNT = 8


def test_example1_stable_set():
    ss = enumerate_weakly_stable(example1())
    assert set(EX1_MATCHINGS.values()) <= set(ss.matchings)
    assert len(ss) == EX1_STABLE_COUNT
    assert set(ss.matchings) == brute_force_stable(example1())
    assert m((1, "s4"), (2, "s1"), (3, "s2"), (4, "s3")) in ss.matchings


def test_single_pair_has_one_stable_matching():
    inst = MarketInstance.build({"a": ["x"]}, {"x": ["a"]}, 1)
    assert [dict(x) for x in enumerate_weakly_stable(inst)] == [{"a": "x"}]


def test_enumeration_budget():
    inst = random_instance(random.Random(1), 9, 4, min_students=9)
    with pytest.raises(BudgetExceededError):
        enumerate_weakly_stable(inst, budget=10)


def test_ex_post_stable_example1_q():
    ok, witness = is_ex_post_stable(example1(), example1_q())
    assert ok
    assert witness.random_matching() == example1_q()
    assert all(not blocking_pairs(example1(), x) for x in witness.support)


def test_ex_post_stable_fdat_p_prime():
    inst = fdat_example()
    ok, witness = is_ex_post_stable(inst, fdat_p_prime())
    assert ok and witness.random_matching() == fdat_p_prime()
    assert not blocking_pairs(inst, FDAT_M1) and not blocking_pairs(inst, FDAT_M2)


def test_unstable_point_mass_is_not_ex_post_stable():
    bad = m((1, "s2"), (2, "s1"), (3, "s4"), (4, "s3"))
    assert blocking_pairs(example1(), bad)
    assert is_ex_post_stable(example1(), RandomMatching.from_matching(bad)) == (False, None)


def test_incomplete_stable_set_is_refused():
    ss = StableSet(example1(), [EX1_MATCHINGS["M1"]], complete=False)
    with pytest.raises(MarketError):
        is_ex_post_stable(example1(), example1_q(), ss)


def test_exact_optimum_example1():
    rep = exact_constrained_optimum(example1(), example1_p())
    assert rep.average_rank == pytest.approx(1.5)
    assert rep.comparison is SdComparison.STRICTLY_DOMINATES
    assert rep.ex_post_stable_base and not rep.constrained_sd_efficient


def test_strict_instance_optimum_is_da():
    inst = kesten()
    p = RandomMatching.from_matching(deferred_acceptance(inst))
    rep = exact_constrained_optimum(inst, p)
    assert rep.q.max_abs_diff(p) <= 1e-9
    assert rep.constrained_sd_efficient


def test_fdat_p_prime_is_constrained_efficient():
    assert is_constrained_sd_efficient(fdat_example(), fdat_p_prime())


def test_infeasible_base_is_reported():
    bad = RandomMatching.from_matching(m((1, "s2"), (2, "s1"), (3, "s4"), (4, "s3")))
    rep = exact_constrained_optimum(example1(), bad)
    assert not rep.ex_post_stable_base
    # an unstable matching can still be sd-dominated by stable ones
    assert rep.status in ("optimal", "infeasible")


def test_best_pareto_improvement_examples():
    assert average_rank(six_student(), best_stable_pareto_improvement(six_student(), SIX_M)) == F(7, 6)
    assert best_stable_pareto_improvement(example1(), EX1_MATCHINGS["M2"]) == EX1_MATCHINGS["M2"]
    m3 = EX1_MATCHINGS["M3"]
    assert best_stable_pareto_improvement(example1(), m3) == m3
    with pytest.raises(UnstableMatchingError):
        best_stable_pareto_improvement(example1(), m((1, "s1")))


@given(instances(max_students=5, max_schools=4))
def test_enumeration_matches_brute_force(inst):
    assert set(enumerate_weakly_stable(inst).matchings) == brute_force_stable(inst)


@settings(max_examples=30)
@given(instances(max_students=5, max_schools=3))
def test_optimum_bounds(inst):
    p = exact_da_distribution(inst).prob
    rep = exact_constrained_optimum(inst, p)
    assert rep.status == "optimal"
    assert rep.comparison.weakly_dominates
    heur = pirmes_heur(inst, p, exact_da_distribution(inst).support)[1]
    assert rep.average_rank <= heur.average_rank + 1e-9 <= float(average_rank(inst, p)) + 2e-9
    ok, witness = is_ex_post_stable(inst, rep.q)
    assert ok and witness.random_matching().max_abs_diff(rep.q) <= 1e-9
