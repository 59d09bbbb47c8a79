"""Hand-built instances shared by the test modules."""

from __future__ import annotations

from fractions import Fraction

from smartlottery.market import MarketInstance, Matching, RandomMatching
from smartlottery.sic import ImprovementCycle

F = Fraction


def example1() -> MarketInstance:
    return MarketInstance.build(
        preferences={
            1: ["s1", "s3", "s4", "s2"],
            2: ["s1", "s4", "s3", "s2"],
            3: ["s2", "s3", "s4", "s1"],
            4: ["s2", "s4", "s3", "s1"],
        },
        priorities={
            "s1": [["1", "2"], "3", "4"],
            "s2": [["3", "4"], "1", "2"],
            "s3": ["2", "4", ["1", "3"]],
            "s4": ["1", "3", ["2", "4"]],
        },
    )


def m(*pairs: tuple[int, str]) -> Matching:
    return Matching((str(i), s) for i, s in pairs)


# the six matchings DA can produce on example 1, with their lottery weights
EX1_MATCHINGS = {
    "M1": m((1, "s1"), (2, "s3"), (3, "s2"), (4, "s4")),
    "M2": m((1, "s1"), (2, "s4"), (3, "s2"), (4, "s3")),
    "M3": m((1, "s1"), (2, "s4"), (3, "s3"), (4, "s2")),
    "M4": m((1, "s3"), (2, "s1"), (3, "s2"), (4, "s4")),
    "M5": m((1, "s3"), (2, "s1"), (3, "s4"), (4, "s2")),
    "M6": m((1, "s4"), (2, "s1"), (3, "s3"), (4, "s2")),
}
EX1_WEIGHTS = {"M1": F(1, 8), "M2": F(1, 8), "M3": F(1, 4), "M4": F(1, 4), "M5": F(1, 8), "M6": F(1, 8)}


def example1_p() -> RandomMatching:
    return RandomMatching.from_lottery([EX1_MATCHINGS[k] for k in EX1_WEIGHTS], EX1_WEIGHTS.values())


def example1_q() -> RandomMatching:
    return RandomMatching.from_lottery([EX1_MATCHINGS["M3"], EX1_MATCHINGS["M4"]], [F(1, 2), F(1, 2)])


def six_student() -> MarketInstance:
    """Instance on which the greedy cycle choice is not the best sequence."""
    return MarketInstance.build(
        preferences={
            1: ["s2", "s4"], 2: ["s1", "s2", "s3", "s5"], 3: ["s1", "s3", "s6"],
            4: ["s4", "s1"], 5: ["s5", "s2"], 6: ["s6", "s3"],
        },
        priorities={
            "s1": ["4", ["2", "3"]], "s2": ["5", "1", "2"], "s3": ["6", "2", "3"],
            "s4": ["1", "4"], "s5": ["2", "5"], "s6": ["3", "6"],
        },
    )


SIX_M = m((1, "s4"), (2, "s5"), (3, "s6"), (4, "s1"), (5, "s2"), (6, "s3"))
SIX_ARCS = {("1", "5"), ("2", "6"), ("2", "4"), ("3", "4"), ("4", "1"), ("5", "2"), ("6", "3")}
C1_CYCLE = ImprovementCycle(("1", "5", "2", "6", "3", "4"))
C2_CYCLE = ImprovementCycle(("1", "5", "2", "4"))
C3_CYCLE = ImprovementCycle(("3", "6"))


def fdat_example() -> MarketInstance:
    return MarketInstance.build(
        preferences={
            1: ["s1", "s3", "s4", "s2"], 2: ["s1", "s4", "s3", "s2"],
            3: ["s2", "s4", "s3", "s1"], 4: ["s2", "s3", "s4", "s1"],
            5: ["s5", "s4", "s6"], 6: ["s7", "s3", "s8"], 7: ["s5", "s6"], 8: ["s7", "s8"],
        },
        priorities={
            "s1": [["3", "4"], ["1", "2"]], "s2": [["1", "2"], ["3", "4"]],
            "s3": ["3", "2", ["1", "6"], "4"], "s4": ["4", "1", ["2", "5"], "3"],
            "s5": [["7", "5"]], "s6": ["7", "5"], "s7": [["6", "8"]], "s8": ["8", "6"],
        },
    )


FDAT_M1 = m((1, "s1"), (2, "s4"), (3, "s2"), (4, "s3"), (5, "s6"), (6, "s7"), (7, "s5"), (8, "s8"))
FDAT_M2 = m((1, "s3"), (2, "s1"), (3, "s4"), (4, "s2"), (5, "s5"), (6, "s8"), (7, "s6"), (8, "s7"))


def fdat_p_prime() -> RandomMatching:
    return RandomMatching.from_lottery([FDAT_M1, FDAT_M2], [F(1, 2), F(1, 2)])


def kesten() -> MarketInstance:
    """Three students, three unit schools; DA is Pareto-dominated by EADA's outcome."""
    return MarketInstance.build(
        preferences={1: ["s2", "s1", "s3"], 2: ["s1", "s2", "s3"], 3: ["s1", "s2", "s3"]},
        priorities={"s1": ["1", "3", "2"], "s2": ["2", "1", "3"], "s3": ["1", "2", "3"]},
    )
