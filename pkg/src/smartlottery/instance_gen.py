"""Synthetic markets with walk-zone priorities, and Estonian-style priorities from admission records."""

from __future__ import annotations

import csv
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import InstanceFormatError, MarketError
from .market import MarketInstance

CapacityRule = Literal["equal", "ceil"]


@dataclass(frozen=True)
class GenConfig:
    """Parameters of the random-utility market.

    ``alpha`` weights the common school quality against idiosyncratic taste,
    ``beta`` weights distance against both.  ``capacity_rule='equal'`` splits
    the students evenly (remainder to the first schools); ``'ceil'`` gives
    every school ``ceil(n/m)`` seats.
    """

    n_students: int = 40
    n_schools: int = 8
    alpha: float = 0.0
    beta: float = 0.2
    seed: int = 0
    capacity_rule: CapacityRule = "equal"

    def __post_init__(self) -> None:
        if self.n_students < 1 or self.n_schools < 1:
            raise MarketError("need at least one student and one school")
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise MarketError("alpha and beta must lie in [0, 1]")
        if self.capacity_rule not in ("equal", "ceil"):
            raise MarketError(f"unknown capacity rule {self.capacity_rule!r}")


def capacities(n: int, m: int, rule: CapacityRule = "equal") -> list[int]:
    if rule == "ceil":
        return [-(-n // m)] * m
    base, extra = divmod(n, m)
    return [base + (1 if k < extra else 0) for k in range(m)]


def generate(config: GenConfig) -> MarketInstance:
    """Draw a market: locations, then common shocks per school, then idiosyncratic shocks row-major."""
    n, m = config.n_students, config.n_schools
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    school_loc = rng.random((m, 2))
    student_loc = rng.random((n, 2))
    z0 = rng.standard_normal(m)
    z = rng.standard_normal((n, m))
    dist = np.linalg.norm(student_loc[:, None, :] - school_loc[None, :, :], axis=2)
    a, b = config.alpha, config.beta
    utility = -b * dist + (1 - b) * (a * z0[None, :] + (1 - a) * z)

    students = [f"i{k + 1}" for k in range(n)]
    schools = [f"s{k + 1}" for k in range(m)]
    prefs = {}
    for k, i in enumerate(students):
        # stable sort: equal utilities fall back to school index
        order = np.argsort(-utility[k], kind="stable")
        prefs[i] = [schools[j] for j in order]
    walk = np.argmin(dist, axis=1)
    prio = {}
    for j, s in enumerate(schools):
        zone = tuple(students[k] for k in range(n) if walk[k] == j)
        rest = tuple(students[k] for k in range(n) if walk[k] != j)
        prio[s] = [c for c in (zone, rest) if c]
    cap = dict(zip(schools, capacities(n, m, config.capacity_rule)))
    meta = {
        "generator": asdict(config),
        "walk_zone": {i: schools[walk[k]] for k, i in enumerate(students)},
        "utility_ties": int(sum(len(set(row)) < m for row in utility)),
    }
    return MarketInstance.build(prefs, prio, cap, students=students, schools=schools, metadata=meta)


# ---------------------------------------------------------------------------
# admission records


@dataclass(frozen=True)
class RawRecord:
    family: str
    choices: tuple[str, ...]
    siblings: frozenset[str] = frozenset()
    distances: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.choices:
            raise InstanceFormatError(f"family {self.family}: empty choice list")
        if len(set(self.choices)) != len(self.choices):
            raise InstanceFormatError(f"family {self.family}: duplicate choices")


SiblingRule = Literal["sib", "nosib"]
DistanceRule = Literal["reldist", "dist3"]


def estonian_priorities(records: Sequence[RawRecord], sibling_rule: SiblingRule, distance_rule: DistanceRule,
                        capacity: Mapping[str, int] | int | None = None,
                        schools: Sequence[str] | None = None) -> MarketInstance:
    """Build priorities from records.

    ``reldist`` groups applicants by the rank at which they list the school;
    ``dist3`` separates those listing it in their top three from the rest.
    ``sib`` puts applicants with a sibling at the school above everybody,
    with the distance rule applied inside both layers.  Without explicit
    capacities the seats are split evenly among the schools.
    """
    sibling_rule = sibling_rule.lower()  # type: ignore[assignment]
    distance_rule = distance_rule.lower()  # type: ignore[assignment]
    if sibling_rule not in ("sib", "nosib") or distance_rule not in ("reldist", "dist3"):
        raise MarketError(f"unknown priority structure {sibling_rule}-{distance_rule}")
    seen = set()
    for r in records:
        if r.family in seen:
            raise InstanceFormatError(f"duplicate family id {r.family}")
        seen.add(r.family)
    if schools is None:
        order: dict[str, None] = {}
        for r in records:
            order.update(dict.fromkeys(r.choices))
        schools = sorted(order, key=_natural)
    keys: dict[str, dict[tuple[int, int], list[str]]] = {s: {} for s in schools}
    for r in records:
        for pos, s in enumerate(r.choices, 1):
            if s not in keys:
                raise InstanceFormatError(f"family {r.family} lists unknown school {s}")
            layer = 0 if sibling_rule == "sib" and s in r.siblings else 1
            dist = pos if distance_rule == "reldist" else (1 if pos <= 3 else 2)
            keys[s].setdefault((layer, dist), []).append(r.family)
    prio = {s: [tuple(v) for _, v in sorted(groups.items())] for s, groups in keys.items()}
    prefs = {r.family: list(r.choices) for r in records}
    if capacity is None:
        capacity = dict(zip(schools, capacities(len(records), len(schools))))
    return MarketInstance.build(prefs, prio, capacity, students=[r.family for r in records], schools=schools,
                                metadata={"priority_structure": f"{sibling_rule}-{distance_rule}"})


def _natural(s: str) -> tuple:
    head = s.rstrip("0123456789")
    tail = s[len(head):]
    return (head, int(tail) if tail else -1, s)


def read_records(path: str | Path) -> list[RawRecord]:
    """Read records from a delimited table.

    Columns: ``family``, ``choice_1`` .. ``choice_k`` (blank cells ignored),
    ``sibling_school_ids`` (``;``-separated) and ``distances``
    (``school:value`` pairs separated by ``;``).  The delimiter is sniffed.
    """
    text = Path(path).read_text()
    try:
        dialect = csv.Sniffer().sniff(text.splitlines()[0], delimiters=",\t|")
    except (csv.Error, IndexError):
        dialect = csv.excel
    reader = csv.DictReader(text.splitlines(), dialect=dialect)
    if reader.fieldnames is None or "family" not in reader.fieldnames:
        raise InstanceFormatError(f"{path}: missing 'family' column")
    choice_cols = sorted((c for c in reader.fieldnames if c.startswith("choice_")),
                         key=lambda c: int(c.split("_", 1)[1]))
    if not choice_cols:
        raise InstanceFormatError(f"{path}: no choice_<k> columns")
    out = []
    for line, row in enumerate(reader, 2):
        choices = tuple(row[c].strip() for c in choice_cols if row.get(c) and row[c].strip())
        sib = frozenset(x.strip() for x in (row.get("sibling_school_ids") or "").split(";") if x.strip())
        dists = {}
        for item in (row.get("distances") or "").split(";"):
            if not item.strip():
                continue
            try:
                k, v = item.split(":")
                dists[k.strip()] = float(v)
            except ValueError as exc:
                raise InstanceFormatError(f"{path}:{line}: bad distance entry {item!r}") from exc
        try:
            out.append(RawRecord(row["family"].strip(), choices, sib, dists))
        except InstanceFormatError as exc:
            raise InstanceFormatError(f"{path}:{line}: {exc}") from exc
    return out


def write_records(records: Iterable[RawRecord], path: str | Path) -> None:
    records = list(records)
    k = max((len(r.choices) for r in records), default=1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", *[f"choice_{j + 1}" for j in range(k)], "sibling_school_ids", "distances"])
        for r in records:
            choices = list(r.choices) + [""] * (k - len(r.choices))
            dists = ";".join(f"{s}:{d}" for s, d in r.distances.items())
            w.writerow([r.family, *choices, ";".join(sorted(r.siblings)), dists])
