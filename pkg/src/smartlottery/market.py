"""Market instances, matchings, random matchings and the stability / dominance vocabulary.

Students and schools are identified by opaque string ids.  A school's priority
list is an ordered tuple of indifference classes; class 1 is the highest
priority.  Preference lists are strict and contain only acceptable schools.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Union

from .errors import InvalidMatchingError, MarketError, NotAnEdgeError

Number = Union[Fraction, float, int]
Edge = tuple[str, str]

EPS_SD = 1e-9
DEFAULT_DUMMY = "dummy"


def _as_class(entry: Any) -> tuple[str, ...]:
    if isinstance(entry, str):
        return (entry,)
    return tuple(str(x) for x in entry)


@dataclass(frozen=True)
class MarketInstance:
    """A many-to-one school choice market.

    ``priorities[s]`` lists indifference classes from highest to lowest
    priority.  ``dummy_school`` is set on instances produced by
    :func:`augment_with_dummy`.
    """

    students: tuple[str, ...]
    schools: tuple[str, ...]
    capacity: Mapping[str, int]
    preferences: Mapping[str, tuple[str, ...]]
    priorities: Mapping[str, tuple[tuple[str, ...], ...]]
    dummy_school: str | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        set_ = object.__setattr__
        set_(self, "students", tuple(str(i) for i in self.students))
        set_(self, "schools", tuple(str(s) for s in self.schools))
        set_(self, "capacity", {str(s): c for s, c in self.capacity.items()})
        prefs = {str(i): tuple(str(s) for s in lst) for i, lst in self.preferences.items()}
        for i in self.students:
            prefs.setdefault(i, ())
        set_(self, "preferences", prefs)
        prio = {str(s): tuple(_as_class(c) for c in classes) for s, classes in self.priorities.items()}
        for s in self.schools:
            prio.setdefault(s, ())
        set_(self, "priorities", prio)
        set_(self, "metadata", dict(self.metadata))

    @classmethod
    def build(
        cls,
        preferences: Mapping[Any, Sequence[Any]],
        priorities: Mapping[Any, Sequence[Any]],
        capacity: Mapping[Any, int] | int = 1,
        students: Sequence[Any] | None = None,
        schools: Sequence[Any] | None = None,
        **kwargs: Any,
    ) -> MarketInstance:
        """Convenience constructor; ids are stringified, capacity may be a scalar."""
        students = [str(i) for i in (students if students is not None else preferences)]
        schools = [str(s) for s in (schools if schools is not None else priorities)]
        if isinstance(capacity, int):
            cap = {s: capacity for s in schools}
        else:
            cap = {str(s): int(c) for s, c in capacity.items()}
        return cls(
            students=tuple(students),
            schools=tuple(schools),
            capacity=cap,
            preferences={str(i): [str(s) for s in lst] for i, lst in preferences.items()},
            priorities={str(s): list(c) for s, c in priorities.items()},
            **kwargs,
        )

    @property
    def n_students(self) -> int:
        return len(self.students)

    @cached_property
    def student_index(self) -> dict[str, int]:
        return {i: k for k, i in enumerate(self.students)}

    @cached_property
    def school_index(self) -> dict[str, int]:
        return {s: k for k, s in enumerate(self.schools)}

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        """Edges ordered by student, then by preference rank."""
        return tuple((i, s) for i in self.students for s in self.preferences[i])

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def rank(self) -> dict[Edge, int]:
        return {(i, s): r for i in self.students for r, s in enumerate(self.preferences[i], 1)}

    @cached_property
    def prio_class(self) -> dict[Edge, int]:
        out: dict[Edge, int] = {}
        for s, classes in self.priorities.items():
            for r, cls_ in enumerate(classes, 1):
                for i in cls_:
                    out[(i, s)] = r
        return out

    @cached_property
    def n_classes(self) -> dict[str, int]:
        return {s: len(self.priorities[s]) for s in self.schools}

    @cached_property
    def applicants(self) -> dict[str, tuple[str, ...]]:
        """Students who list each school, in student order."""
        out: dict[str, list[str]] = {s: [] for s in self.schools}
        for i in self.students:
            for s in self.preferences[i]:
                out.setdefault(s, []).append(i)
        return {s: tuple(v) for s, v in out.items()}

    def unassigned_rank(self, i: str) -> int:
        """Rank charged for being unassigned: one past the last real school."""
        n = len(self.preferences[i])
        return n if self.dummy_school is not None else n + 1

    @property
    def is_strict(self) -> bool:
        return all(len(c) == 1 for classes in self.priorities.values() for c in classes)


class Matching(Mapping[str, str]):
    """Partial assignment student -> school.  Hashable; equality is by content."""

    __slots__ = ("_assign", "_hash")

    def __init__(self, assignment: Mapping[str, str] | Iterable[tuple[str, str]] = ()) -> None:
        pairs = assignment.items() if isinstance(assignment, Mapping) else assignment
        self._assign = {str(i): str(s) for i, s in pairs if s is not None}
        self._hash: int | None = None

    def __getitem__(self, i: str) -> str:
        return self._assign[i]

    def __iter__(self) -> Iterator[str]:
        return iter(self._assign)

    def __len__(self) -> int:
        return len(self._assign)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._assign.items()))
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Matching):
            return self._assign == other._assign
        if isinstance(other, Mapping):
            return self._assign == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"({i},{s})" for i, s in self._assign.items())
        return f"Matching({{{inner}}})"

    def school_of(self, i: str) -> str | None:
        return self._assign.get(i)

    def load(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s in self._assign.values():
            out[s] = out.get(s, 0) + 1
        return out

    def students_at(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for i, s in self._assign.items():
            out.setdefault(s, []).append(i)
        return out

    def edges(self) -> frozenset[Edge]:
        return frozenset(self._assign.items())

    def without(self, school: str) -> Matching:
        return Matching((i, s) for i, s in self._assign.items() if s != school)


class RandomMatching(Mapping[Edge, Number]):
    """Per-edge assignment probabilities; zero entries are not stored."""

    __slots__ = ("_prob",)

    def __init__(self, prob: Mapping[Edge, Number] | Iterable[tuple[Edge, Number]] = ()) -> None:
        items = prob.items() if isinstance(prob, Mapping) else prob
        self._prob: dict[Edge, Number] = {}
        for (i, s), v in items:
            if v != 0:
                self._prob[(str(i), str(s))] = v

    @classmethod
    def from_matching(cls, m: Mapping[str, str]) -> RandomMatching:
        return cls({(i, s): Fraction(1) for i, s in m.items()})

    @classmethod
    def from_lottery(cls, support: Iterable[Mapping[str, str]], weights: Iterable[Number]) -> RandomMatching:
        acc: dict[Edge, Number] = {}
        for m, w in zip(support, weights):
            if w == 0:
                continue
            for e in m.items():
                acc[e] = acc.get(e, 0) + w
        return cls(acc)

    def __getitem__(self, e: Edge) -> Number:
        return self._prob.get(e, 0)

    def __iter__(self) -> Iterator[Edge]:
        return iter(self._prob)

    def __len__(self) -> int:
        return len(self._prob)

    def __contains__(self, e: object) -> bool:
        return e in self._prob

    def __repr__(self) -> str:
        return f"RandomMatching({self._prob!r})"

    def mass(self, i: str) -> Number:
        return sum((v for (j, _), v in self._prob.items() if j == i), 0)

    def load(self, s: str) -> Number:
        return sum((v for (_, t), v in self._prob.items() if t == s), 0)

    def max_abs_diff(self, other: Mapping[Edge, Number]) -> float:
        keys = set(self._prob) | set(other)
        return max((abs(float(self[e]) - float(other.get(e, 0))) for e in keys), default=0.0)

    def isclose(self, other: Mapping[Edge, Number], tol: float = EPS_SD) -> bool:
        return self.max_abs_diff(other) <= tol


@dataclass
class Lottery:
    """Explicit lottery over matchings; weights are nonnegative and sum to one."""

    support: list[Matching]
    weights: list[Number]

    def random_matching(self) -> RandomMatching:
        return RandomMatching.from_lottery(self.support, self.weights)

    def positive(self, tol: float = 0.0) -> list[tuple[Matching, Number]]:
        return [(m, w) for m, w in zip(self.support, self.weights) if w > tol]

    def draw(self, rng: Any) -> Matching:
        """Draw one matching with probability equal to its weight (``rng``: numpy Generator)."""
        w = [float(x) for x in self.weights]
        total = sum(w)
        u = rng.random() * total
        acc = 0.0
        for m, x in zip(self.support, w):
            acc += x
            if u < acc:
                return m
        return self.support[-1]


class SdComparison(str, enum.Enum):
    STRICTLY_DOMINATES = "strictly-dominates"
    EQUAL = "equal"
    WEAKLY_DOMINATES = "weakly-dominates-not-strictly"
    INCOMPARABLE = "incomparable"

    @property
    def weakly_dominates(self) -> bool:
        return self is not SdComparison.INCOMPARABLE


# ---------------------------------------------------------------------------
# validation and basic lookups


def validate(instance: MarketInstance) -> list[str]:
    """Return human-readable invariant violations; empty iff the instance is valid."""
    out: list[str] = []
    if len(set(instance.students)) != len(instance.students):
        out.append("duplicate student ids")
    if len(set(instance.schools)) != len(instance.schools):
        out.append("duplicate school ids")
    students, schools = set(instance.students), set(instance.schools)

    for s in instance.schools:
        c = instance.capacity.get(s)
        if c is None:
            out.append(f"school {s}: missing capacity")
        elif not isinstance(c, int) or c < 1:
            out.append(f"school {s}: capacity {c!r} is not a positive integer")

    for i in instance.preferences:
        if i not in students:
            out.append(f"preferences given for unknown student {i}")
    for i in instance.students:
        lst = instance.preferences[i]
        if len(set(lst)) != len(lst):
            out.append(f"student {i}: duplicate schools in preference list")
        for s in lst:
            if s not in schools:
                out.append(f"student {i}: unknown school {s} in preference list")

    for s, classes in instance.priorities.items():
        if s not in schools:
            out.append(f"priorities given for unknown school {s}")
            continue
        seen: set[str] = set()
        for k, c in enumerate(classes, 1):
            if not c:
                out.append(f"school {s}: priority class {k} is empty")
            for i in c:
                if i not in students:
                    out.append(f"school {s}: unknown student {i} in priority class {k}")
                elif i in seen:
                    out.append(f"school {s}: student {i} appears in more than one priority class")
                seen.add(i)
        listed = set(instance.applicants.get(s, ()))
        for i in sorted(listed - seen, key=instance.student_index.get):
            out.append(f"school {s}: student {i} lists it but is missing from its priority classes")
        for i in sorted((seen & students) - listed, key=instance.student_index.get):
            out.append(f"school {s}: student {i} is ranked but does not list it")
    return out


def rank_of(instance: MarketInstance, i: str, s: str) -> int:
    """1-based position of ``s`` in student ``i``'s preference list."""
    try:
        return instance.rank[(i, s)]
    except KeyError:
        raise NotAnEdgeError(f"({i}, {s}) is not an edge") from None


def priority_rank(instance: MarketInstance, i: str, s: str) -> int:
    """1-based index of the indifference class containing ``i`` at ``s``."""
    if (i, s) not in instance.rank:
        raise NotAnEdgeError(f"({i}, {s}) is not an edge")
    try:
        return instance.prio_class[(i, s)]
    except KeyError:
        raise NotAnEdgeError(f"student {i} is missing from the priorities of {s}") from None


def check_matching(instance: MarketInstance, m: Mapping[str, str]) -> None:
    """Raise :class:`InvalidMatchingError` unless ``m`` is a matching of the instance."""
    load: dict[str, int] = {}
    for i, s in m.items():
        if i not in instance.student_index:
            raise InvalidMatchingError(f"unknown student {i}")
        if (i, s) not in instance.rank:
            raise InvalidMatchingError(f"student {i} assigned to unacceptable school {s}")
        load[s] = load.get(s, 0) + 1
    for s, k in load.items():
        if k > instance.capacity[s]:
            raise InvalidMatchingError(f"school {s} over capacity ({k} > {instance.capacity[s]})")


# ---------------------------------------------------------------------------
# stability


def blocking_pairs(instance: MarketInstance, m: Mapping[str, str]) -> list[Edge]:
    """All pairs (i, s) where i prefers s to M(i) and s has a free seat or admits a lower-priority student."""
    check_matching(instance, m)
    load: dict[str, int] = {}
    worst: dict[str, int] = {}
    pc = instance.prio_class
    for i, s in m.items():
        load[s] = load.get(s, 0) + 1
        worst[s] = max(worst.get(s, 0), pc[(i, s)])
    out: list[Edge] = []
    for i in instance.students:
        current = m.get(i)
        for s in instance.preferences[i]:
            if s == current:
                break
            if load.get(s, 0) < instance.capacity[s] or pc[(i, s)] < worst.get(s, 0):
                out.append((i, s))
    return out


def is_weakly_stable(instance: MarketInstance, m: Mapping[str, str]) -> tuple[bool, list[Edge]]:
    bp = blocking_pairs(instance, m)
    return (not bp), bp


# ---------------------------------------------------------------------------
# random matchings


def _check_edges(instance: MarketInstance, x: Mapping[Edge, Number], name: str) -> None:
    for e in x:
        if e not in instance.rank:
            raise MarketError(f"{name} has an entry on non-edge {e}")


def cumulative(instance: MarketInstance, x: Mapping[Edge, Number], i: str) -> list[Number]:
    """Probability that ``i`` gets its k-th choice or better, for k = 1..len(pref)."""
    out: list[Number] = []
    acc: Number = 0
    for s in instance.preferences[i]:
        acc = acc + x.get((i, s), 0)
        out.append(acc)
    return out


def sd_compare(instance: MarketInstance, q: Mapping[Edge, Number], p: Mapping[Edge, Number],
               eps: float = EPS_SD) -> SdComparison:
    """Classify whether ``q`` stochastically dominates ``p`` for the students (one-directional)."""
    _check_edges(instance, q, "q")
    _check_edges(instance, p, "p")
    strict = False
    for i in instance.students:
        for cq, cp in zip(cumulative(instance, q, i), cumulative(instance, p, i)):
            d = cq - cp
            if d < -eps:
                return SdComparison.INCOMPARABLE
            if d > eps:
                strict = True
    if strict:
        return SdComparison.STRICTLY_DOMINATES
    if all(abs(q.get(e, 0) - p.get(e, 0)) <= eps for e in instance.edges):
        return SdComparison.EQUAL
    return SdComparison.WEAKLY_DOMINATES


def _as_table(x: Mapping[Any, Any]) -> Mapping[Edge, Number]:
    if isinstance(x, Matching):
        return RandomMatching.from_matching(x)
    return x


def expected_ranks(instance: MarketInstance, x: Mapping[Any, Any]) -> dict[str, Number]:
    """Per-student expected rank; missing mass is charged the unassigned rank."""
    table = _as_table(x)
    out: dict[str, Number] = {}
    rank = instance.rank
    for i in instance.students:
        total: Number = 0
        mass: Number = 0
        for s in instance.preferences[i]:
            v = table.get((i, s), 0)
            if v:
                total = total + v * rank[(i, s)]
                mass = mass + v
        out[i] = total + (1 - mass) * instance.unassigned_rank(i)
    return out


def average_rank(instance: MarketInstance, x: Mapping[Any, Any]) -> Number:
    """Mean expected rank over all students of a matching or random matching."""
    if not instance.students:
        return Fraction(0)
    total = sum(expected_ranks(instance, x).values(), Fraction(0))
    return total / len(instance.students)


# ---------------------------------------------------------------------------
# dummy school


def augment_with_dummy(instance: MarketInstance, dummy: str = DEFAULT_DUMMY) -> MarketInstance:
    """Append a worst-ranked school of capacity |N| that is acceptable to everybody.

    Every weakly stable matching of the result assigns every student.
    Idempotent on instances that already carry a dummy school.
    """
    if instance.dummy_school is not None:
        return instance
    name = dummy
    while name in instance.school_index:
        name = "_" + name
    prefs = {i: (*instance.preferences[i], name) for i in instance.students}
    prio = dict(instance.priorities)
    prio[name] = (tuple(instance.students),) if instance.students else ()
    cap = dict(instance.capacity)
    cap[name] = max(len(instance.students), 1)
    return MarketInstance(
        students=instance.students,
        schools=(*instance.schools, name),
        capacity=cap,
        preferences=prefs,
        priorities=prio,
        dummy_school=name,
        metadata=instance.metadata,
    )


def lift_matching(augmented: MarketInstance, m: Mapping[str, str]) -> Matching:
    """Send every unassigned student of ``m`` to the dummy school."""
    d = augmented.dummy_school
    if d is None:
        return m if isinstance(m, Matching) else Matching(m)
    return Matching({i: m.get(i, d) for i in augmented.students})


def lift_random_matching(augmented: MarketInstance, p: Mapping[Edge, Number]) -> RandomMatching:
    """Move each student's missing probability mass onto the dummy school."""
    d = augmented.dummy_school
    table = dict(p.items())
    if d is None:
        return RandomMatching(table)
    mass: dict[str, Number] = {}
    for (i, s), v in table.items():
        if s != d:
            mass[i] = mass.get(i, 0) + v
    for i in augmented.students:
        rest = 1 - mass.get(i, 0) - table.get((i, d), 0)
        if rest > EPS_SD:
            table[(i, d)] = table.get((i, d), 0) + rest
    return RandomMatching(table)


def drop_dummy(instance: MarketInstance, x: Mapping[Any, Any]) -> Any:
    """Remove dummy-school entries from a matching or random matching."""
    d = instance.dummy_school
    if isinstance(x, Matching):
        return x.without(d) if d else x
    return RandomMatching({e: v for e, v in x.items() if e[1] != d})
