"""JSON documents for instances, random matchings, lotteries and results.

Probabilities are written as ``"num/den"`` strings when exact and as plain
numbers otherwise, and are read back as ``Fraction`` or ``float`` accordingly.
"""

from __future__ import annotations

import json
import re
from collections.abc import Mapping
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import InstanceFormatError
from .market import Lottery, MarketInstance, Matching, Number, RandomMatching, validate

INSTANCE_FORMAT = "smartlottery/instance"
RANDOM_MATCHING_FORMAT = "smartlottery/random-matching"
LOTTERY_FORMAT = "smartlottery/lottery"
VERSION = 1


def _line_of(text: str | None, *needles: str) -> str:
    if not text:
        return ""
    pos = 0
    for needle in needles:
        k = text.find(needle, pos)
        if k < 0:
            break
        pos = k
    else:
        return f" (line {text.count(chr(10), 0, pos) + 1})"
    return ""


def _fail(msg: str, text: str | None = None, *needles: str) -> InstanceFormatError:
    return InstanceFormatError(msg + _line_of(text, *needles))


def _loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def number_to_json(x: Number) -> str | float | int:
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    return x


def number_from_json(x: Any) -> Number:
    if isinstance(x, bool):
        raise InstanceFormatError(f"not a number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str) and re.fullmatch(r"\s*-?\d+\s*(/\s*\d+\s*)?", x):
        return Fraction(x.replace(" ", ""))
    raise InstanceFormatError(f"not a number: {x!r}")


# ---------------------------------------------------------------------------
# instances


def serialize_instance(instance: MarketInstance) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "format": INSTANCE_FORMAT,
        "version": VERSION,
        "students": list(instance.students),
        "schools": [
            {"id": s, "capacity": instance.capacity[s], "priorities": [list(c) for c in instance.priorities[s]]}
            for s in instance.schools
        ],
        "preferences": {i: list(instance.preferences[i]) for i in instance.students},
    }
    if instance.dummy_school is not None:
        doc["dummy_school"] = instance.dummy_school
    meta = _jsonable(instance.metadata)
    if meta:
        doc["metadata"] = meta
    return doc


def _jsonable(x: Any) -> Any:
    try:
        json.dumps(x)
        return x
    except TypeError:
        if isinstance(x, Mapping):
            return {str(k): _jsonable(v) for k, v in x.items()}
        if isinstance(x, (list, tuple, set, frozenset)):
            return [_jsonable(v) for v in x]
        return str(x)


def parse_instance(doc: Mapping[str, Any] | str, check: bool = True) -> MarketInstance:
    """Build an instance from a document (dict or JSON text); errors name the offending field."""
    text = doc if isinstance(doc, str) else None
    data = _loads(doc) if isinstance(doc, str) else doc
    if not isinstance(data, Mapping):
        raise InstanceFormatError("instance document must be a JSON object")
    fmt = data.get("format", INSTANCE_FORMAT)
    if fmt != INSTANCE_FORMAT:
        raise InstanceFormatError(f"unexpected format {fmt!r}")
    if data.get("version", VERSION) != VERSION:
        raise InstanceFormatError(f"unsupported version {data.get('version')!r}")
    for key in ("students", "schools", "preferences"):
        if key not in data:
            raise InstanceFormatError(f"missing field '{key}'")
    students = data["students"]
    if not isinstance(students, list) or not all(isinstance(i, (str, int)) for i in students):
        raise _fail("'students' must be a list of ids", text, '"students"')
    schools_doc = data["schools"]
    if not isinstance(schools_doc, list):
        raise _fail("'schools' must be a list", text, '"schools"')
    schools, capacity, prio = [], {}, {}
    for k, entry in enumerate(schools_doc):
        if not isinstance(entry, Mapping) or "id" not in entry:
            raise _fail(f"schools[{k}] must be an object with an 'id'", text, '"schools"')
        s = str(entry["id"])
        where = (text, '"schools"', f'"{s}"')
        if "capacity" not in entry:
            raise _fail(f"school {s}: missing capacity", *where)
        cap = entry["capacity"]
        if isinstance(cap, bool) or not isinstance(cap, int) or cap < 0:
            raise _fail(f"school {s}: capacity must be a nonnegative integer, got {cap!r}", *where)
        classes = entry.get("priorities", [])
        if not isinstance(classes, list):
            raise _fail(f"school {s}: priorities must be a list of classes", *where)
        parsed = []
        for c in classes:
            if isinstance(c, (str, int)):
                parsed.append((str(c),))
            elif isinstance(c, list) and all(isinstance(x, (str, int)) for x in c):
                parsed.append(tuple(str(x) for x in c))
            else:
                raise _fail(f"school {s}: bad priority class {c!r}", *where)
        schools.append(s)
        capacity[s] = cap
        prio[s] = parsed
    prefs_doc = data["preferences"]
    if not isinstance(prefs_doc, Mapping):
        raise _fail("'preferences' must map student ids to school lists", text, '"preferences"')
    prefs = {}
    for i, lst in prefs_doc.items():
        if not isinstance(lst, list):
            raise _fail(f"student {i}: preference list must be a list", text, '"preferences"', f'"{i}"')
        prefs[str(i)] = [str(s) for s in lst]
    inst = MarketInstance(
        students=tuple(str(i) for i in students),
        schools=tuple(schools),
        capacity=capacity,
        preferences=prefs,
        priorities=prio,
        dummy_school=data.get("dummy_school"),
        metadata=data.get("metadata", {}),
    )
    if check:
        problems = validate(inst)
        if problems:
            raise InstanceFormatError("; ".join(problems))
    return inst


def load_instance(path: str | Path) -> MarketInstance:
    try:
        return parse_instance(Path(path).read_text())
    except InstanceFormatError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc


def save_instance(instance: MarketInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(serialize_instance(instance), indent=2) + "\n")


# ---------------------------------------------------------------------------
# random matchings and lotteries


def serialize_random_matching(p: Mapping[tuple[str, str], Number]) -> dict[str, Any]:
    return {
        "format": RANDOM_MATCHING_FORMAT,
        "version": VERSION,
        "entries": [{"student": i, "school": s, "p": number_to_json(v)} for (i, s), v in p.items() if v],
    }


def parse_random_matching(doc: Mapping[str, Any] | str) -> RandomMatching:
    data = _loads(doc) if isinstance(doc, str) else doc
    if data.get("format") == LOTTERY_FORMAT:
        return parse_lottery(data).random_matching()
    if data.get("format", RANDOM_MATCHING_FORMAT) != RANDOM_MATCHING_FORMAT or "entries" not in data:
        raise InstanceFormatError("expected a random-matching document with 'entries'")
    out: dict[tuple[str, str], Number] = {}
    for k, e in enumerate(data["entries"]):
        try:
            out[(str(e["student"]), str(e["school"]))] = number_from_json(e["p"])
        except (KeyError, TypeError) as exc:
            raise InstanceFormatError(f"entries[{k}]: needs student, school and p") from exc
    return RandomMatching(out)


def serialize_lottery(lottery: Lottery) -> dict[str, Any]:
    return {
        "format": LOTTERY_FORMAT,
        "version": VERSION,
        "support": [dict(m) for m in lottery.support],
        "weights": [number_to_json(w) for w in lottery.weights],
    }


def parse_lottery(doc: Mapping[str, Any] | str) -> Lottery:
    data = _loads(doc) if isinstance(doc, str) else doc
    if data.get("format", LOTTERY_FORMAT) != LOTTERY_FORMAT:
        raise InstanceFormatError(f"unexpected format {data.get('format')!r}")
    support = [Matching({str(i): str(s) for i, s in m.items()}) for m in data.get("support", [])]
    weights = [number_from_json(w) for w in data.get("weights", [])]
    if len(support) != len(weights):
        raise InstanceFormatError("support and weights differ in length")
    return Lottery(support, weights)


def load_random_matching(path: str | Path) -> RandomMatching:
    return parse_random_matching(Path(path).read_text())


def dump_json(obj: Any, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")
