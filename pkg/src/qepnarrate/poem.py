"""Physical operator object store.

Objects describe the physical operators of one engine ("source"): their
natural-language descriptions, arity, whether a condition clause is
narrated, and which critical operators they support as auxiliaries.
"""
from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import (
    CorruptStore,
    DanglingTarget,
    DuplicateOperator,
    InvariantViolation,
    IoFailure,
    MissingMandatoryAttribute,
    NotFound,
    UnknownAttribute,
    UnknownSource,
)

OP_TYPES = ("unary", "binary")

# attribute names visible to queries, in relation column order
ATTRIBUTES = ("oid", "source", "name", "alias", "type", "defn", "desc", "cond", "target")
ASSIGNABLE = ("alias", "type", "defn", "desc", "cond", "target")


@dataclass(frozen=True)
class PhysicalOperatorObject:
    oid: int
    source: str
    name: str
    op_type: str
    descriptions: tuple[str, ...]
    alias: Optional[str] = None
    defn: Optional[str] = None
    cond: bool = False
    targets: tuple[str, ...] = ()

    @property
    def display_name(self) -> str:
        return self.alias or self.name

    def value(self, attr: str):
        """Attribute value as seen by predicates and projections."""
        if attr == "type":
            return self.op_type
        if attr == "desc":
            return list(self.descriptions)
        if attr == "target":
            return list(self.targets)
        if attr in ("oid", "source", "name", "alias", "defn", "cond"):
            return getattr(self, attr)
        raise UnknownAttribute(attr)


@dataclass(frozen=True)
class Predicate:
    """``attr = value`` or ``attr LIKE pattern``; ``None`` means true."""

    attr: str
    op: str
    value: Optional[str]

    def __post_init__(self):
        if self.attr not in ATTRIBUTES:
            raise UnknownAttribute(self.attr)
        if self.op not in ("=", "LIKE"):
            raise ValueError(f"unsupported predicate operator {self.op!r}")

    def matches(self, obj: PhysicalOperatorObject) -> bool:
        value = obj.value(self.attr)
        values = value if isinstance(value, list) else [value]
        if self.value is None:
            return any(v is None for v in values) or values == []
        if self.op == "=":
            return any(_as_text(v) == self.value for v in values if v is not None)
        regex = like_to_regex(self.value)
        return any(regex.fullmatch(_as_text(v)) for v in values if v is not None)


def _as_text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def like_to_regex(pattern: str) -> re.Pattern:
    parts = []
    for ch in pattern:
        if ch == "%":
            parts.append(".*")
        elif ch == "_":
            parts.append(".")
        else:
            parts.append(re.escape(ch))
    return re.compile("".join(parts), re.DOTALL)


def parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if value is None:
        return False
    text = str(value).strip().lower()
    if text in ("true", "t", "1", "yes"):
        return True
    if text in ("false", "f", "0", "no", ""):
        return False
    raise InvariantViolation(f"cond must be boolean, got {value!r}")


class PoemStore:
    """Mutable collection of operator objects keyed by (source, name).

    Objects themselves are frozen; mutations replace them wholesale.
    """

    def __init__(self):
        self._objects: dict[tuple[str, str], PhysicalOperatorObject] = {}
        self._next_oid = 1

    def __eq__(self, other):
        if not isinstance(other, PoemStore):
            return NotImplemented
        return self._objects == other._objects and self._next_oid == other._next_oid

    def __len__(self):
        return len(self._objects)

    def __iter__(self):
        return iter(sorted(self._objects.values(), key=lambda o: o.oid))

    def copy(self) -> "PoemStore":
        clone = PoemStore()
        clone._objects = dict(self._objects)
        clone._next_oid = self._next_oid
        return clone

    @property
    def sources(self) -> set[str]:
        return {source for source, _ in self._objects}

    # -- definition -------------------------------------------------------

    def create_operator(
        self,
        source: str,
        name: str,
        op_type: Optional[str],
        descriptions: Iterable[str],
        alias: Optional[str] = None,
        defn: Optional[str] = None,
        cond=False,
        targets: Iterable[str] = (),
    ) -> int:
        name = _normalize_name(name)
        descriptions = tuple(descriptions)
        targets = tuple(_normalize_name(t) for t in targets)
        if (source, name) in self._objects:
            raise DuplicateOperator(f"{source}.{name} already exists")
        if op_type is None:
            raise MissingMandatoryAttribute("type")
        if op_type not in OP_TYPES:
            raise InvariantViolation(f"type must be unary or binary, got {op_type!r}")
        if not descriptions:
            raise MissingMandatoryAttribute("desc")
        for target in targets:
            self._check_target(source, name, target)
        obj = PhysicalOperatorObject(
            oid=self._next_oid,
            source=source,
            name=name,
            op_type=op_type,
            descriptions=descriptions,
            alias=alias or None,
            defn=defn,
            cond=parse_bool(cond),
            targets=targets,
        )
        self._objects[(source, name)] = obj
        self._next_oid += 1
        return obj.oid

    def _check_target(self, source, name, target):
        if target == name:
            raise InvariantViolation(f"{source}.{name} cannot target itself")
        if (source, target) not in self._objects:
            raise DanglingTarget(f"{source}.{name} targets unknown operator {target!r}")

    # -- retrieval --------------------------------------------------------

    def get_operator(self, source: str, name: str) -> PhysicalOperatorObject:
        try:
            return self._objects[(source, name)]
        except KeyError:
            raise NotFound(f"{source}.{name}") from None

    def query_operators(self, source: str, predicate: Optional[Predicate] = None):
        if source not in self.sources:
            raise UnknownSource(source)
        hits = [
            obj for (src, _), obj in self._objects.items()
            if src == source and (predicate is None or predicate.matches(obj))
        ]
        return sorted(hits, key=lambda o: o.name)

    def auxiliary_pairs(self, source: str) -> set[tuple[str, str]]:
        return {
            (obj.name, target)
            for (src, _), obj in self._objects.items() if src == source
            for target in obj.targets
        }

    # -- manipulation -----------------------------------------------------

    def update_operators(self, source: str, assignments: dict, predicate: Optional[Predicate] = None) -> int:
        """Apply ``assignments`` (attr -> value) to every matching object.

        ``desc`` and ``target`` accept a string or a list of strings;
        ``None`` clears optional attributes. The update is all-or-nothing.
        """
        for attr in assignments:
            if attr not in ASSIGNABLE:
                raise UnknownAttribute(attr)
        matched = self.query_operators(source, predicate)
        staged = dict(self._objects)
        for obj in matched:
            staged[(source, obj.name)] = _apply(obj, assignments)
        for obj in matched:
            new = staged[(source, obj.name)]
            for target in new.targets:
                if target == new.name:
                    raise InvariantViolation(f"{source}.{new.name} cannot target itself")
                if (source, target) not in staged:
                    raise InvariantViolation(f"{source}.{new.name} targets unknown operator {target!r}")
        self._objects = staged
        return len(matched)

    # -- persistence ------------------------------------------------------

    def to_document(self) -> dict:
        rows, descs = [], []
        for obj in self:
            rows.append({
                "oid": obj.oid,
                "source": obj.source,
                "name": obj.name,
                "alias": obj.alias,
                "type": obj.op_type,
                "defn": obj.defn,
                "cond": obj.cond,
                "targets": list(obj.targets),
            })
            descs.extend({"oid": obj.oid, "desc": d} for d in obj.descriptions)
        return {"poperators": rows, "pdesc": descs}

    @classmethod
    def from_document(cls, doc) -> "PoemStore":
        if not isinstance(doc, dict) or "poperators" not in doc or "pdesc" not in doc:
            raise CorruptStore("store document needs 'poperators' and 'pdesc'")
        by_oid: dict[int, list[str]] = {}
        try:
            for row in doc["pdesc"]:
                by_oid.setdefault(row["oid"], []).append(row["desc"])
            store = cls()
            objects = {}
            for row in doc["poperators"]:
                oid = row["oid"]
                if row["type"] not in OP_TYPES:
                    raise CorruptStore(f"bad type for oid {oid}: {row['type']!r}")
                obj = PhysicalOperatorObject(
                    oid=oid,
                    source=row["source"],
                    name=row["name"],
                    op_type=row["type"],
                    descriptions=tuple(by_oid.get(oid, ())),
                    alias=row["alias"],
                    defn=row["defn"],
                    cond=bool(row["cond"]),
                    targets=tuple(row["targets"] or ()),
                )
                key = (obj.source, obj.name)
                if key in objects or any(o.oid == oid for o in objects.values()):
                    raise CorruptStore(f"duplicate operator {key} / oid {oid}")
                if not obj.descriptions:
                    raise CorruptStore(f"operator {key} has no description")
                objects[key] = obj
        except (KeyError, TypeError) as exc:
            raise CorruptStore(f"malformed store document: {exc}") from None
        known = {o.oid for o in objects.values()}
        if set(by_oid) - known:
            raise CorruptStore("pdesc rows reference unknown oids")
        for (source, name), obj in objects.items():
            for target in obj.targets:
                if target == name or (source, target) not in objects:
                    raise CorruptStore(f"{source}.{name} has dangling target {target!r}")
        store._objects = objects
        store._next_oid = max(known, default=0) + 1
        return store


def _normalize_name(name: str) -> str:
    name = name.strip().lower()
    if not name:
        raise InvariantViolation("operator name must be non-empty")
    return name


def _as_list(value) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,)
    return tuple(value)


def _apply(obj: PhysicalOperatorObject, assignments: dict) -> PhysicalOperatorObject:
    changes = {}
    for attr, value in assignments.items():
        if attr == "desc":
            descriptions = _as_list(value)
            if not descriptions:
                raise InvariantViolation(f"{obj.name}: desc cannot be emptied")
            changes["descriptions"] = descriptions
        elif attr == "target":
            changes["targets"] = tuple(_normalize_name(t) for t in _as_list(value))
        elif attr == "type":
            if value not in OP_TYPES:
                raise InvariantViolation(f"type must be unary or binary, got {value!r}")
            changes["op_type"] = value
        elif attr == "cond":
            changes["cond"] = parse_bool(value)
        else:
            if isinstance(value, (list, tuple)):
                if len(value) != 1:
                    raise InvariantViolation(f"{attr} takes a single value")
                value = value[0]
            changes[attr] = value or None if attr == "alias" else value
    return dataclasses.replace(obj, **changes)


def save_store(store: PoemStore, path) -> None:
    try:
        Path(path).write_text(json.dumps(store.to_document(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_store(path) -> PoemStore:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptStore(f"not JSON: {exc}") from None
    return PoemStore.from_document(doc)


# (name, type, cond, description, targets); criticals come before the
# auxiliaries pointing at them so every target resolves on creation.
DEFAULT_CATALOG = (
    ("seq scan", "unary", True, "perform sequential scan", ()),
    ("parallel seq scan", "unary", True, "perform parallel sequential scan", ()),
    ("index scan", "unary", True, "perform index scan", ()),
    ("bitmap heap scan", "unary", True, "perform bitmap heap scan", ()),
    ("hashjoin", "binary", True, "perform hash join", ()),
    ("mergejoin", "binary", True, "perform merge join", ()),
    ("nested loop join", "binary", True, "perform nested loop join", ()),
    ("aggregate", "unary", True, "perform aggregate", ()),
    ("unique", "unary", False, "perform duplicate removal", ()),
    ("limit", "unary", True, "limit the result from", ()),
    ("materialize", "unary", False, "materialize", ()),
    ("bitmap index scan", "unary", True, "scan index", ("bitmap heap scan",)),
    ("hash", "unary", False, "hash", ("hashjoin",)),
    ("sort", "unary", False, "sort", ("mergejoin", "aggregate", "unique")),
)


def seed_default_catalog(store: PoemStore, source: str = "pg") -> int:
    for name, op_type, cond, desc, targets in DEFAULT_CATALOG:
        store.create_operator(source, name, op_type, [desc], cond=cond, targets=targets)
    return len(DEFAULT_CATALOG)


def default_store() -> PoemStore:
    store = PoemStore()
    seed_default_catalog(store)
    return store
