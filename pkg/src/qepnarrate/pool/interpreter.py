from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Optional

from ..errors import (
    AmbiguousSubSelect,
    NotAuxiliaryCriticalPair,
    NotFound,
    PoolError,
    UnknownAttribute,
    UnknownOperatorInCompose,
)
from ..poem import ATTRIBUTES, PoemStore, Predicate
from ..templates import build_template, compose
from .ast import (
    ComposeStmt,
    Condition,
    CreateStmt,
    Literal,
    Null,
    Replace,
    SelectStmt,
    SubSelect,
    UpdateStmt,
)
from .parser import parse_script


@dataclass(frozen=True)
class Objects:
    rows: tuple[dict, ...]

    def __str__(self):
        return "\n".join(json.dumps(r, ensure_ascii=False) for r in self.rows) or "(no rows)"


@dataclass(frozen=True)
class Template:
    text: str

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class Count:
    n: int

    def __str__(self):
        return f"{self.n} updated" if self.n != 1 else "1 updated"


def _predicate(cond: Optional[Condition], source: str, alias: Optional[str] = None) -> Optional[Predicate]:
    if cond is None:
        return None
    qualifier = cond.target.qualifier
    if qualifier is not None and qualifier not in (source, alias):
        raise PoolError(f"qualifier {qualifier!r} does not name {source!r}")
    if cond.target.attr not in ATTRIBUTES:
        raise UnknownAttribute(cond.target.attr)
    return Predicate(cond.target.attr, cond.op, cond.value)


def _select(stmt: SelectStmt, store: PoemStore) -> list:
    matched = store.query_operators(stmt.source, _predicate(stmt.where, stmt.source, stmt.alias))
    attrs = ATTRIBUTES if stmt.projection == ("*",) else stmt.projection
    for attr in attrs:
        if attr not in ATTRIBUTES:
            raise UnknownAttribute(attr)
    return [{attr: obj.value(attr) for attr in attrs} for obj in matched]


def evaluate(expr, store: PoemStore):
    """Value of ``expr``: a list of strings, or ``None`` for NULL."""
    if isinstance(expr, Literal):
        return [expr.value]
    if isinstance(expr, Null):
        return None
    if isinstance(expr, SubSelect):
        sel = expr.select
        if sel.projection == ("*",) or len(sel.projection) != 1:
            raise AmbiguousSubSelect("a nested SELECT must project exactly one attribute")
        rows = _select(sel, store)
        if len(rows) != 1:
            raise AmbiguousSubSelect(f"nested SELECT matched {len(rows)} operators, expected 1")
        value = rows[0][sel.projection[0]]
        if value is None:
            return None
        if isinstance(value, list):
            return [str(v) for v in value]
        if isinstance(value, bool):
            return ["true" if value else "false"]
        return [str(value)]
    if isinstance(expr, Replace):
        inner = evaluate(expr.inner, store)
        if inner is None:
            return None
        return [v.replace(expr.old, expr.new) for v in inner]
    raise TypeError(f"not a value expression: {expr!r}")


def compose_template(
    store: PoemStore,
    names,
    source: str,
    using: Optional[Condition] = None,
    seed: int = 0,
) -> str:
    """Description template for one operator or an (auxiliary, critical) pair."""
    names = [n.lower() for n in names]
    if not 1 <= len(names) <= 2:
        raise PoolError("COMPOSE takes one operator or an (auxiliary, critical) pair")
    objs = []
    for name in names:
        try:
            objs.append(store.get_operator(source, name))
        except NotFound:
            raise UnknownOperatorInCompose(f"{source}.{name}") from None
    if len(objs) == 2 and objs[1].name not in objs[0].targets:
        raise NotAuxiliaryCriticalPair(
            f"{objs[0].name} is not an auxiliary of {objs[1].name}; the auxiliary comes first"
        )
    if using is not None:
        if using.target.attr != "desc":
            raise PoolError("USING selects on desc only")
        if using.target.qualifier is not None and using.target.qualifier not in names:
            raise UnknownOperatorInCompose(f"USING names {using.target.qualifier!r}, not in the COMPOSE list")
    rng = random.Random(seed)
    segments = []
    for obj in objs:
        applies = using is not None and (
            using.target.qualifier == obj.name or (using.target.qualifier is None and len(objs) == 1)
        )
        if applies:
            if using.value not in obj.descriptions:
                raise PoolError(f"{obj.name} has no description {using.value!r}")
            desc = using.value
        else:
            desc = rng.choice(obj.descriptions)
        segments.append(build_template(obj, desc))
    return compose(segments)


def execute(stmt, store: PoemStore, seed: int = 0):
    if isinstance(stmt, CreateStmt):
        fields = {"desc": [], "target": []}
        for attr, expr in stmt.assignments:
            value = evaluate(expr, store)
            if attr in ("desc", "target"):
                fields[attr].extend(value or [])
            else:
                fields[attr] = value[0] if value else None
        store.create_operator(
            stmt.source,
            stmt.name,
            fields.get("type"),
            fields["desc"],
            alias=fields.get("alias"),
            defn=fields.get("defn"),
            cond=fields.get("cond") or False,
            targets=fields["target"],
        )
        return Count(1)
    if isinstance(stmt, SelectStmt):
        return Objects(tuple(_select(stmt, store)))
    if isinstance(stmt, ComposeStmt):
        return Template(compose_template(store, stmt.names, stmt.source, stmt.using, seed))
    if isinstance(stmt, UpdateStmt):
        assignments = {}
        for attr, expr in stmt.assignments:
            value = evaluate(expr, store)
            # repeated desc/target assignments accumulate, as in CREATE
            if attr in ("desc", "target") and attr in assignments and value is not None:
                value = (assignments[attr] or []) + value
            assignments[attr] = value
        predicate = _predicate(stmt.where, stmt.source)
        return Count(store.update_operators(stmt.source, assignments, predicate))
    raise TypeError(f"not a statement: {stmt!r}")


def run_script(text: str, store: PoemStore, seed: int = 0) -> list:
    return [execute(stmt, store, seed) for stmt in parse_script(text)]
