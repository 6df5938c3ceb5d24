"""Operator trees: PostgreSQL EXPLAIN (FORMAT JSON) ingestion, emission,
and a seeded generator of synthetic trees over a declared schema."""
from __future__ import annotations

import dataclasses
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from .errors import EmptySchema, MalformedDocument, MissingField

# condition kind -> EXPLAIN key
CONDITION_KEYS = {
    "hashCond": "Hash Cond",
    "mergeCond": "Merge Cond",
    "filter": "Filter",
    "indexCond": "Index Cond",
    "joinFilter": "Join Filter",
}


@dataclass(frozen=True)
class PlanNode:
    node_type: str
    relation_name: Optional[str] = None
    alias: Optional[str] = None
    conditions: dict = field(default_factory=dict)
    sort_keys: tuple[str, ...] = ()
    group_keys: tuple[str, ...] = ()
    limit_count: Optional[int] = None
    strategy: Optional[str] = None
    parallel_aware: bool = False
    plan_rows: Optional[int] = None
    children: tuple["PlanNode", ...] = ()
    # inserted by the parser, absent from the source document
    synthetic: bool = False

    @property
    def is_scan(self) -> bool:
        return "Scan" in self.node_type


@dataclass(frozen=True)
class OperatorTree:
    root: PlanNode
    source_engine: str = "pg"

    def postorder(self) -> list[PlanNode]:
        return postorder(self.root)

    def __len__(self):
        return len(self.postorder())


def postorder(root: PlanNode) -> list[PlanNode]:
    out, stack = [], [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            out.append(node)
            continue
        stack.append((node, True))
        for child in reversed(node.children):
            stack.append((child, False))
    return out


# --- condition normalization ---------------------------------------------

_QUOTED = re.compile(r"'(?:[^']|'')*'")
_CAST = re.compile(
    r"::(?:"
    r"character varying|double precision|bit varying"
    r"|timestamp with(?:out)? time zone|time with(?:out)? time zone"
    r"|\"[^\"]+\"|[A-Za-z_][\w.]*"
    r")(?:\(\d+(?:,\s*\d+)?\))?(?:\[\])*"
)
_WS = re.compile(r"\s+")


def normalize_condition(raw: str) -> str:
    """Collapse whitespace and drop ``::type`` casts outside string literals."""
    text = _WS.sub(" ", raw).strip()
    pieces, last = [], 0
    for m in _QUOTED.finditer(text):
        pieces.append(_CAST.sub("", text[last:m.start()]))
        pieces.append(m.group(0))
        last = m.end()
    pieces.append(_CAST.sub("", text[last:]))
    return "".join(pieces)


# --- EXPLAIN JSON ----------------------------------------------------------

def parse_explain_json(text: str, source_engine: str = "pg") -> OperatorTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"not JSON: {exc}") from None
    return parse_explain(doc, source_engine)


def parse_explain(doc, source_engine: str = "pg") -> OperatorTree:
    if isinstance(doc, list):
        if not doc:
            raise MalformedDocument("empty EXPLAIN array")
        doc = doc[0]
    if not isinstance(doc, dict) or "Plan" not in doc:
        raise MalformedDocument('document has no "Plan"')
    return OperatorTree(_node(doc["Plan"]), source_engine)


def _node(plan, parent_relation=None) -> PlanNode:
    if not isinstance(plan, dict):
        raise MalformedDocument("plan node is not an object")
    if "Node Type" not in plan:
        raise MissingField("Node Type")
    node_type = plan["Node Type"]
    relation = plan.get("Relation Name")
    if relation is None and node_type == "Bitmap Index Scan":
        relation = parent_relation
    conditions = {
        kind: normalize_condition(plan[key])
        for kind, key in CONDITION_KEYS.items() if isinstance(plan.get(key), str)
    }
    kids = plan.get("Plans", [])
    if not isinstance(kids, list):
        raise MalformedDocument('"Plans" must be an array')
    children = tuple(_node(k, relation) for k in kids)
    group_keys = tuple(plan.get("Group Key", ()))
    strategy = plan.get("Strategy")
    rows = plan.get("Plan Rows")
    node = PlanNode(
        node_type=node_type,
        relation_name=relation,
        alias=plan.get("Alias"),
        conditions=conditions,
        sort_keys=tuple(plan.get("Sort Key", ())),
        group_keys=group_keys,
        limit_count=int(rows) if node_type == "Limit" and rows is not None else None,
        strategy=strategy,
        parallel_aware=bool(plan.get("Parallel Aware", False)),
        plan_rows=int(rows) if rows is not None and node_type != "Limit" else None,
        children=children,
    )
    # sortedness is a strategy flag in PostgreSQL; surface it as a Sort child
    if strategy == "Sorted" and node_type in ("Aggregate", "GroupAggregate") and not (
        children and children[0].node_type == "Sort"
    ):
        sort = PlanNode("Sort", sort_keys=group_keys, children=children[:1], synthetic=True)
        node = _replace_children(node, (sort,) + children[1:])
    return node


def _replace_children(node: PlanNode, children) -> PlanNode:
    return dataclasses.replace(node, children=tuple(children))


def to_explain(tree: OperatorTree) -> list:
    """Inverse of :func:`parse_explain` for the recognized field subset."""
    return [{"Plan": _emit(tree.root)}]


def _emit(node: PlanNode) -> dict:
    out = {"Node Type": node.node_type}
    if node.parallel_aware:
        out["Parallel Aware"] = True
    if node.strategy is not None:
        out["Strategy"] = node.strategy
    if node.relation_name is not None:
        out["Relation Name"] = node.relation_name
    if node.alias is not None:
        out["Alias"] = node.alias
    if node.limit_count is not None:
        out["Plan Rows"] = node.limit_count
    elif node.plan_rows is not None:
        out["Plan Rows"] = node.plan_rows
    for kind, key in CONDITION_KEYS.items():
        if kind in node.conditions:
            out[key] = node.conditions[kind]
    if node.sort_keys:
        out["Sort Key"] = list(node.sort_keys)
    if node.group_keys:
        out["Group Key"] = list(node.group_keys)
    kids = []
    for child in node.children:
        # synthetic sorts are re-derived from the Sorted strategy on parse
        kids.extend(child.children if child.synthetic else (child,))
    if kids:
        out["Plans"] = [_emit(k) for k in kids]
    return out


def to_explain_json(tree: OperatorTree) -> str:
    return json.dumps(to_explain(tree), indent=2)


def load_plan(path) -> OperatorTree:
    return parse_explain_json(Path(path).read_text(encoding="utf-8"))


def count_node_types(doc) -> int:
    """Number of "Node Type" keys anywhere in a decoded EXPLAIN document."""
    if isinstance(doc, dict):
        return ("Node Type" in doc) + sum(count_node_types(v) for v in doc.values())
    if isinstance(doc, list):
        return sum(count_node_types(v) for v in doc)
    return 0


# --- schema and synthetic trees --------------------------------------------

@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[tuple[str, str], ...]  # (column, "int" | "text")


@dataclass(frozen=True)
class SchemaSpec:
    tables: tuple[Table, ...]
    join_edges: tuple[tuple[str, str], ...] = ()  # ("a.col", "b.col")

    def __post_init__(self):
        declared = {(t.name, c) for t in self.tables for c, _ in t.columns}
        for a, b in self.join_edges:
            for ref in (a, b):
                table, _, col = ref.partition(".")
                if (table, col) not in declared:
                    raise ValueError(f"join edge references undeclared column {ref!r}")

    @classmethod
    def from_dict(cls, doc) -> "SchemaSpec":
        tables = tuple(
            Table(t["name"], tuple((c["name"], c["kind"]) for c in t["columns"]))
            for t in doc["tables"]
        )
        edges = tuple(tuple(e) for e in doc.get("joinEdges", ()))
        return cls(tables, edges)

    def to_dict(self) -> dict:
        return {
            "tables": [
                {"name": t.name, "columns": [{"name": c, "kind": k} for c, k in t.columns]}
                for t in self.tables
            ],
            "joinEdges": [list(e) for e in self.join_edges],
        }

    def table(self, name) -> Table:
        return next(t for t in self.tables if t.name == name)

    def neighbors(self, name) -> list[tuple[str, str, str]]:
        """(own column, other table, other column) for every edge touching ``name``."""
        out = []
        for a, b in self.join_edges:
            ta, ca = a.split(".", 1)
            tb, cb = b.split(".", 1)
            if ta == name:
                out.append((ca, tb, cb))
            if tb == name:
                out.append((cb, ta, ca))
        return out


def load_schema(path) -> SchemaSpec:
    return SchemaSpec.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


_WORDS = ("BUILDING", "MAIL", "urgent", "July", "AIR", "special", "green")

# bottom-up unary operator stacks placed over the join tree
_TOPS = (
    ((), 3),
    (("sort",), 2),
    (("limit",), 1),
    (("sort", "limit"), 2),
    (("hashagg",), 2),
    (("sort", "sortagg"), 3),
    (("sort", "unique"), 2),
    (("sort", "sortagg", "unique"), 2),
    (("hashagg", "sort", "limit"), 1),
    (("materialize",), 1),
)


class _Generator:
    def __init__(self, schema: SchemaSpec, rng: random.Random, budget: int):
        self.schema = schema
        self.rng = rng
        self.spare = 0
        self.budget = budget
        self.tables_used: list[str] = []

    def _spend(self, cost: int, p: float) -> bool:
        if cost <= self.spare and self.rng.random() < p:
            self.spare -= cost
            return True
        return False

    def build(self) -> PlanNode:
        rng = self.rng
        joinable = [t.name for t in self.schema.tables if self.schema.neighbors(t.name)]
        max_k = (self.budget + 1) // 2 if joinable else 1
        k = rng.randint(max(1, self.budget // 5), max_k)
        start = rng.choice(joinable) if k > 1 else rng.choice(self.schema.tables).name
        self.spare = self.budget - (2 * k - 1)

        options = [(ops, w) for ops, w in _TOPS if len(ops) <= self.spare]
        tops = rng.choices([o for o, _ in options], weights=[w for _, w in options])[0]
        self.spare -= len(tops)

        node = self._tree(start, k)
        for op in tops:
            node = self._top(op, node)
        return node

    def _column(self, table: str, kind: Optional[str] = None) -> str:
        cols = [c for c, k in self.schema.table(table).columns if kind is None or k == kind]
        if not cols:
            cols = [c for c, _ in self.schema.table(table).columns]
        return self.rng.choice(cols)

    def _filter(self, table: str) -> str:
        col = self._column(table)
        kind = dict(self.schema.table(table).columns)[col]
        if kind == "int":
            return f"({col} > {self.rng.randint(1, 1000)})"
        return f"(({col}) ~~ '%{self.rng.choice(_WORDS)}%')"

    def _scan(self, table: str) -> PlanNode:
        rng = self.rng
        self.tables_used.append(table)
        conds = {}
        if rng.random() < 0.5:
            conds["filter"] = self._filter(table)
        if self._spend(1, 0.25):
            col = self._column(table, "int")
            index = PlanNode(
                "Bitmap Index Scan",
                relation_name=table,
                conditions={"indexCond": f"({col} = {rng.randint(1, 1000)})"},
            )
            return PlanNode("Bitmap Heap Scan", relation_name=table, conditions=conds, children=(index,))
        kind = rng.choice(("seq", "seq", "parallel", "index"))
        if kind == "index":
            col = self._column(table, "int")
            conds = {"indexCond": f"({col} = {rng.randint(1, 1000)})", **conds}
            return PlanNode("Index Scan", relation_name=table, conditions=conds)
        return PlanNode("Seq Scan", relation_name=table, conditions=conds, parallel_aware=kind == "parallel")

    def _tree(self, must: str, leaves: int) -> PlanNode:
        if leaves == 1:
            return self._scan(must)
        rng = self.rng
        n_left = rng.randint(1, leaves - 1)
        col, other, other_col = rng.choice(self.schema.neighbors(must))
        if rng.random() < 0.5:
            left_t, left_c, right_t, right_c = must, col, other, other_col
        else:
            left_t, left_c, right_t, right_c = other, other_col, must, col
        left = self._tree(left_t, n_left)
        right = self._tree(right_t, leaves - n_left)
        cond = f"({left_t}.{left_c} = {right_t}.{right_c})"
        choice = rng.random()
        if choice < 0.4 and self._spend(1, 1.0):
            return PlanNode("Hash Join", conditions={"hashCond": cond}, children=(left, PlanNode("Hash", children=(right,))))
        if choice < 0.7:
            if self._spend(1, 0.6):
                left = PlanNode("Sort", sort_keys=(f"{left_t}.{left_c}",), children=(left,))
            if self._spend(1, 0.6):
                right = PlanNode("Sort", sort_keys=(f"{right_t}.{right_c}",), children=(right,))
            return PlanNode("Merge Join", conditions={"mergeCond": cond}, children=(left, right))
        if self._spend(1, 0.3):
            right = PlanNode("Materialize", children=(right,))
        return PlanNode("Nested Loop", conditions={"joinFilter": cond}, children=(left, right))

    def _top(self, op: str, child: PlanNode) -> PlanNode:
        rng = self.rng
        table = rng.choice(self.tables_used)
        key = f"{table}.{self._column(table)}"
        if op == "sort":
            return PlanNode("Sort", sort_keys=(key,), children=(child,))
        if op == "limit":
            return PlanNode("Limit", limit_count=rng.randint(1, 100), children=(child,))
        if op == "materialize":
            return PlanNode("Materialize", children=(child,))
        if op == "unique":
            return PlanNode("Unique", children=(child,))
        conds = {"filter": f"(count(*) > {rng.randint(1, 500)})"} if rng.random() < 0.5 else {}
        if op == "sortagg":
            keys = child.sort_keys if child.node_type == "Sort" else (key,)
            return PlanNode("Aggregate", strategy="Sorted", group_keys=keys, conditions=conds, children=(child,))
        return PlanNode("Aggregate", strategy="Hashed", group_keys=(key,), conditions=conds, children=(child,))


def generate_random_tree(schema: SchemaSpec, seed: int, size_budget: int, source: str = "pg") -> OperatorTree:
    """Seeded synthetic operator tree with at most ``size_budget`` nodes."""
    if not schema.tables:
        raise EmptySchema("schema declares no tables")
    if size_budget < 1:
        raise ValueError("size_budget must be >= 1")
    gen = _Generator(schema, random.Random(seed), size_budget)
    return OperatorTree(gen.build(), source)


def iter_plan_files(directory) -> Iterator[Path]:
    return iter(sorted(Path(directory).glob("*.json")))
