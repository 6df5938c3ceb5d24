"""Rule-based narration of operator trees.

The tree is annotated with per-node description templates (the LOT),
auxiliary nodes are clustered with the critical node they support,
intermediate results get identifiers T1, T2, ..., and a post-order walk
emits one step per critical or standalone node.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import NotFound, UnknownOperator
from .plan import OperatorTree, PlanNode, postorder
from .poem import PhysicalOperatorObject, PoemStore
from .templates import build_template, compose, fill, placeholders_in

NODE_TYPE_TO_OPERATOR = {
    "Seq Scan": "seq scan",
    "Parallel Seq Scan": "parallel seq scan",
    "Index Scan": "index scan",
    "Index Only Scan": "index scan",
    "Bitmap Heap Scan": "bitmap heap scan",
    "Bitmap Index Scan": "bitmap index scan",
    "Hash": "hash",
    "Hash Join": "hashjoin",
    "Merge Join": "mergejoin",
    "Nested Loop": "nested loop join",
    "Sort": "sort",
    "Aggregate": "aggregate",
    "GroupAggregate": "aggregate",
    "HashAggregate": "aggregate",
    "Unique": "unique",
    "Limit": "limit",
    "Materialize": "materialize",
}

FINAL = "to get the final results"
INTERMEDIATE = "to get the intermediate relation"

_LIKE_PARENS = re.compile(r"\((?P<col>[\w.]+)\) ~~ '%(?P<pat>(?:[^'%]|'')*)%'")
_LIKE_BARE = re.compile(r"(?P<col>[\w.]+) ~~ '%(?P<pat>(?:[^'%]|'')*)%'")


def prettify_condition(cond: str) -> str:
    """``X ~~ '%Y%'`` -> ``X containing 'Y'``; the only rewrite applied."""
    cond = _LIKE_PARENS.sub(r"\g<col> containing '\g<pat>'", cond)
    return _LIKE_BARE.sub(r"\g<col> containing '\g<pat>'", cond)


def operator_name(node: PlanNode) -> str:
    if node.node_type == "Seq Scan" and node.parallel_aware:
        return "parallel seq scan"
    try:
        return NODE_TYPE_TO_OPERATOR[node.node_type]
    except KeyError:
        raise UnknownOperator(node.node_type) from None


@dataclass(eq=False)
class LotNode:
    plan: PlanNode
    operator: PhysicalOperatorObject
    desc: str
    # static bindings ($C$, $G$, $A$, and $R1$ of scans); inputs are bound later
    bindings: dict = field(default_factory=dict)
    # tag each bound placeholder abstracts to in training outputs
    slot_tags: dict = field(default_factory=dict)
    children: list["LotNode"] = field(default_factory=list)
    parent: Optional["LotNode"] = None
    identifier: Optional[str] = None
    clustered_into: Optional["LotNode"] = None
    auxiliaries: list["LotNode"] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.operator.display_name

    @property
    def conditioned(self) -> bool:
        return "$C$" in self.bindings

    def template(self, composed: bool = False) -> str:
        wanted = {p for p in self.bindings if p in ("$C$", "$G$", "$A$")}
        if composed:
            wanted.discard("$A$")
        return build_template(self.operator, self.desc, wanted)

    @property
    def label_template(self) -> str:
        return self.template()

    def reference(self) -> str:
        """How a parent step names this node's output."""
        node = self
        while True:
            if node.identifier:
                return node.identifier
            if node.plan.relation_name and node.plan.is_scan:
                return node.plan.relation_name
            if not node.children:
                return node.name
            node = node.children[0]

    def reference_is_intermediate(self) -> bool:
        node = self
        while True:
            if node.identifier:
                return True
            if node.plan.relation_name and node.plan.is_scan:
                return False
            if not node.children:
                return False
            node = node.children[0]


@dataclass
class Lot:
    root: LotNode
    nodes: list[LotNode]  # post-order
    source: str


@dataclass(frozen=True)
class ClusterSet:
    pairs: tuple[tuple[LotNode, LotNode], ...]  # (auxiliary, critical)

    def __len__(self):
        return len(self.pairs)

    def names(self) -> set[tuple[str, str]]:
        return {(a.plan.node_type, c.plan.node_type) for a, c in self.pairs}


@dataclass(frozen=True)
class Narrative:
    steps: tuple[str, ...]

    def text(self, numbered: bool = False) -> str:
        if numbered:
            return "\n".join(f"{i}. {s}" for i, s in enumerate(self.steps, 1))
        return "\n".join(self.steps)

    def __len__(self):
        return len(self.steps)


def _condition_binding(node: PlanNode, op: PhysicalOperatorObject):
    """($C$ literal, tag) for the node, or None."""
    conds = node.conditions
    if op.name == "limit":
        return (str(node.limit_count), "<F>") if node.limit_count is not None else None
    if node.is_scan:
        parts = [conds[k] for k in ("indexCond", "filter") if k in conds]
        if not parts:
            return None
        tag = "<I>" if "filter" not in conds else "<F>"
        return " and ".join(prettify_condition(p) for p in parts), tag
    for kind in ("hashCond", "mergeCond", "joinFilter"):
        if kind in conds:
            return prettify_condition(conds[kind]), "<C>"
    if "filter" in conds:
        return prettify_condition(conds["filter"]), "<F>"
    return None


def generate_lot(tree: OperatorTree, store: PoemStore, seed: int = 0) -> Lot:
    rng = random.Random(seed)
    made: dict[int, LotNode] = {}
    order = []
    for plan in postorder(tree.root):
        name = operator_name(plan)
        try:
            op = store.get_operator(tree.source_engine, name)
        except NotFound:
            raise UnknownOperator(plan.node_type) from None
        desc = op.descriptions[0] if len(op.descriptions) == 1 else rng.choice(op.descriptions)
        lot = LotNode(plan, op, desc)
        if plan.is_scan and plan.relation_name:
            lot.bindings["$R1$"] = plan.relation_name
            lot.slot_tags["$R1$"] = "tablename"
        if op.cond:
            bound = _condition_binding(plan, op)
            if bound is not None:
                lot.bindings["$C$"], lot.slot_tags["$C$"] = bound
        if op.name == "aggregate" and plan.group_keys:
            lot.bindings["$G$"] = ", ".join(plan.group_keys)
            lot.slot_tags["$G$"] = "<G>"
        if op.name == "sort" and plan.sort_keys:
            lot.bindings["$A$"] = ", ".join(plan.sort_keys)
            lot.slot_tags["$A$"] = "<A>"
        lot.children = [made[id(c)] for c in plan.children]
        for child in lot.children:
            child.parent = lot
        made[id(plan)] = lot
        order.append(lot)
    return Lot(order[-1], order, tree.source_engine)


def cluster_lot(lot: Lot, store: PoemStore) -> ClusterSet:
    pairs_allowed = store.auxiliary_pairs(lot.source)
    pairs = []
    for node in lot.nodes:
        for child in node.children:
            if (child.operator.name, node.operator.name) in pairs_allowed:
                pairs.append((child, node))
    return ClusterSet(tuple(pairs))


def _passes_base_relation(node: LotNode) -> bool:
    return (
        node.plan.is_scan
        and node.plan.relation_name is not None
        and not node.conditioned
        and not any(aux.conditioned for aux in node.auxiliaries)
    )


def assign_identifiers(lot: Lot, clusters: ClusterSet) -> Lot:
    for node in lot.nodes:
        node.identifier = None
        node.clustered_into = None
        node.auxiliaries = []
    for aux, critical in clusters.pairs:
        aux.clustered_into = critical
        critical.auxiliaries.append(aux)
    k = 0
    for node in lot.nodes:
        if node is lot.root or node.clustered_into is not None or _passes_base_relation(node):
            continue
        k += 1
        node.identifier = f"T{k}"
    for node in lot.nodes:
        _bind_inputs(node)
    return lot


def _bind_inputs(node: LotNode) -> None:
    if node.plan.is_scan and node.plan.relation_name:
        return
    slots = ("$R1$",) if node.operator.op_type == "unary" else ("$R2$", "$R1$")
    for slot, child in zip(slots, node.children):
        node.bindings[slot] = child.reference()
        node.slot_tags[slot] = "<T>" if child.reference_is_intermediate() else "tablename"


@dataclass(frozen=True)
class Step:
    """One narrative step: a critical node with its clustered auxiliaries."""

    node: LotNode
    auxiliaries: tuple[LotNode, ...]
    is_root: bool

    @property
    def nodes(self) -> tuple[LotNode, ...]:
        return self.auxiliaries + (self.node,)

    def segments(self) -> list[tuple[str, dict]]:
        out = [(aux.template(composed=True), aux.bindings) for aux in self.auxiliaries]
        out.append((self.node.template(), self.node.bindings))
        return out

    def suffix(self) -> Optional[str]:
        if self.is_root:
            return FINAL
        if self.node.identifier:
            return f"{INTERMEDIATE} {self.node.identifier}"
        return None

    def render(self) -> str:
        body = compose([fill(t, b) for t, b in self.segments()])
        suffix = self.suffix()
        return f"{body} {suffix}." if suffix else f"{body}."


def steps(lot: Lot) -> list[Step]:
    return [
        Step(node, tuple(node.auxiliaries), node is lot.root)
        for node in lot.nodes if node.clustered_into is None
    ]


def translate(lot: Lot, clusters: Optional[ClusterSet] = None) -> Narrative:
    if clusters is not None and any(a.clustered_into is None for a, _ in clusters.pairs):
        assign_identifiers(lot, clusters)
    return Narrative(tuple(step.render() for step in steps(lot)))


def annotate(tree: OperatorTree, store: PoemStore, seed: int = 0) -> Lot:
    lot = generate_lot(tree, store, seed)
    return assign_identifiers(lot, cluster_lot(lot, store))


def translate_tree(tree: OperatorTree, store: PoemStore, seed: int = 0) -> Narrative:
    return translate(annotate(tree, store, seed))


def check_lot_node(node: LotNode) -> None:
    """Raise AssertionError unless bindings cover exactly the template's placeholders."""
    present = placeholders_in(node.template())
    bound = set(node.bindings) & present
    assert present == bound, (node.plan.node_type, present, set(node.bindings))
