"""Description templates for operators.

A template is the operator's description followed by its input slots and
optional clauses, e.g. ``perform hash join on $R2$ and $R1$ on condition $C$``.
Placeholders: ``$R1$``/``$R2$`` inputs, ``$C$`` condition, ``$G$`` group
keys, ``$A$`` sort keys.
"""
from __future__ import annotations

import re
from typing import Optional

from .poem import PhysicalOperatorObject

PLACEHOLDERS = ("$R1$", "$R2$", "$C$", "$G$", "$A$")
PLACEHOLDER_RE = re.compile(r"\$(R1|R2|C|G|A)\$")

_TRAILING_PREPOSITIONS = {"from", "on", "of", "to", "into", "with", "over"}


def input_slots(obj: PhysicalOperatorObject, desc: str) -> str:
    words = desc.split()
    if obj.op_type == "binary":
        return f"{desc} on $R2$ and $R1$"
    # a bare verb ("hash", "sort") takes its input directly
    if len(words) < 2 or words[-1] in _TRAILING_PREPOSITIONS:
        return f"{desc} $R1$"
    return f"{desc} on $R1$"


def default_placeholders(obj: PhysicalOperatorObject) -> set[str]:
    wanted = {"$C$"} if obj.cond else set()
    if obj.name == "aggregate" and obj.cond:
        wanted.add("$G$")
    return wanted


def build_template(obj: PhysicalOperatorObject, desc: str, placeholders: Optional[set] = None) -> str:
    """Template for ``obj`` using description ``desc``.

    ``placeholders`` selects which optional clauses appear; ``None`` gives
    the catalog default (every clause the ``cond`` attribute allows).
    """
    if placeholders is None:
        placeholders = default_placeholders(obj)
    text = input_slots(obj, desc)
    if obj.name == "aggregate":
        if "$G$" in placeholders:
            text += " with grouping on attribute $G$"
        if obj.cond and "$C$" in placeholders:
            text += " and filtering on $C$"
        return text
    if "$A$" in placeholders:
        text += " on attribute $A$"
    if obj.cond and "$C$" in placeholders:
        if "scan" in obj.name:
            text += " and filtering on $C$"
        elif obj.name == "limit":
            text += " to $C$ rows"
        else:
            text += " on condition $C$"
    return text


def compose(segments: list[str]) -> str:
    """Auxiliary segments first, critical last, joined by ``and``."""
    return " and ".join(segments)


def placeholders_in(template: str) -> set[str]:
    return {m.group(0) for m in PLACEHOLDER_RE.finditer(template)}


def fill(template: str, bindings: dict) -> str:
    return PLACEHOLDER_RE.sub(lambda m: str(bindings[m.group(0)]), template)
