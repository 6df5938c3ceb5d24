"""Statement trees for POOL."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union


@dataclass(frozen=True)
class Literal:
    value: str


@dataclass(frozen=True)
class Null:
    pass


@dataclass(frozen=True)
class QualifiedAttr:
    qualifier: Optional[str]
    attr: str


@dataclass(frozen=True)
class Condition:
    """``[qualifier.]attr (= | LIKE) 'literal'``"""

    target: QualifiedAttr
    op: str
    value: str


@dataclass(frozen=True)
class SelectStmt:
    projection: tuple[str, ...]  # ("*",) selects everything
    source: str
    alias: Optional[str] = None
    where: Optional[Condition] = None


@dataclass(frozen=True)
class SubSelect:
    select: SelectStmt


@dataclass(frozen=True)
class Replace:
    inner: "ValueExpr"
    old: str
    new: str


ValueExpr = Union[Literal, Null, SubSelect, Replace]


@dataclass(frozen=True)
class CreateStmt:
    name: str
    source: str
    assignments: tuple[tuple[str, ValueExpr], ...]


@dataclass(frozen=True)
class ComposeStmt:
    names: tuple[str, ...]
    source: str
    using: Optional[Condition] = None


@dataclass(frozen=True)
class UpdateStmt:
    source: str
    assignments: tuple[tuple[str, ValueExpr], ...]
    where: Optional[Condition] = None


Statement = Union[CreateStmt, SelectStmt, ComposeStmt, UpdateStmt]
