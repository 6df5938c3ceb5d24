"""Print statement trees back as POOL source."""
from __future__ import annotations

from .lexer import KEYWORDS
from .ast import ComposeStmt, Condition, CreateStmt, Literal, Null, Replace, SelectStmt, SubSelect, UpdateStmt


def _quote(text: str) -> str:
    return "'" + text.replace("'", "''") + "'"


def _name(name: str) -> str:
    plain = name.isidentifier() and name.isascii() and name.upper() not in KEYWORDS
    return name if plain else _quote(name)


def _cond(cond: Condition) -> str:
    attr = cond.target.attr if cond.target.qualifier is None else f"{cond.target.qualifier}.{cond.target.attr}"
    return f"{attr} {cond.op} {_quote(cond.value)}"


def _value(expr) -> str:
    if isinstance(expr, Literal):
        return _quote(expr.value)
    if isinstance(expr, Null):
        return "NULL"
    if isinstance(expr, SubSelect):
        return f"({render(expr.select)})"
    if isinstance(expr, Replace):
        return f"REPLACE({_value(expr.inner)}, {_quote(expr.old)}, {_quote(expr.new)})"
    raise TypeError(expr)


def _assigns(assignments) -> str:
    return ", ".join(f"{attr} = {_value(v)}" for attr, v in assignments)


def render(stmt) -> str:
    if isinstance(stmt, CreateStmt):
        return f"CREATE POPERATOR {_name(stmt.name)} FOR {stmt.source} ({_assigns(stmt.assignments)})"
    if isinstance(stmt, SelectStmt):
        text = f"SELECT {', '.join(stmt.projection)} FROM {stmt.source}"
        if stmt.alias:
            text += f" AS {stmt.alias}"
        if stmt.where:
            text += f" WHERE {_cond(stmt.where)}"
        return text
    if isinstance(stmt, ComposeStmt):
        text = f"COMPOSE {', '.join(_name(n) for n in stmt.names)} FROM {stmt.source}"
        if stmt.using:
            text += f" USING {_cond(stmt.using)}"
        return text
    if isinstance(stmt, UpdateStmt):
        text = f"UPDATE {stmt.source} SET {_assigns(stmt.assignments)}"
        if stmt.where:
            text += f" WHERE {_cond(stmt.where)}"
        return text
    raise TypeError(stmt)
