"""Recursive-descent parser for POOL.

    stmt     := create | select | compose | update
    create   := CREATE POPERATOR name FOR ident "(" assign ("," assign)* ")"
    assign   := attr "=" value
    select   := SELECT ("*" | attr ("," attr)*) FROM ident [[AS] ident] [WHERE pred]
    pred     := qattr ("=" | LIKE) string
    compose  := COMPOSE name ["," name] FROM ident [USING qattr "=" string]
    update   := UPDATE ident SET assign ("," assign)* [WHERE pred]
    value    := string | NULL | "(" select ")" | REPLACE "(" value "," string "," string ")"
    name     := ident | string
"""
from __future__ import annotations

from ..errors import ParseError
from .ast import (
    ComposeStmt,
    Condition,
    CreateStmt,
    Literal,
    Null,
    QualifiedAttr,
    Replace,
    SelectStmt,
    SubSelect,
    UpdateStmt,
)
from .lexer import Token, tokenize

ASSIGN_ATTRS = ("alias", "type", "defn", "desc", "cond", "target")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token helpers ----------------------------------------------------

    def peek(self) -> Token:
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        end = self.tokens[-1].pos + 1 if self.tokens else 0
        return Token("eof", "<end>", end)

    def at(self, kind, value=None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def take(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, kind, value=None) -> Token:
        tok = self.peek()
        if not self.at(kind, value):
            raise ParseError(value or kind, tok.value, tok.pos)
        self.i += 1
        return tok

    def accept(self, kind, value=None) -> bool:
        if self.at(kind, value):
            self.i += 1
            return True
        return False

    # -- grammar ----------------------------------------------------------

    def statement(self):
        tok = self.peek()
        if tok.kind == "kw":
            if tok.value == "CREATE":
                return self.create()
            if tok.value == "SELECT":
                return self.select()
            if tok.value == "COMPOSE":
                return self.compose()
            if tok.value == "UPDATE":
                return self.update()
        raise ParseError("CREATE, SELECT, COMPOSE or UPDATE", tok.value, tok.pos)

    def name(self) -> str:
        tok = self.peek()
        if tok.kind in ("ident", "str"):
            self.i += 1
            return tok.value.strip().lower()
        raise ParseError("operator name", tok.value, tok.pos)

    def ident(self) -> str:
        return self.expect("ident").value

    def assignment(self):
        tok = self.expect("ident")
        if tok.value not in ASSIGN_ATTRS:
            raise ParseError("attribute (" + ", ".join(ASSIGN_ATTRS) + ")", tok.value, tok.pos)
        self.expect("op", "=")
        return tok.value, self.value()

    def value(self):
        if self.at("str"):
            return Literal(self.take().value)
        if self.accept("kw", "NULL"):
            return Null()
        if self.accept("kw", "REPLACE"):
            self.expect("op", "(")
            inner = self.value()
            self.expect("op", ",")
            old = self.expect("str").value
            self.expect("op", ",")
            new = self.expect("str").value
            self.expect("op", ")")
            return Replace(inner, old, new)
        if self.accept("op", "("):
            select = self.select()
            self.expect("op", ")")
            return SubSelect(select)
        tok = self.peek()
        raise ParseError("string, NULL, (SELECT ...) or REPLACE", tok.value, tok.pos)

    def qualified_attr(self) -> QualifiedAttr:
        first = self.ident()
        if self.accept("op", "."):
            return QualifiedAttr(first, self.ident())
        return QualifiedAttr(None, first)

    def condition(self, ops=("=", "LIKE")) -> Condition:
        target = self.qualified_attr()
        if "=" in ops and self.accept("op", "="):
            op = "="
        elif "LIKE" in ops and self.accept("kw", "LIKE"):
            op = "LIKE"
        else:
            tok = self.peek()
            raise ParseError(" or ".join(ops), tok.value, tok.pos)
        return Condition(target, op, self.expect("str").value)

    def create(self) -> CreateStmt:
        self.expect("kw", "CREATE")
        self.expect("kw", "POPERATOR")
        name = self.name()
        self.expect("kw", "FOR")
        source = self.ident()
        self.expect("op", "(")
        assigns = [self.assignment()]
        while self.accept("op", ","):
            assigns.append(self.assignment())
        self.expect("op", ")")
        return CreateStmt(name, source, tuple(assigns))

    def select(self) -> SelectStmt:
        self.expect("kw", "SELECT")
        if self.accept("op", "*"):
            projection = ("*",)
        else:
            attrs = [self.ident()]
            while self.accept("op", ","):
                attrs.append(self.ident())
            projection = tuple(attrs)
        self.expect("kw", "FROM")
        source = self.ident()
        alias = None
        if self.accept("kw", "AS"):
            alias = self.ident()
        elif self.at("ident"):
            alias = self.ident()
        where = self.condition() if self.accept("kw", "WHERE") else None
        return SelectStmt(projection, source, alias, where)

    def compose(self) -> ComposeStmt:
        self.expect("kw", "COMPOSE")
        names = [self.name()]
        if self.accept("op", ","):
            names.append(self.name())
        self.expect("kw", "FROM")
        source = self.ident()
        using = self.condition(ops=("=",)) if self.accept("kw", "USING") else None
        return ComposeStmt(tuple(names), source, using)

    def update(self) -> UpdateStmt:
        self.expect("kw", "UPDATE")
        source = self.ident()
        self.expect("kw", "SET")
        assigns = [self.assignment()]
        while self.accept("op", ","):
            assigns.append(self.assignment())
        where = self.condition() if self.accept("kw", "WHERE") else None
        return UpdateStmt(source, tuple(assigns), where)


def parse(tokens) -> object:
    """Parse exactly one statement (an optional trailing ``;`` is allowed)."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    p = _Parser(list(tokens))
    stmt = p.statement()
    p.accept("op", ";")
    if p.i < len(p.tokens):
        tok = p.peek()
        raise ParseError("end of statement", tok.value, tok.pos)
    return stmt


def parse_script(text: str) -> list:
    p = _Parser(tokenize(text))
    stmts = []
    while p.i < len(p.tokens):
        if p.accept("op", ";"):
            continue
        stmts.append(p.statement())
    return stmts
