import pytest
from hypothesis import given, strategies as st

from qepnarrate.errors import (AmbiguousSubSelect, LexError, NotAuxiliaryCriticalPair, ParseError,
                               UnknownOperatorInCompose)
from qepnarrate.pool import Count, Objects, Template, compose_template, execute, parse, render, run_script, tokenize
from qepnarrate.pool.ast import (ComposeStmt, Condition, CreateStmt, Literal, Null, QualifiedAttr, Replace,
                                 SelectStmt, SubSelect, UpdateStmt)
from qepnarrate.pool.lexer import KEYWORDS


def kinds(text):
    return [(t.kind, t.value) for t in tokenize(text)]


def test_tokenize_select():
    assert kinds("SELECT defn FROM pg")[:4] == [("kw", "SELECT"), ("ident", "defn"), ("kw", "FROM"), ("ident", "pg")]


def test_tokenize_string_and_escape():
    toks = kinds("DESC = 'perform hash join'")
    assert toks[:3] == [("ident", "desc"), ("op", "="), ("str", "perform hash join")]
    assert kinds("'it''s'")[0] == ("str", "it's")
    assert kinds("select")[0] == ("kw", "SELECT")


@pytest.mark.parametrize("text", ["'unterminated", "SELECT # FROM pg"])
def test_lex_errors(text):
    with pytest.raises(LexError):
        tokenize(text)


def test_parse_compose_using():
    stmt = parse("COMPOSE hash, hashjoin FROM pg USING hashjoin.desc = 'perform hash join'")
    assert stmt == ComposeStmt(("hash", "hashjoin"), "pg",
                               Condition(QualifiedAttr("hashjoin", "desc"), "=", "perform hash join"))


def test_parse_replace():
    stmt = parse("UPDATE pg SET desc = REPLACE((SELECT desc FROM pg AS pg2 WHERE pg2.name = 'hashjoin'), "
                 "'hash', 'nested loop') WHERE pg.name = 'nested loop join'")
    assert isinstance(stmt, UpdateStmt)
    attr, value = stmt.assignments[0]
    assert attr == "desc" and isinstance(value, Replace) and isinstance(value.inner, SubSelect)
    assert (value.old, value.new) == ("hash", "nested loop")


@pytest.mark.parametrize("text", ["CREATE pg", "SELECT FROM pg", "SELECT * FROM pg extra tokens",
                                  "COMPOSE FROM pg", "UPDATE pg SET colour = 'x'"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_select_like(store):
    result = execute(parse("SELECT * FROM pg WHERE name LIKE '%join%'"), store)
    assert isinstance(result, Objects)
    assert [r["name"] for r in result.rows] == ["hashjoin", "mergejoin", "nested loop join"]


def test_cross_source_transfer(store):
    run_script("CREATE POPERATOR hsjoin FOR db2 (TYPE = 'binary', DESC = 'hybrid join')", store)
    result = execute(parse("UPDATE db2 SET desc = (SELECT desc FROM pg WHERE pg.name = 'hashjoin') "
                           "WHERE db2.name = 'hsjoin'"), store)
    assert result == Count(1)
    assert store.get_operator("db2", "hsjoin").descriptions == store.get_operator("pg", "hashjoin").descriptions


def test_replace_update(store):
    run_script("UPDATE pg SET desc = REPLACE((SELECT desc FROM pg AS pg2 WHERE pg2.name = 'hashjoin'), "
               "'hash', 'nested loop') WHERE pg.name = 'nested loop join'", store)
    assert store.get_operator("pg", "nested loop join").descriptions == ("perform nested loop join",)


def test_ambiguous_subselect(store):
    with pytest.raises(AmbiguousSubSelect):
        run_script("UPDATE pg SET defn = (SELECT defn FROM pg WHERE name LIKE '%join%') WHERE name = 'hash'", store)


def test_compose(store):
    assert compose_template(store, ["hash"], "pg") == "hash $R1$"
    using = Condition(QualifiedAttr("hashjoin", "desc"), "=", "perform hash join")
    assert compose_template(store, ["hash", "hashjoin"], "pg", using) == \
        "hash $R1$ and perform hash join on $R2$ and $R1$ on condition $C$"
    with pytest.raises(NotAuxiliaryCriticalPair):
        compose_template(store, ["hashjoin", "hash"], "pg")
    with pytest.raises(UnknownOperatorInCompose):
        execute(parse("COMPOSE zzjoin FROM pg"), store)


def test_compose_random_desc_is_seeded(store):
    run_script("UPDATE pg SET desc = 'hash', desc = 'build a hash table on' WHERE name = 'hash'", store)
    picks = {compose_template(store, ["hash"], "pg", seed=s) for s in range(20)}
    assert picks == {"hash $R1$", "build a hash table on $R1$"}
    assert compose_template(store, ["hash"], "pg", seed=3) == compose_template(store, ["hash"], "pg", seed=3)


def test_select_and_compose_do_not_mutate(store):
    before = store.copy()
    run_script("SELECT * FROM pg; COMPOSE sort, mergejoin FROM pg; SELECT defn FROM pg WHERE name = 'zzjoin'", store)
    assert store == before


def test_create_multi_desc_and_null(store):
    run_script("CREATE POPERATOR 'gather merge' FOR pg (TYPE = 'unary', DESC = 'gather', DESC = 'merge workers', "
               "DEFN = NULL, COND = 'false')", store)
    obj = store.get_operator("pg", "gather merge")
    assert obj.descriptions == ("gather", "merge workers") and obj.defn is None


# -- round trip -------------------------------------------------------------

IDENT = st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True).filter(lambda s: s.upper() not in KEYWORDS)
NAME = st.one_of(IDENT, st.from_regex(r"[a-z][a-z ]{0,8}[a-z]", fullmatch=True))
TEXT = st.text(st.characters(min_codepoint=32, max_codepoint=126), max_size=12)
ATTR = st.sampled_from(["alias", "type", "defn", "desc", "cond", "target"])
COND = st.builds(Condition, st.builds(QualifiedAttr, st.none() | IDENT, st.sampled_from(["name", "desc", "type"])),
                 st.sampled_from(["=", "LIKE"]), TEXT)
SELECT = st.builds(SelectStmt, st.one_of(st.just(("*",)), st.lists(ATTR, min_size=1, max_size=3).map(tuple)),
                   IDENT, st.none() | IDENT, st.none() | COND)
VALUE = st.recursive(
    st.one_of(st.builds(Literal, TEXT), st.just(Null()), st.builds(SubSelect, SELECT)),
    lambda inner: st.builds(Replace, inner, TEXT, TEXT), max_leaves=3)
ASSIGNS = st.lists(st.tuples(ATTR, VALUE), min_size=1, max_size=3).map(tuple)
STATEMENT = st.one_of(
    st.builds(CreateStmt, NAME, IDENT, ASSIGNS),
    SELECT,
    st.builds(ComposeStmt, st.lists(NAME, min_size=1, max_size=2).map(tuple), IDENT,
              st.none() | COND.map(lambda c: Condition(c.target, "=", c.value))),
    st.builds(UpdateStmt, IDENT, ASSIGNS, st.none() | COND),
)


@given(STATEMENT)
def test_render_parse_round_trip(stmt):
    assert parse(tokenize(render(stmt))) == stmt
