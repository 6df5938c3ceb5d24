import json

import pytest
from hypothesis import given, strategies as st

from qepnarrate.errors import (CorruptStore, DanglingTarget, DuplicateOperator, InvariantViolation,
                               MissingMandatoryAttribute, NotFound, UnknownAttribute, UnknownSource)
from qepnarrate.poem import DEFAULT_CATALOG, PoemStore, Predicate, load_store, save_store


def test_create_and_get():
    s = PoemStore()
    oid = s.create_operator("pg", "hashjoin", "binary", ["perform hash join"], cond=True)
    obj = s.get_operator("pg", "hashjoin")
    assert obj.oid == oid and obj.descriptions == ("perform hash join",) and obj.cond


def test_duplicate_rejected():
    s = PoemStore()
    s.create_operator("pg", "hashjoin", "binary", ["perform hash join"])
    with pytest.raises(DuplicateOperator):
        s.create_operator("pg", "HashJoin", "binary", ["x"])


def test_auxiliary_edge_indexed():
    s = PoemStore()
    s.create_operator("pg", "hashjoin", "binary", ["perform hash join"], cond=True)
    s.create_operator("pg", "hash", "unary", ["hash"], targets=["hashjoin"])
    assert ("hash", "hashjoin") in s.auxiliary_pairs("pg")


@pytest.mark.parametrize("kwargs, err", [
    (dict(op_type=None, descriptions=["d"]), MissingMandatoryAttribute),
    (dict(op_type="unary", descriptions=[]), MissingMandatoryAttribute),
    (dict(op_type="ternary", descriptions=["d"]), InvariantViolation),
    (dict(op_type="unary", descriptions=["d"], targets=["ghost"]), DanglingTarget),
    (dict(op_type="unary", descriptions=["d"], targets=["x"]), InvariantViolation),
])
def test_create_validation(kwargs, err):
    with pytest.raises(err):
        PoemStore().create_operator("pg", "x", **kwargs)


def test_lookup_is_case_sensitive_on_source(store):
    assert store.get_operator("pg", "hashjoin").name == "hashjoin"
    with pytest.raises(NotFound):
        store.get_operator("PG", "hashjoin")
    with pytest.raises(NotFound):
        store.get_operator("pg", "nonexistent")


def test_query_like_and_equality(store):
    names = [o.name for o in store.query_operators("pg", Predicate("name", "LIKE", "%join%"))]
    assert names == ["hashjoin", "mergejoin", "nested loop join"]
    assert store.query_operators("pg", Predicate("name", "=", "zzjoin")) == []
    assert len(store.query_operators("pg")) == len(DEFAULT_CATALOG)
    with pytest.raises(UnknownSource):
        store.query_operators("oracle")
    with pytest.raises(UnknownAttribute):
        Predicate("colour", "=", "red")


def test_seeded_pairs(store):
    pairs = store.auxiliary_pairs("pg")
    for pair in [("hash", "hashjoin"), ("sort", "mergejoin"), ("sort", "aggregate"), ("sort", "unique"),
                 ("bitmap index scan", "bitmap heap scan")]:
        assert pair in pairs
    assert store.auxiliary_pairs("db2") == set()


def test_update(store):
    n = store.update_operators("pg", {"defn": "a type of join algorithm"}, Predicate("name", "=", "hashjoin"))
    assert n == 1 and store.get_operator("pg", "hashjoin").defn == "a type of join algorithm"
    before = store.copy()
    assert store.update_operators("pg", {"defn": "x"}, Predicate("name", "=", "zzjoin")) == 0
    assert store == before


def test_update_target_removal_updates_pairs(store):
    store.update_operators("pg", {"target": None}, Predicate("name", "=", "hash"))
    assert ("hash", "hashjoin") not in store.auxiliary_pairs("pg")


def test_update_is_atomic(store):
    before = store.copy()
    with pytest.raises(InvariantViolation):
        store.update_operators("pg", {"target": "ghost"}, Predicate("name", "LIKE", "%scan"))
    assert store == before
    with pytest.raises(UnknownAttribute):
        store.update_operators("pg", {"oid": 3})


def test_round_trip(tmp_path, store):
    path = tmp_path / "s.json"
    store.update_operators("pg", {"desc": ["perform hash join", "ünïcode  spaced\tdesc"]},
                           Predicate("name", "=", "hashjoin"))
    save_store(store, path)
    loaded = load_store(path)
    assert loaded == store
    assert loaded.get_operator("pg", "hashjoin").descriptions[1] == "ünïcode  spaced\tdesc"
    doc = json.loads(path.read_text(encoding="utf-8"))
    assert list(doc) == ["poperators", "pdesc"]


def test_corrupt_documents(tmp_path, store):
    doc = store.to_document()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"poperators": doc["poperators"]}))
    with pytest.raises(CorruptStore):
        load_store(bad)
    for row in doc["poperators"]:
        if row["name"] == "hash":
            row["targets"] = ["nowhere"]
    bad.write_text(json.dumps(doc))
    with pytest.raises(CorruptStore):
        load_store(bad)
    bad.write_text("{")
    with pytest.raises(CorruptStore):
        load_store(bad)


NAMES = st.sampled_from(["a", "b", "c", "d", "e"])
OPS = st.one_of(
    st.tuples(st.just("create"), NAMES, st.lists(NAMES, max_size=2)),
    st.tuples(st.just("retarget"), NAMES, st.lists(NAMES, max_size=2)),
    st.tuples(st.just("desc"), NAMES, st.lists(st.text(max_size=5), max_size=2)),
)


@given(st.lists(OPS, max_size=25))
def test_random_operation_sequences_keep_invariants(ops):
    s = PoemStore()
    for kind, name, arg in ops:
        try:
            if kind == "create":
                s.create_operator("pg", name, "unary", ["d"], targets=arg)
            elif kind == "retarget":
                s.update_operators("pg", {"target": arg}, Predicate("name", "=", name))
            else:
                s.update_operators("pg", {"desc": arg}, Predicate("name", "=", name))
        except (DuplicateOperator, DanglingTarget, InvariantViolation, UnknownSource):
            pass
        objs = list(s)
        keys = [(o.source, o.name) for o in objs]
        assert len(keys) == len(set(keys))
        assert len({o.oid for o in objs}) == len(objs)
        for o in objs:
            assert o.descriptions
            for t in o.targets:
                assert t != o.name and ("pg", t) in keys
        if objs:
            assert s.auxiliary_pairs("pg") == {(o.name, t) for o in objs for t in o.targets}
        assert PoemStore.from_document(s.to_document()) == s
