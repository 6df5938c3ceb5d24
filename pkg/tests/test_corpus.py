import pytest
from hypothesis import given, strategies as st

from qepnarrate.corpus import (BINDABLE, TAGS, TrainingSample, build_corpus, corpus_self_bleu, decompose_acts,
                               fill_tags, load_corpus, paraphrase, paraphrase_tokens, render_input, render_output,
                               save_corpus, split_corpus, tags_in)
from qepnarrate.errors import UnboundTag
from qepnarrate.plan import OperatorTree, PlanNode, generate_random_tree, load_plan
from qepnarrate.poem import default_store


def example_acts(plans_dir, store):
    return decompose_acts(load_plan(plans_dir / "example1_dblp.json"), store)


def test_acts_of_example(plans_dir, store):
    acts = example_acts(plans_dir, store)
    assert [a.kind for a in acts] == ["single", "single", "cluster", "cluster", "single"]


def test_tagged_outputs(plans_dir, store):
    acts = example_acts(plans_dir, store)
    out, bindings = render_output(acts[2])
    assert " ".join(out) == ("hash <T> and perform hash join on tablename and <T> on condition <C> to get the "
                             "intermediate relation <TN> .")
    assert bindings == {"<T>": "T1", "tablename": "inproceedings", "<C>": "((i.proceeding_key)= (p.pub_key))",
                        "<TN>": "T2"}
    out, bindings = render_output(acts[-1])
    assert out[-5:] == ["get", "the", "final", "results", "."]
    assert "<TN>" not in bindings


def test_index_scan_act(store):
    tree = OperatorTree(PlanNode("Limit", limit_count=5, children=(
        PlanNode("Index Scan", relation_name="customer",
                 conditions={"filter": "(c_mktsegment = 'BUILDING')"}),)))
    out, bindings = render_output(decompose_acts(tree, store)[0])
    assert " ".join(out) == "perform index scan on tablename and filtering on <F> to get the intermediate " \
                            "relation <TN> ."
    assert bindings["<F>"] == "(c_mktsegment = 'BUILDING')" and bindings["<TN>"] == "T1"


def test_root_act_without_conditions(store):
    tree = OperatorTree(PlanNode("Unique", children=(PlanNode("Seq Scan", relation_name="t", conditions={
        "filter": "(x > 1)"}),)))
    out, bindings = render_output(decompose_acts(tree, store)[-1])
    assert bindings == {"<T>": "T1"}
    assert tags_in(out) == {"<T>"}


def test_fill_tags():
    tokens = "perform index scan on <T> and filtering on <F> to get the intermediate relation <TN> .".split()
    sentence = fill_tags(tokens, {"<T>": "T1", "<F>": "c_mktsegment = 'BUILDING'", "<TN>": "T2"})
    assert sentence == ("perform index scan on T1 and filtering on c_mktsegment = 'BUILDING' to get the "
                        "intermediate relation T2.")
    assert fill_tags(["a", "b"], {}) == "a b"
    with pytest.raises(UnboundTag):
        fill_tags(["<TN>"], {})


def test_fill_tags_per_occurrence_values():
    assert fill_tags(["<T>", "and", "<T>", "then", "<T>"], {"<T>": ["T1", "T2"]}) == "T1 and T2 then T2"


def test_paraphrase_examples():
    variants = paraphrase("perform sequential scan on user and filtering on age > 10 to get the final results.")
    assert "execute sequential scan on user and separating on age > 10 to get the conclusive outcome." in variants
    assert len(variants) == 3
    assert paraphrase("sort <T> on <A> .") == []


@given(st.lists(st.sampled_from(list(BINDABLE) + ["perform", "join", "get", "the", "final", "results",
                                                  "scan", "on", "and", "filtering"]), max_size=15),
       st.integers(0, 100))
def test_paraphrase_preserves_tags(tokens, seed):
    for variant in paraphrase_tokens(tokens, 3, seed):
        assert [t for t in variant if t in BINDABLE] == [t for t in tokens if t in BINDABLE]
        assert variant != tokens
    assert paraphrase_tokens(tokens, 3, seed) == paraphrase_tokens(tokens, 3, seed)


@pytest.fixture(scope="module")
def corpus(schema):
    trees = [generate_random_tree(schema, i, 12) for i in range(40)]
    return split_corpus(build_corpus(trees, default_store(), seed=0))


def test_tag_binding_closure(corpus):
    for s in corpus.samples:
        assert tags_in(s.output_tokens) == set(s.bindings)


def test_inputs_hide_schema_names(corpus, schema):
    names = {t.name for t in schema.tables} | {c for t in schema.tables for c, _ in t.columns}
    for s in corpus.samples:
        assert not names & set(s.input_tokens)


def test_filled_outputs_equal_rule_text(schema, store):
    for seed in range(30):
        for act in decompose_acts(generate_random_tree(schema, seed, 15), store):
            out, bindings = render_output(act)
            assert fill_tags(out, bindings) == act.step.render()


def test_split_is_seeded_and_uniform(corpus):
    assert abs(len(corpus.part("train")) - 0.8 * len(corpus.samples)) <= 1
    again = split_corpus(corpus, 0.8, 0)
    assert [s.split for s in again.samples] == [s.split for s in corpus.samples]
    other = [s.split for s in split_corpus(corpus, 0.8, 1).samples]
    split_corpus(corpus, 0.8, 0)
    assert other != [s.split for s in corpus.samples]


def test_expansion_and_diversity(corpus):
    assert 2.5 <= len(corpus.samples) / corpus.act_count <= 4.0
    assert 0.3 < corpus_self_bleu(corpus) < 0.7


def test_without_paraphrase_self_bleu_is_one(schema, store):
    trees = [generate_random_tree(schema, i, 12) for i in range(5)]
    assert corpus_self_bleu(build_corpus(trees, store, variants=0)) == 1.0


def test_jsonl_round_trip(tmp_path, corpus):
    path = tmp_path / "c.jsonl"
    save_corpus(corpus, path)
    loaded = load_corpus(path)
    assert [s.__dict__ for s in loaded.samples] == [s.__dict__ for s in corpus.samples]


def test_acts_per_tree(schema, store):
    counts = [len(decompose_acts(generate_random_tree(schema, i, 12), store)) for i in range(22)]
    assert all(1 <= c <= 12 for c in counts)
