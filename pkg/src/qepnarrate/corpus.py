"""Training corpus synthesis.

Trees are cut into acts (one narrative step each), every act becomes an
(input tokens, tagged output tokens) sample, and outputs are diversified
with a synonym-table paraphraser.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import UnboundTag
from .plan import OperatorTree
from .poem import PoemStore
from .rules import FINAL, INTERMEDIATE, LotNode, Step, annotate, steps
from .seq2seq.metrics import self_bleu
from .templates import PLACEHOLDER_RE


class SpecialTag(str, Enum):
    I = "<I>"   # indexed column / index condition
    F = "<F>"   # filtering condition
    C = "<C>"   # join condition
    T = "<T>"   # existing intermediate relation
    TN = "<TN>"  # new intermediate relation
    A = "<A>"   # sort column
    G = "<G>"   # group-by column


TAGS = tuple(t.value for t in SpecialTag)
# base relations are abstracted to this token on both sides
RELATION = "tablename"
BINDABLE = TAGS + (RELATION,)


@dataclass(frozen=True)
class Act:
    kind: str  # "single" | "cluster"
    step: Step

    @property
    def nodes(self) -> tuple[LotNode, ...]:
        return self.step.nodes


@dataclass
class TrainingSample:
    input_tokens: list[str]
    output_tokens: list[str]
    bindings: dict
    group: str
    split: Optional[str] = None

    def to_json(self) -> str:
        return json.dumps({
            "group": self.group,
            "input": self.input_tokens,
            "output": self.output_tokens,
            "bindings": self.bindings,
            "split": self.split,
        }, ensure_ascii=False)

    @classmethod
    def from_dict(cls, doc) -> "TrainingSample":
        return cls(doc["input"], doc["output"], doc.get("bindings", {}), doc["group"], doc.get("split"))


@dataclass
class Corpus:
    samples: list[TrainingSample] = field(default_factory=list)
    act_count: int = 0

    def groups(self) -> dict[str, list[TrainingSample]]:
        out: dict[str, list[TrainingSample]] = {}
        for s in self.samples:
            out.setdefault(s.group, []).append(s)
        return out

    def part(self, split: str) -> list[TrainingSample]:
        return [s for s in self.samples if s.split == split]

    @property
    def expansion_factor(self) -> float:
        return len(self.samples) / max(len(self.groups()), 1)


# --- acts ----------------------------------------------------------------

def decompose_acts(tree: OperatorTree, store: PoemStore, seed: int = 0) -> list[Act]:
    lot = annotate(tree, store, seed)
    return [Act("cluster" if st.auxiliaries else "single", st) for st in steps(lot)]


def _operator_words(node: LotNode) -> list[str]:
    words = node.plan.node_type.lower().split()
    if node.plan.parallel_aware and "parallel" not in words:
        words = ["parallel"] + words
    return words


def render_input(act: Act) -> list[str]:
    """Operator words of the critical node, one token per input relation
    (``tablename`` or ``<T>``), auxiliary operator words, then markers for
    the clauses and result kind the output sentence carries."""
    node = act.step.node
    tokens = _operator_words(node)
    if node.plan.is_scan and node.plan.relation_name:
        tokens.append(RELATION)
    else:
        for child in node.children:
            tokens.append("<T>" if child.reference_is_intermediate() else RELATION)
    for aux in act.step.auxiliaries:
        tokens.extend(_operator_words(aux))
    markers = set()
    for member in act.nodes:
        for slot in ("$C$", "$G$", "$A$"):
            if slot in member.slot_tags and not (slot == "$A$" and member is not node):
                markers.add(member.slot_tags[slot])
    tokens.extend(t for t in TAGS if t in markers)
    if act.step.is_root:
        tokens.append("final")
    elif node.identifier:
        tokens.append("<TN>")
    return tokens


# --- outputs -------------------------------------------------------------

def split_sentence(sentence: str) -> list[str]:
    words = sentence.split()
    if words and words[-1].endswith(".") and words[-1] != ".":
        words[-1] = words[-1][:-1]
        words.append(".")
    return words


def join_tokens(tokens: Sequence[str]) -> str:
    text = " ".join(tokens)
    return text[:-2] + "." if text.endswith(" .") else text


def render_output(act: Act) -> tuple[list[str], dict]:
    """Tagged output tokens for ``act`` and the literal each tag stands for."""
    pieces: list[str] = []
    occurrences: list[tuple[str, str]] = []
    for template, bindings in act.step.segments():
        member = next(n for n in act.nodes if n.bindings is bindings)
        last = 0
        text = []
        for m in PLACEHOLDER_RE.finditer(template):
            text.append(template[last:m.start()])
            tag = member.slot_tags[m.group(0)]
            text.append(tag)
            occurrences.append((tag, str(bindings[m.group(0)])))
            last = m.end()
        text.append(template[last:])
        pieces.append("".join(text))
    sentence = " and ".join(pieces)
    if act.step.is_root:
        sentence += f" {FINAL}"
    elif act.step.node.identifier:
        sentence += f" {INTERMEDIATE} <TN>"
        occurrences.append(("<TN>", act.step.node.identifier))
    tokens = sentence.split() + ["."]
    return tokens, collapse_bindings(occurrences)


def collapse_bindings(occurrences: Iterable[tuple[str, str]]) -> dict:
    """Tag -> literal, or tag -> per-occurrence list when a tag binds
    more than one distinct literal within a sentence."""
    seen: dict[str, list[str]] = {}
    for tag, literal in occurrences:
        seen.setdefault(tag, []).append(literal)
    return {tag: vals[0] if len(set(vals)) == 1 else vals for tag, vals in seen.items()}


def fill_tags(tokens: Sequence[str], bindings: dict) -> str:
    """Replace every tag token with its literal and join into a sentence."""
    used: dict[str, int] = {}
    out = []
    for tok in tokens:
        if tok in BINDABLE:
            if tok not in bindings:
                raise UnboundTag(tok)
            value = bindings[tok]
            if isinstance(value, list):
                k = used.get(tok, 0)
                used[tok] = k + 1
                value = value[min(k, len(value) - 1)]
            out.append(value)
        else:
            out.append(tok)
    return join_tokens(out)


def tags_in(tokens: Sequence[str]) -> set[str]:
    return {t for t in tokens if t in BINDABLE}


# --- paraphrasing ----------------------------------------------------------

# phrase -> (word class, synonyms); "join" -> "enter" is deliberately poor.
# "extra" entries only take part in the broader variants 2 and 3; the base
# table alone leaves groups too alike (Self-BLEU ~0.75).
SYNONYMS = {
    ("perform",): ("verb", (("execute",), ("carry", "out"))),
    ("get",): ("verb", (("obtain",), ("acquire",))),
    ("filtering",): ("noun", (("separating",), ("selecting", "out"))),
    ("final", "results"): ("noun", (("conclusive", "outcome"), ("final", "outcome"))),
    ("intermediate",): ("noun", (("transitional",), ("temporary",))),
    ("join",): ("noun", (("enter",),)),
    ("scan",): ("extra", (("traversal",), ("read",))),
    ("condition",): ("extra", (("predicate",), ("criterion",))),
    ("relation",): ("extra", (("table",), ("result",))),
    ("attribute",): ("extra", (("column",), ("field",))),
}
_LONGEST = max(len(k) for k in SYNONYMS)


def _sites(tokens: Sequence[str]) -> list[tuple[int, tuple[str, ...]]]:
    sites, i = [], 0
    while i < len(tokens):
        for width in range(_LONGEST, 0, -1):
            phrase = tuple(tokens[i:i + width])
            if phrase in SYNONYMS:
                sites.append((i, phrase))
                i += width
                break
        else:
            i += 1
    return sites


def _variant(tokens: Sequence[str], choose) -> list[str]:
    out, i = [], 0
    for start, phrase in _sites(tokens):
        out.extend(tokens[i:start])
        replacement = choose(phrase)
        out.extend(replacement if replacement is not None else phrase)
        i = start + len(phrase)
    out.extend(tokens[i:])
    return out


def paraphrase_tokens(tokens: Sequence[str], variant_count: int = 3, seed: int = 0) -> list[list[str]]:
    """Up to ``variant_count`` distinct rewrites of ``tokens``.

    Variant 1 swaps base-table nouns and "perform" for their first synonym,
    variant 2 swaps every phrase for its last synonym, variant 3 draws a
    seeded synonym per phrase. Tag tokens never match a phrase.
    """
    tokens = list(tokens)
    rng = random.Random(seed)

    def nouns_and_perform(phrase):
        cls, syns = SYNONYMS[phrase]
        return syns[0] if cls == "noun" or phrase == ("perform",) else None

    def last(phrase):
        return SYNONYMS[phrase][1][-1]

    def drawn(phrase):
        return rng.choice(SYNONYMS[phrase][1])

    out: list[list[str]] = []
    for choose in (nouns_and_perform, last, drawn)[:variant_count]:
        v = _variant(tokens, choose)
        if v != tokens and v not in out:
            out.append(v)
    return out


def paraphrase(sentence: str, variant_count: int = 3, seed: int = 0) -> list[str]:
    return [join_tokens(v) for v in paraphrase_tokens(split_sentence(sentence), variant_count, seed)]


# --- corpus --------------------------------------------------------------

def samples_for_tree(tree: OperatorTree, store: PoemStore, tree_id, seed: int = 0, variants: int = 3):
    acts = decompose_acts(tree, store, seed)
    samples = []
    for k, act in enumerate(acts):
        inp = render_input(act)
        out, bindings = render_output(act)
        group = f"{tree_id}-{k}"
        samples.append(TrainingSample(inp, out, bindings, group))
        for v in paraphrase_tokens(out, variants, seed=hash_seed(seed, group)):
            samples.append(TrainingSample(list(inp), v, dict(bindings), group))
    return acts, samples


def hash_seed(seed: int, group: str) -> int:
    return random.Random(f"{seed}/{group}").randrange(2**31)


def build_corpus(trees: Sequence[OperatorTree], store: PoemStore, seed: int = 0, variants: int = 3) -> Corpus:
    corpus = Corpus()
    for i, tree in enumerate(trees):
        acts, samples = samples_for_tree(tree, store, i, seed, variants)
        corpus.act_count += len(acts)
        corpus.samples.extend(samples)
    return corpus


def split_corpus(corpus: Corpus, ratio: float = 0.8, seed: int = 0) -> Corpus:
    """Uniform random train/validation split of samples."""
    order = list(range(len(corpus.samples)))
    random.Random(seed).shuffle(order)
    n_train = round(ratio * len(order))
    train = set(order[:n_train])
    for i, sample in enumerate(corpus.samples):
        sample.split = "train" if i in train else "validation"
    return corpus


def corpus_self_bleu(corpus: Corpus) -> float:
    groups = corpus.groups()
    scores = [self_bleu([s.output_tokens for s in members]) for members in groups.values()]
    return sum(scores) / len(scores) if scores else 1.0


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in corpus.samples:
            f.write(s.to_json() + "\n")


def load_corpus(path) -> Corpus:
    samples = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                samples.append(TrainingSample.from_dict(json.loads(line)))
    corpus = Corpus(samples)
    corpus.act_count = len(corpus.groups())
    return corpus


def corpus_stats(corpus: Corpus) -> dict:
    groups = corpus.groups()
    return {
        "samples": len(corpus.samples),
        "groups": len(groups),
        "expansion_factor": round(corpus.expansion_factor, 4),
        "mean_self_bleu": round(corpus_self_bleu(corpus), 4),
        "train": len(corpus.part("train")),
        "validation": len(corpus.part("validation")),
    }
