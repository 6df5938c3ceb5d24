"""Sentence BLEU, Self-BLEU and token accuracy."""
from __future__ import annotations

import math
from collections import Counter
from typing import Sequence


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: Sequence[str], references: Sequence[Sequence[str]], max_n: int = 4) -> float:
    """BLEU-4 of one tokenized candidate against tokenized references, in [0, 100].

    Uniform weights, clipped counts, brevity penalty against the closest
    reference length. Orders with zero matches are add-one smoothed, except
    that zero unigram overlap scores 0.
    """
    candidate = list(candidate)
    references = [list(r) for r in references]
    if not candidate or not references:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        counts = _ngrams(candidate, n)
        max_ref = Counter()
        for ref in references:
            for gram, c in _ngrams(ref, n).items():
                if c > max_ref[gram]:
                    max_ref[gram] = c
        matched = sum(min(c, max_ref[g]) for g, c in counts.items())
        total = max(len(candidate) - n + 1, 0)
        if matched == 0:
            if n == 1:
                return 0.0
            precision = 1.0 / (total + 1)
        else:
            precision = matched / total
        log_sum += math.log(precision)
    c = len(candidate)
    r = min((abs(len(ref) - c), len(ref)) for ref in references)[1]
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return 100.0 * bp * math.exp(log_sum / max_n)


def mean_bleu(pairs) -> float:
    """Average sentence BLEU over (candidate, references) pairs."""
    scores = [bleu(c, refs) for c, refs in pairs]
    return sum(scores) / len(scores) if scores else 0.0


def self_bleu(group: Sequence[Sequence[str]]) -> float:
    """Mean BLEU (in [0, 1]) of each member against the rest; 1.0 for a singleton."""
    group = [list(s) for s in group]
    if len(group) < 2:
        return 1.0
    total = 0.0
    for i, sentence in enumerate(group):
        total += bleu(sentence, group[:i] + group[i + 1:]) / 100.0
    return total / len(group)


def accuracy(predicted: Sequence, gold: Sequence) -> float:
    """Fraction of gold positions where the prediction matches; 1.0 for empty gold."""
    if len(gold) == 0:
        return 1.0
    hits = sum(1 for t, g in enumerate(gold) if t < len(predicted) and predicted[t] == g)
    return hits / len(gold)
