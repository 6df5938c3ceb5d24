"""Greedy and beam decoding."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Collection, Sequence

import numpy as np

from .model import Qep2SeqModel, emittable_ids
from .vocab import BOS_ID, END_ID

DEFAULT_MAX_LEN = 64


@dataclass(frozen=True)
class BeamConfig:
    k: int = 4
    max_len: int = DEFAULT_MAX_LEN

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("beam width must be >= 1")


def _allowed(model: Qep2SeqModel, banned: Collection[int]) -> list[int]:
    return [t for t in emittable_ids(len(model.vocab_out)) if t not in banned or t == END_ID]


def greedy_decode(model: Qep2SeqModel, input_ids: Sequence[int], max_len: int = DEFAULT_MAX_LEN,
                  banned: Collection[int] = ()) -> list[int]:
    """Argmax each step (lowest id on ties) until END or ``max_len`` tokens.
    The END token is not part of the result; ids in ``banned`` are never emitted."""
    allowed = np.array(_allowed(model, banned))
    state = model.decoder_start(input_ids)
    s, c = state.h0, state.c0
    prev, out = BOS_ID, []
    for _ in range(max_len):
        probs, s, c = model.decoder_step(state, prev, s, c)
        prev = int(allowed[np.argmax(probs[allowed])])
        if prev == END_ID:
            break
        out.append(prev)
    return out


def beam_search(model: Qep2SeqModel, input_ids: Sequence[int], beam: BeamConfig = BeamConfig(),
                banned: Collection[int] = ()) -> list[int]:
    """Unnormalized log-probability beam search.

    Every expansion of the live beam is ranked by (-score, ids); the top K
    survive and those ending in END move to the completed pool. Hypotheses
    still live at ``max_len`` join the pool. The best pooled hypothesis wins,
    ties going to the lexicographically lowest id sequence.
    """
    allowed = _allowed(model, banned)
    state = model.decoder_start(input_ids)
    live = [(0.0, (), state.h0, state.c0)]
    done: list[tuple[float, tuple]] = []
    for _ in range(beam.max_len):
        cands = []
        for score, ids, s, c in live:
            probs, s2, c2 = model.decoder_step(state, ids[-1] if ids else BOS_ID, s, c)
            for tok in allowed:
                cands.append((score + math.log(probs[tok]), ids + (tok,), s2, c2))
        cands.sort(key=lambda h: (-h[0], h[1]))
        live = []
        for cand in cands[:beam.k]:
            if cand[1][-1] == END_ID:
                done.append((cand[0], cand[1]))
            else:
                live.append(cand)
        if not live:
            break
        # scores only fall, so a completed hypothesis ahead of every live one is final
        if done and max(d[0] for d in done) > max(h[0] for h in live):
            live = []
            break
    pool = done + [(h[0], h[1]) for h in live]
    score, ids = min(pool, key=lambda h: (-h[0], h[1]))
    return [t for t in ids if t != END_ID]


def sequence_log_prob(model: Qep2SeqModel, input_ids: Sequence[int], output_ids: Sequence[int]) -> float:
    """Log-probability of emitting exactly ``output_ids`` (END included if present)."""
    state = model.decoder_start(input_ids)
    s, c = state.h0, state.c0
    prev, total = BOS_ID, 0.0
    for tok in output_ids:
        probs, s, c = model.decoder_step(state, prev, s, c)
        total += math.log(probs[tok])
        prev = tok
    return total


def decode_tokens(model: Qep2SeqModel, tokens: Sequence[str], beam_k: int = 1,
                  max_len: int = DEFAULT_MAX_LEN, banned_tokens: Collection[str] = ()) -> list[str]:
    """Decode token strings; output tokens in ``banned_tokens`` are never emitted."""
    ids = model.vocab_in.encode(tokens)
    banned = {model.vocab_out.index[t] for t in banned_tokens if t in model.vocab_out.index}
    if beam_k <= 1:
        out = greedy_decode(model, ids, max_len, banned)
    else:
        out = beam_search(model, ids, BeamConfig(beam_k, max_len), banned)
    return model.vocab_out.decode(out)
