"""Teacher-forced SGD training and evaluation."""
from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Optional, Sequence

import numpy as np

from .decode import DEFAULT_MAX_LEN, decode_tokens
from .metrics import accuracy, bleu
from .model import ModelDims, Qep2SeqModel
from .vocab import END_ID, Vocab

_CAMEL = {
    "learning_rate": "learningRate",
    "batch_size": "batchSize",
    "max_epochs": "maxEpochs",
    "init_range": "initRange",
    "early_stop_delta": "earlyStopDelta",
    "seed": "rngSeed",
    "hidden": "hidden",
    "enc_embed": "encEmbed",
    "dec_embed": "decEmbed",
    "gate_bias": "gateBias",
}


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 4
    max_epochs: int = 50
    init_range: float = 0.1
    early_stop_delta: float = 0.001
    seed: int = 0
    hidden: int = 256
    enc_embed: int = 16
    dec_embed: int = 32
    gate_bias: bool = True

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        back = {v: k for k, v in _CAMEL.items()}
        kwargs = {}
        for key, value in doc.items():
            name = back.get(key, key)
            if name not in _CAMEL:
                raise ValueError(f"unknown training option {key!r}")
            if name == "init_range" and isinstance(value, (list, tuple)):
                value = max(abs(v) for v in value)
            kwargs[name] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {_CAMEL[k]: v for k, v in asdict(self).items()}

    @property
    def dims(self) -> ModelDims:
        return ModelDims(self.hidden, self.enc_embed, self.dec_embed, self.gate_bias)


@dataclass
class TrainResult:
    model: Qep2SeqModel
    history: list[float] = field(default_factory=list)  # mean loss per sample, per epoch
    epoch_seconds: list[float] = field(default_factory=list)
    stopped_early: bool = False


def encode_pairs(model: Qep2SeqModel, pairs):
    """(input tokens, output tokens) -> (input ids, output ids + END)."""
    return [(model.vocab_in.encode(i), model.vocab_out.encode(o) + [END_ID]) for i, o in pairs]


def build_model(pairs, config: TrainConfig) -> Qep2SeqModel:
    vin = Vocab.build(i for i, _ in pairs)
    vout = Vocab.build(o for _, o in pairs)
    return Qep2SeqModel.create(vin, vout, config.dims, seed=config.seed, init_range=config.init_range)


def train(model: Qep2SeqModel, pairs, config: TrainConfig,
          on_epoch: Optional[Callable[[int, float], None]] = None) -> TrainResult:
    """Plain SGD on the summed minibatch loss; deterministic per ``config.seed``.

    Stops after ``max_epochs`` or once the epoch loss moves by less than
    ``early_stop_delta``.
    """
    data = encode_pairs(model, pairs)
    rng = np.random.default_rng(config.seed)
    result = TrainResult(model)
    for epoch in range(config.max_epochs):
        start = time.perf_counter()
        order = rng.permutation(len(data))
        total = 0.0
        for b in range(0, len(order), config.batch_size):
            batch = [data[k] for k in order[b:b + config.batch_size]]
            loss, grads, _ = model.loss_and_grads([x for x, _ in batch], [y for _, y in batch])
            total += loss
            for name, g in grads.items():
                model.params[name] -= config.learning_rate * g
        mean = total / max(len(data), 1)
        result.history.append(mean)
        result.epoch_seconds.append(time.perf_counter() - start)
        if on_epoch:
            on_epoch(epoch + 1, mean)
        if len(result.history) > 1 and abs(result.history[-1] - result.history[-2]) < config.early_stop_delta:
            result.stopped_early = True
            break
    return result


def teacher_forcing_accuracy(model: Qep2SeqModel, pairs, batch_size: int = 32) -> float:
    """Mean over sequences of per-position accuracy of the argmax prediction
    under gold previous tokens (END position included)."""
    data = encode_pairs(model, pairs)
    scores = []
    for b in range(0, len(data), batch_size):
        batch = data[b:b + batch_size]
        _, _, preds = model.loss_and_grads([x for x, _ in batch], [y for _, y in batch], need_grads=False)
        scores.extend(accuracy(p, y) for p, (_, y) in zip(preds, batch))
    return sum(scores) / len(scores) if scores else 1.0


def teacher_forcing_ceiling(pairs) -> float:
    """Best teacher-forcing accuracy any deterministic model can reach on
    ``pairs``: the prediction for a context (input, gold prefix) can match
    only one of the next tokens the data shows for it."""
    seen: dict = {}
    for inp, out in pairs:
        full = list(out) + [None]  # None stands for END
        for k, tok in enumerate(full):
            counts = seen.setdefault((tuple(inp), tuple(full[:k])), Counter())
            counts[tok] += 1
    scores = []
    for inp, out in pairs:
        full = list(out) + [None]  # None stands for END
        hits = 0
        for k, tok in enumerate(full):
            best = seen[(tuple(inp), tuple(full[:k]))].most_common(1)[0][0]
            hits += best == tok
        scores.append(hits / len(full))
    return sum(scores) / len(scores) if scores else 1.0


def mean_loss(model: Qep2SeqModel, pairs, batch_size: int = 32) -> float:
    data = encode_pairs(model, pairs)
    total = 0.0
    for b in range(0, len(data), batch_size):
        batch = data[b:b + batch_size]
        total += model.loss_and_grads([x for x, _ in batch], [y for _, y in batch], need_grads=False)[0]
    return total / max(len(data), 1)


def decode_ids(model: Qep2SeqModel, input_tokens, beam_k: int = 1, max_len: int = DEFAULT_MAX_LEN,
               banned_tokens=()) -> list[str]:
    return decode_tokens(model, input_tokens, beam_k, max_len, banned_tokens)


def held_out_bleu(model: Qep2SeqModel, samples, references: dict, beam_k: int = 1) -> float:
    """Mean sentence BLEU of decoded outputs; ``references`` maps a group id
    to every output variant of that act."""
    scores = []
    for s in samples:
        hyp = decode_ids(model, s.input_tokens, beam_k)
        scores.append(bleu(hyp, references.get(s.group, [s.output_tokens])))
    return sum(scores) / len(scores) if scores else 0.0


def load_train_config(path) -> TrainConfig:
    with open(path, encoding="utf-8") as f:
        return TrainConfig.from_dict(json.load(f))
