"""Binary checkpoint: a header line, a JSON metadata line, raw float64 arrays."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import IoFailure, MalformedDocument
from .model import ModelDims, Qep2SeqModel
from .vocab import Vocab

HEADER = b"QEP2SEQ v1\n"


def dumps_model(model: Qep2SeqModel) -> bytes:
    names = model.param_names()
    meta = {
        "hidden": model.dims.hidden,
        "enc_embed": model.dims.enc_embed,
        "dec_embed": model.dims.dec_embed,
        "gate_bias": model.dims.gate_bias,
        "vocab_in": model.vocab_in.tokens,
        "vocab_out": model.vocab_out.tokens,
        "arrays": [[n, list(model.params[n].shape)] for n in names],
    }
    body = b"".join(np.ascontiguousarray(model.params[n], dtype="<f8").tobytes() for n in names)
    return HEADER + json.dumps(meta, sort_keys=True).encode("utf-8") + b"\n" + body


def loads_model(data: bytes) -> Qep2SeqModel:
    if not data.startswith(HEADER):
        raise MalformedDocument("not a QEP2SEQ v1 checkpoint")
    rest = data[len(HEADER):]
    nl = rest.find(b"\n")
    if nl < 0:
        raise MalformedDocument("checkpoint metadata line missing")
    try:
        meta = json.loads(rest[:nl])
    except ValueError as exc:
        raise MalformedDocument(f"checkpoint metadata: {exc}") from None
    dims = ModelDims(meta["hidden"], meta["enc_embed"], meta["dec_embed"], meta["gate_bias"])
    model = Qep2SeqModel(Vocab(meta["vocab_in"]), Vocab(meta["vocab_out"]), dims)
    body = rest[nl + 1:]
    offset = 0
    expected = model.shapes()
    for name, shape in meta["arrays"]:
        if tuple(shape) != expected.get(name):
            raise MalformedDocument(f"array {name} has shape {shape}")
        size = int(np.prod(shape)) * 8
        if offset + size > len(body):
            raise MalformedDocument("checkpoint truncated")
        model.params[name] = np.frombuffer(body[offset:offset + size], dtype="<f8").reshape(shape).astype(np.float64)
        offset += size
    if offset != len(body) or set(model.params) != set(expected):
        raise MalformedDocument("checkpoint arrays do not match dimensions")
    return model


def save_model(model: Qep2SeqModel, path) -> None:
    try:
        Path(path).write_bytes(dumps_model(model))
    except OSError as exc:
        raise IoFailure(str(exc)) from None


def load_model(path) -> Qep2SeqModel:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from None
    return loads_model(data)
