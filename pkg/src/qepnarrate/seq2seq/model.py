"""LSTM encoder / additive-attention LSTM decoder in float64 numpy.

Batches are right-padded. Encoder states are carried through padding so the
decoder starts from each sequence's last real state, and attention never
looks at padded positions. Gradients are computed by hand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .vocab import BOS_ID, END_ID, PAD_ID, UNK_ID, Vocab

GATES = ("i", "f", "o", "c")


def lstm_names(prefix: str, bias: bool = True) -> list[str]:
    names = [f"{prefix}.U_{g}" for g in GATES] + [f"{prefix}.V_{g}" for g in GATES]
    if bias:
        names += [f"{prefix}.b_{g}" for g in GATES]
    return names


def sigmoid(x):
    # split by sign so neither branch overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class ModelDims:
    hidden: int = 256
    enc_embed: int = 16
    dec_embed: int = 32
    gate_bias: bool = True


@dataclass
class Qep2SeqModel:
    vocab_in: Vocab
    vocab_out: Vocab
    dims: ModelDims
    params: dict[str, np.ndarray] = field(default_factory=dict)

    # --- construction ---------------------------------------------------

    @classmethod
    def create(cls, vocab_in: Vocab, vocab_out: Vocab, dims: Optional[ModelDims] = None,
               seed: int = 0, init_range: float = 0.1) -> "Qep2SeqModel":
        dims = dims or ModelDims()
        model = cls(vocab_in, vocab_out, dims)
        rng = np.random.default_rng(seed)
        for name, shape in model.shapes().items():
            model.params[name] = rng.uniform(-init_range, init_range, size=shape)
        return model

    def shapes(self) -> dict[str, tuple]:
        d, ei, eo = self.dims.hidden, self.dims.enc_embed, self.dims.dec_embed
        out = {"enc_emb": (len(self.vocab_in), ei), "dec_emb": (len(self.vocab_out), eo)}
        for prefix, e in (("encoder", ei), ("decoder", eo)):
            for name in lstm_names(prefix, self.dims.gate_bias):
                kind = name.split(".")[1][0]
                out[name] = (d, d) if kind == "U" else (d, e) if kind == "V" else (d,)
        out["W_s"] = (d, d)
        out["W_h"] = (d, d)
        out["V_a"] = (d,)
        out["W_out"] = (len(self.vocab_out), 2 * d)
        return out

    def param_names(self) -> list[str]:
        return list(self.shapes())

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def recurrent_count(self, part: str = "encoder") -> int:
        """Parameters of one LSTM layer excluding embeddings."""
        return sum(self.params[n].size for n in lstm_names(part, self.dims.gate_bias))

    def load_embeddings(self, matrix, vocab: Vocab, side: str = "in") -> None:
        """Overwrite encoder (``side="in"``) or decoder embedding rows from an
        external matrix whose rows follow ``vocab``; unknown tokens keep their
        current rows."""
        key, own = ("enc_emb", self.vocab_in) if side == "in" else ("dec_emb", self.vocab_out)
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (len(vocab), self.params[key].shape[1]):
            raise ValueError(f"embedding matrix shape {matrix.shape} does not fit {key}")
        for tok, row in zip(vocab.tokens, matrix):
            if tok in own:
                self.params[key][own.index[tok]] = row

    # --- stacked gate weights ------------------------------------------

    def _stack(self, prefix: str):
        p = self.params
        U = np.concatenate([p[f"{prefix}.U_{g}"] for g in GATES], axis=0)
        V = np.concatenate([p[f"{prefix}.V_{g}"] for g in GATES], axis=0)
        if self.dims.gate_bias:
            b = np.concatenate([p[f"{prefix}.b_{g}"] for g in GATES])
        else:
            b = np.zeros(4 * self.dims.hidden)
        return U, V, b

    def _unstack(self, prefix: str, dU, dV, db, grads):
        d = self.dims.hidden
        for k, g in enumerate(GATES):
            grads[f"{prefix}.U_{g}"] += dU[k * d:(k + 1) * d]
            grads[f"{prefix}.V_{g}"] += dV[k * d:(k + 1) * d]
            if self.dims.gate_bias:
                grads[f"{prefix}.b_{g}"] += db[k * d:(k + 1) * d]

    # --- single-sequence primitives ------------------------------------

    def encode(self, input_ids: Sequence[int]):
        """Encoder hidden states (N, d) and the final (h, c)."""
        U, V, b = self._stack("encoder")
        d = self.dims.hidden
        h = np.zeros(d)
        c = np.zeros(d)
        states = []
        for tok in input_ids:
            h, c, _ = _lstm_forward(U, V, b, h[None], c[None], self.params["enc_emb"][tok][None])
            h, c = h[0], c[0]
            states.append(h)
        H = np.array(states) if states else np.zeros((0, d))
        return H, h, c

    def attend(self, s, H):
        return attend(self.params["W_s"], self.params["W_h"], self.params["V_a"], s, H)

    def step_probs(self, s, a):
        return softmax(self.params["W_out"] @ np.concatenate([s, a]))

    def decoder_start(self, input_ids: Sequence[int]):
        H, h, c = self.encode(input_ids)
        return DecoderState(H, H @ self.params["W_h"].T, h, c, self._stack("decoder"))

    def decoder_step(self, state: "DecoderState", prev_id: int, s, c):
        """One decoder step from (s, c) fed ``prev_id``; returns (probs, s', c')."""
        U, V, b = state.stacked
        s2, c2, _ = _lstm_forward(U, V, b, s[None], c[None], self.params["dec_emb"][prev_id][None])
        s2, c2 = s2[0], c2[0]
        if len(state.H):
            pre = np.tanh(self.params["W_s"] @ s2 + state.proj)
            alpha = softmax(pre @ self.params["V_a"])
            a = alpha @ state.H
        else:
            a = np.zeros_like(s2)
        return self.step_probs(s2, a), s2, c2

    # --- batched training pass -----------------------------------------

    def loss_and_grads(self, inputs: Sequence[Sequence[int]], targets: Sequence[Sequence[int]],
                       need_grads: bool = True):
        """Summed teacher-forced cross-entropy over the batch.

        ``targets`` exclude BOS and include the final END. Returns
        (loss, grads or None, per-position predictions list).
        """
        p = self.params
        d = self.dims.hidden
        B = len(inputs)
        N = max((len(x) for x in inputs), default=0)
        M = max((len(y) for y in targets), default=0)
        X = np.full((B, N), PAD_ID, dtype=np.int64)
        in_mask = np.zeros((B, N))
        for r, x in enumerate(inputs):
            X[r, :len(x)] = x
            in_mask[r, :len(x)] = 1.0
        Y = np.full((B, M), PAD_ID, dtype=np.int64)
        Yprev = np.full((B, M), PAD_ID, dtype=np.int64)
        out_mask = np.zeros((B, M))
        for r, y in enumerate(targets):
            Y[r, :len(y)] = y
            Yprev[r, :len(y)] = [BOS_ID] + list(y[:-1])
            out_mask[r, :len(y)] = 1.0

        Ue, Ve, be = self._stack("encoder")
        Ud, Vd, bd = self._stack("decoder")

        # encoder
        h = np.zeros((B, d))
        c = np.zeros((B, d))
        enc_cache = []
        H = np.zeros((B, N, d))
        for t in range(N):
            x = p["enc_emb"][X[:, t]]
            h_new, c_new, cache = _lstm_forward(Ue, Ve, be, h, c, x)
            m = in_mask[:, t:t + 1]
            enc_cache.append((cache, m))
            h = m * h_new + (1 - m) * h
            c = m * c_new + (1 - m) * c
            H[:, t] = h
        proj = H @ p["W_h"].T
        att_bias = np.where(in_mask > 0, 0.0, -np.inf)

        # decoder
        s, cs = h, c
        dec_cache = []
        loss = 0.0
        preds = np.zeros((B, M), dtype=np.int64)
        emit_mask = _emit_mask(len(self.vocab_out))
        for t in range(M):
            x = p["dec_emb"][Yprev[:, t]]
            s, cs, cache = _lstm_forward(Ud, Vd, bd, s, cs, x)
            pre = np.tanh((s @ p["W_s"].T)[:, None, :] + proj)
            g = pre @ p["V_a"] + att_bias
            alpha = softmax(g, axis=1) if N else np.zeros((B, 0))
            a = np.einsum("bn,bnd->bd", alpha, H)
            sa = np.concatenate([s, a], axis=1)
            probs = softmax(sa @ p["W_out"].T)
            gold = probs[np.arange(B), Y[:, t]]
            mt = out_mask[:, t]
            loss -= float(np.sum(mt * np.log(np.where(mt > 0, gold, 1.0))))
            preds[:, t] = np.argmax(np.where(emit_mask, probs, -1.0), axis=1)
            dec_cache.append((cache, pre, alpha, a, sa, probs))

        pred_lists = [list(preds[r, :len(targets[r])]) for r in range(B)]
        if not need_grads:
            return loss, None, pred_lists

        grads = self.zeros_like()
        dUe, dVe, dbe = np.zeros_like(Ue), np.zeros_like(Ve), np.zeros_like(be)
        dUd, dVd, dbd = np.zeros_like(Ud), np.zeros_like(Vd), np.zeros_like(bd)
        dH = np.zeros_like(H)
        dproj = np.zeros_like(proj)
        ds_next = np.zeros((B, d))
        dc_next = np.zeros((B, d))
        for t in reversed(range(M)):
            cache, pre, alpha, a, sa, probs = dec_cache[t]
            s_t = sa[:, :d]
            dlogits = probs.copy()
            dlogits[np.arange(B), Y[:, t]] -= 1.0
            dlogits *= out_mask[:, t:t + 1]
            grads["W_out"] += dlogits.T @ sa
            dsa = dlogits @ p["W_out"]
            ds = ds_next + dsa[:, :d]
            da = dsa[:, d:]
            if N:
                dH += alpha[:, :, None] * da[:, None, :]
                dalpha = np.einsum("bd,bnd->bn", da, H)
                dg = alpha * (dalpha - np.sum(alpha * dalpha, axis=1, keepdims=True))
                grads["V_a"] += np.einsum("bn,bnd->d", dg, pre)
                dpre = dg[:, :, None] * p["V_a"] * (1 - pre ** 2)
                dproj += dpre
                dpre_sum = dpre.sum(axis=1)
                grads["W_s"] += dpre_sum.T @ s_t
                ds = ds + dpre_sum @ p["W_s"]
            dh_prev, dc_prev, dx = _lstm_backward(Ud, Vd, cache, ds, dc_next, dUd, dVd, dbd)
            np.add.at(grads["dec_emb"], Yprev[:, t], dx)
            ds_next, dc_next = dh_prev, dc_prev

        grads["W_h"] += np.einsum("bnd,bne->de", dproj, H)
        dH += dproj @ p["W_h"]
        dh_next, dcell_next = ds_next, dc_next
        for t in reversed(range(N)):
            cache, m = enc_cache[t]
            dh = dh_next + dH[:, t]
            dh_prev, dc_prev, dx = _lstm_backward(Ue, Ve, cache, m * dh, m * dcell_next, dUe, dVe, dbe)
            np.add.at(grads["enc_emb"], X[:, t], dx * m)
            dh_next = dh_prev + (1 - m) * dh
            dcell_next = dc_prev + (1 - m) * dcell_next
        self._unstack("encoder", dUe, dVe, dbe, grads)
        self._unstack("decoder", dUd, dVd, dbd, grads)
        return loss, grads, pred_lists


@dataclass
class DecoderState:
    H: np.ndarray
    proj: np.ndarray
    h0: np.ndarray
    c0: np.ndarray
    stacked: tuple


def _emit_mask(size: int) -> np.ndarray:
    mask = np.ones(size, dtype=bool)
    mask[[PAD_ID, BOS_ID, UNK_ID]] = False
    return mask


def emittable_ids(size: int) -> list[int]:
    return [i for i in range(size) if i not in (PAD_ID, BOS_ID, UNK_ID)]


def _lstm_forward(U, V, b, h, c, x):
    d = h.shape[1]
    z = h @ U.T + x @ V.T + b
    i = sigmoid(z[:, :d])
    f = sigmoid(z[:, d:2 * d])
    o = sigmoid(z[:, 2 * d:3 * d])
    g = np.tanh(z[:, 3 * d:])
    c_new = i * g + f * c
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (h, c, x, i, f, o, g, tc)


def _lstm_backward(U, V, cache, dh, dc_in, dU, dV, db):
    h, c, x, i, f, o, g, tc = cache
    do = dh * tc
    dc = dc_in + dh * o * (1 - tc ** 2)
    dz = np.concatenate([
        dc * g * i * (1 - i),
        dc * c * f * (1 - f),
        do * o * (1 - o),
        dc * i * (1 - g ** 2),
    ], axis=1)
    dU += dz.T @ h
    dV += dz.T @ x
    db += dz.sum(axis=0)
    return dz @ U, dc * f, dz @ V


def lstm_step(params: dict, h_prev, c_prev, x):
    """One LSTM step for a single vector; ``params`` holds U_*, V_* and
    optionally b_* keyed by gate letter (e.g. ``"U_i"``)."""
    d = len(h_prev)
    b = np.concatenate([params.get(f"b_{g}", np.zeros(d)) for g in GATES])
    U = np.concatenate([params[f"U_{g}"] for g in GATES])
    V = np.concatenate([params[f"V_{g}"] for g in GATES])
    if U.shape[1] != d or V.shape[1] != len(x) or c_prev.shape != (d,):
        raise ValueError("dimension mismatch")
    h, c, _ = _lstm_forward(U, V, b, np.asarray(h_prev, float)[None], np.asarray(c_prev, float)[None],
                            np.asarray(x, float)[None])
    return h[0], c[0]


def attend(W_s, W_h, V_a, s, H):
    """Additive attention: (alphas, context)."""
    g = np.tanh(W_s @ s + H @ W_h.T) @ V_a
    alpha = softmax(g)
    return alpha, alpha @ H
