import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qepnarrate.seq2seq.checkpoint import dumps_model, load_model, loads_model, save_model
from qepnarrate.seq2seq.model import GATES, ModelDims, Qep2SeqModel, attend, lstm_step, softmax
from qepnarrate.seq2seq.vocab import END_ID, RESERVED, Vocab
from qepnarrate.errors import MalformedDocument

from gradcheck import max_relative_errors, random_samples, tiny_model


def _sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def scalar_lstm(p, h, c, x):
    d = len(h)
    gate = {}
    for g in GATES:
        gate[g] = [sum(p[f"U_{g}"][r][k] * h[k] for k in range(d)) +
                   sum(p[f"V_{g}"][r][k] * x[k] for k in range(len(x))) + p[f"b_{g}"][r] for r in range(d)]
    i = [_sig(v) for v in gate["i"]]
    f = [_sig(v) for v in gate["f"]]
    o = [_sig(v) for v in gate["o"]]
    cc = [i[r] * math.tanh(gate["c"][r]) + f[r] * c[r] for r in range(d)]
    return [o[r] * math.tanh(cc[r]) for r in range(d)], cc


def rand_lstm(rng, d, e, bias=True):
    p = {}
    for g in GATES:
        p[f"U_{g}"] = rng.normal(size=(d, d))
        p[f"V_{g}"] = rng.normal(size=(d, e))
        p[f"b_{g}"] = rng.normal(size=d) if bias else np.zeros(d)
    return p


def test_lstm_zero_params():
    p = {f"{k}_{g}": np.zeros((3, 3 if k == "U" else 2)) for k in "UV" for g in GATES}
    h, c = lstm_step(p, np.zeros(3), np.zeros(3), np.zeros(2))
    assert np.all(h == 0) and np.all(c == 0)
    v = np.array([1.0, -2.0, 4.0])
    _, c = lstm_step(p, np.zeros(3), v, np.zeros(2))
    assert np.allclose(c, 0.5 * v, rtol=0, atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_lstm_matches_scalar_oracle(seed):
    rng = np.random.default_rng(seed)
    p = rand_lstm(rng, 3, 2)
    h0, c0, x = rng.normal(size=3), rng.normal(size=3), rng.normal(size=2)
    h, c = lstm_step(p, h0, c0, x)
    eh, ec = scalar_lstm(p, list(h0), list(c0), list(x))
    assert np.allclose(h, eh, atol=1e-12) and np.allclose(c, ec, atol=1e-12)


def test_lstm_dimension_mismatch():
    p = rand_lstm(np.random.default_rng(0), 3, 2)
    with pytest.raises(ValueError):
        lstm_step(p, np.zeros(3), np.zeros(3), np.zeros(4))


def test_attention_cases():
    rng = np.random.default_rng(0)
    W_s, W_h, V_a = rng.normal(size=(3, 3)), rng.normal(size=(3, 3)), rng.normal(size=3)
    s = rng.normal(size=3)
    h = rng.normal(size=(1, 3))
    alpha, a = attend(W_s, W_h, V_a, s, h)
    assert alpha.tolist() == [1.0] and np.array_equal(a, h[0])
    alpha, _ = attend(W_s, W_h, V_a, s, np.vstack([h, h]))
    assert np.allclose(alpha, [0.5, 0.5], atol=0)
    H = rng.normal(size=(4, 3))
    alpha, a = attend(W_s, W_h, V_a, s, H)
    g = [sum(V_a[r] * math.tanh(sum(W_s[r][k] * s[k] for k in range(3)) + sum(W_h[r][k] * H[i][k] for k in range(3)))
             for r in range(3)) for i in range(4)]
    z = [math.exp(v) for v in g]
    expected = [v / sum(z) for v in z]
    assert np.allclose(alpha, expected, atol=1e-12)
    assert np.allclose(a, sum(expected[i] * H[i] for i in range(4)), atol=1e-12)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=20))
def test_softmax_properties(values):
    p = softmax(np.array(values))
    assert abs(p.sum() - 1.0) <= 1e-12
    assert np.all(p > 0)


def test_step_probs_sum_to_one():
    m = tiny_model()
    state = m.decoder_start([4, 5])
    probs, _, _ = m.decoder_step(state, 1, state.h0, state.c0)
    assert abs(probs.sum() - 1) <= 1e-12 and np.all(probs > 0)


def test_uniform_loss():
    m = tiny_model()
    for k in m.params:
        m.params[k][...] = 0.0
    loss, _, _ = m.loss_and_grads([[4, 5]], [[4, 5, END_ID]])
    assert loss == pytest.approx(3 * math.log(len(m.vocab_out)), abs=1e-12)


def test_one_step_loss_matches_hand_computation():
    m = tiny_model(d=2, e=2, seed=3)
    x = [4]
    # encoder
    H, h, c = m.encode(x)
    state = m.decoder_start(x)
    probs, _, _ = m.decoder_step(state, 1, h, c)
    loss, _, _ = m.loss_and_grads([x], [[END_ID]])
    assert loss == pytest.approx(-math.log(probs[END_ID]), abs=1e-12)
    # the single encoder state gets all the attention
    s, _ = lstm_step({k.split(".")[1]: v for k, v in m.params.items() if k.startswith("decoder.")}, h, c,
                     m.params["dec_emb"][1])
    logits = m.params["W_out"] @ np.concatenate([s, H[0]])
    ref = np.exp(logits - logits.max())
    assert probs == pytest.approx(ref / ref.sum(), abs=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_gradients_match_finite_differences(seed):
    m = tiny_model(seed=seed)
    ins, outs = random_samples(m, 5, seed)
    errors = max_relative_errors(m, ins, outs)
    assert set(errors) == set(m.params)
    assert max(errors.values()) <= 1e-4, errors


def test_gradcheck_without_biases():
    m = tiny_model()
    m = Qep2SeqModel.create(m.vocab_in, m.vocab_out, ModelDims(4, 3, 3, gate_bias=False), seed=2, init_range=1.0)
    ins, outs = random_samples(m, 3, 2)
    assert max(max_relative_errors(m, ins, outs).values()) <= 1e-4


def test_zero_length_target_zero_gradients():
    m = tiny_model()
    loss, grads, _ = m.loss_and_grads([[4, 5]], [[]])
    assert loss == 0.0 and all(not g.any() for g in grads.values())


def test_unused_output_row_gradient():
    m = tiny_model()
    _, grads, _ = m.loss_and_grads([[4]], [[END_ID]])
    state = m.decoder_start([4])
    probs, s, _ = m.decoder_step(state, 1, state.h0, state.c0)
    sa = np.concatenate([s, m.encode([4])[0][0]])
    for row in range(len(m.vocab_out)):
        if row != END_ID:
            assert np.allclose(grads["W_out"][row], probs[row] * sa, atol=1e-12)
            assert np.any(grads["W_out"][row] != 0)


def test_padding_does_not_change_loss():
    m = tiny_model()
    ins, outs = random_samples(m, 4, 9)
    batched = m.loss_and_grads(ins, outs)
    single = [m.loss_and_grads([x], [y]) for x, y in zip(ins, outs)]
    assert batched[0] == pytest.approx(sum(s[0] for s in single), abs=1e-10)
    for k in m.params:
        assert np.allclose(batched[1][k], sum(s[1][k] for s in single), atol=1e-10)


def test_parameter_counts():
    vin = Vocab(list(RESERVED) + [f"i{k}" for k in range(32)])
    vout = Vocab(list(RESERVED) + [f"o{k}" for k in range(58)])
    m = Qep2SeqModel.create(vin, vout)
    assert m.recurrent_count("encoder") == 279_552
    d, e = 256, 16
    assert 4 * d * (d + e) + 4 * d == 279_552


def test_load_embeddings():
    m = tiny_model()
    ext = Vocab(list(RESERVED) + ["i1", "zz"])
    matrix = np.arange(6 * 3, dtype=float).reshape(6, 3)
    m.load_embeddings(matrix, ext, "in")
    assert np.array_equal(m.params["enc_emb"][m.vocab_in.index["i1"]], matrix[4])
    with pytest.raises(ValueError):
        m.load_embeddings(np.zeros((6, 5)), ext, "in")


def test_checkpoint_round_trip(tmp_path):
    m = tiny_model()
    path = tmp_path / "m.bin"
    save_model(m, path)
    data = path.read_bytes()
    assert data.startswith(b"QEP2SEQ v1\n")
    loaded = load_model(path)
    assert dumps_model(loaded) == data
    assert loaded.vocab_out.tokens == m.vocab_out.tokens
    for k in m.params:
        assert np.array_equal(loaded.params[k], m.params[k])
    with pytest.raises(MalformedDocument):
        loads_model(data[:-8])
    with pytest.raises(MalformedDocument):
        loads_model(b"nope")
