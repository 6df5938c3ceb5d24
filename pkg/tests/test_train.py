import json

import numpy as np
import pytest

from qepnarrate.corpus import build_corpus
from qepnarrate.plan import generate_random_tree
from qepnarrate.poem import default_store
from qepnarrate.seq2seq.checkpoint import dumps_model
from qepnarrate.seq2seq.train import TrainConfig, build_model, teacher_forcing_accuracy, train


@pytest.fixture(scope="module")
def small_pairs(schema):
    trees = [generate_random_tree(schema, i, 12) for i in range(8)]
    corpus = build_corpus(trees, default_store(), variants=0)
    return [(s.input_tokens, s.output_tokens) for s in corpus.samples]


def test_config_json_names():
    cfg = TrainConfig.from_dict({"learningRate": 0.01, "batchSize": 2, "initRange": [-0.2, 0.2], "rngSeed": 4})
    assert (cfg.learning_rate, cfg.batch_size, cfg.init_range, cfg.seed) == (0.01, 2, 0.2, 4)
    assert TrainConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    with pytest.raises(ValueError):
        TrainConfig.from_dict({"momentum": 0.9})


def test_defaults_follow_paper_hyperparameters():
    cfg = TrainConfig()
    assert (cfg.learning_rate, cfg.batch_size, cfg.max_epochs, cfg.init_range, cfg.early_stop_delta) == \
           (0.001, 4, 50, 0.1, 0.001)
    assert (cfg.hidden, cfg.enc_embed, cfg.dec_embed) == (256, 16, 32)


@pytest.mark.parametrize("seed", range(5))
def test_loss_decreases(small_pairs, seed):
    pairs = small_pairs[:20]
    cfg = TrainConfig(hidden=32, enc_embed=8, dec_embed=8, max_epochs=10, early_stop_delta=0.0, seed=seed)
    result = train(build_model(pairs, cfg), pairs, cfg)
    assert len(result.history) == 10
    assert result.history[9] < result.history[0]


def test_capacity_memorizes_fifty_samples(small_pairs):
    pairs = small_pairs[:50]
    cfg = TrainConfig(learning_rate=0.05, hidden=32, enc_embed=8, dec_embed=8, early_stop_delta=0.0)
    model = build_model(pairs, cfg)
    train(model, pairs, cfg)
    assert teacher_forcing_accuracy(model, pairs) >= 0.95


def test_training_is_deterministic(small_pairs):
    pairs = small_pairs[:12]
    cfg = TrainConfig(hidden=8, enc_embed=4, dec_embed=4, max_epochs=3, seed=7)
    runs = []
    for _ in range(2):
        model = build_model(pairs, cfg)
        result = train(model, pairs, cfg)
        runs.append((dumps_model(model), result.history))
    assert runs[0] == runs[1]


def test_early_stop(small_pairs):
    pairs = small_pairs[:8]
    cfg = TrainConfig(hidden=8, enc_embed=4, dec_embed=4, learning_rate=0.0, early_stop_delta=0.001)
    result = train(build_model(pairs, cfg), pairs, cfg)
    assert result.stopped_early and len(result.history) == 2


def test_teacher_forcing_ceiling():
    from qepnarrate.seq2seq.train import teacher_forcing_ceiling

    assert teacher_forcing_ceiling([(["a"], ["x", "y"])]) == 1.0
    # same input, outputs split at the second token: one of the two must miss there
    assert teacher_forcing_ceiling([(["a"], ["x", "y"]), (["a"], ["x", "z"])]) == pytest.approx(5 / 6)
