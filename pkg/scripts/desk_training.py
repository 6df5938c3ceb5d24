"""Desk-scale training run: about 300 paraphrased samples, default
hyperparameters, teacher-forcing accuracy against its data ceiling and
held-out BLEU.

    python3 scripts/desk_training.py                 # paraphrased corpus
    python3 scripts/desk_training.py --variants 0    # one output per act
"""
import argparse
import sys
import time
from pathlib import Path

from qepnarrate.corpus import build_corpus, split_corpus
from qepnarrate.plan import generate_random_tree, load_schema
from qepnarrate.poem import default_store
from qepnarrate.seq2seq import TrainConfig, build_model, teacher_forcing_accuracy, teacher_forcing_ceiling, train
from qepnarrate.seq2seq.train import held_out_bleu

SCHEMA = Path(__file__).resolve().parents[1] / "src" / "qepnarrate" / "data" / "schema_toy.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trees", type=int, default=10)
    ap.add_argument("--budget", type=int, default=12)
    ap.add_argument("--variants", type=int, default=3)
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--lr", type=float, default=0.001)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    schema = load_schema(SCHEMA)
    trees = [generate_random_tree(schema, args.seed + i, args.budget) for i in range(args.trees)]
    corpus = split_corpus(build_corpus(trees, default_store(), args.seed, args.variants), 0.8, args.seed)
    pairs = [(s.input_tokens, s.output_tokens) for s in corpus.part("train")]
    config = TrainConfig(learning_rate=args.lr, max_epochs=args.epochs, seed=args.seed)
    model = build_model(pairs, config)
    print(f"samples {len(corpus.samples)} (train {len(pairs)}), acts {corpus.act_count}, "
          f"vocab {len(model.vocab_in)}/{len(model.vocab_out)}")

    start = time.perf_counter()
    result = train(model, pairs, config, on_epoch=lambda e, l: print(f"epoch {e:3d}  loss {l:.4f}", file=sys.stderr))
    elapsed = time.perf_counter() - start

    refs = {g: [s.output_tokens for s in m] for g, m in corpus.groups().items()}
    print(f"epochs {len(result.history)} ({'early stop' if result.stopped_early else 'budget'}), {elapsed:.0f} s")
    print(f"teacher-forcing accuracy {teacher_forcing_accuracy(model, pairs):.4f} "
          f"(data ceiling {teacher_forcing_ceiling(pairs):.4f})")
    print(f"held-out BLEU {held_out_bleu(model, corpus.part('validation'), refs):.2f}")


if __name__ == "__main__":
    main()
