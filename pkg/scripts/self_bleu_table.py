"""Self-BLEU and expansion factor of generated corpora for 0..3 paraphrase variants."""
import argparse
from pathlib import Path

from qepnarrate.corpus import build_corpus, corpus_self_bleu
from qepnarrate.plan import generate_random_tree, load_schema
from qepnarrate.poem import default_store

SCHEMA = Path(__file__).resolve().parents[1] / "src" / "qepnarrate" / "data" / "schema_toy.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trees", type=int, default=40)
    ap.add_argument("--budget", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    schema, store = load_schema(SCHEMA), default_store()
    trees = [generate_random_tree(schema, args.seed + i, args.budget) for i in range(args.trees)]
    print(f"{'variants':>8}  {'groups':>6}  {'samples':>7}  {'expansion':>9}  {'Self-BLEU':>9}")
    for variants in range(4):
        corpus = build_corpus(trees, store, args.seed, variants)
        print(f"{variants:>8}  {len(corpus.groups()):>6}  {len(corpus.samples):>7}  "
              f"{corpus.expansion_factor:>9.3f}  {corpus_self_bleu(corpus):>9.4f}")


if __name__ == "__main__":
    main()
