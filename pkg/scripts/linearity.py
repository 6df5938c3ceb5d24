"""Rule-translation runtime against tree size, with a log-log least-squares slope."""
import argparse
import time
from pathlib import Path

import numpy as np

from qepnarrate.plan import generate_random_tree, load_schema
from qepnarrate.poem import default_store
from qepnarrate.rules import translate_tree

SCHEMA = Path(__file__).resolve().parents[1] / "src" / "qepnarrate" / "data" / "schema_toy.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budgets", type=int, nargs="+", default=[10, 20, 50, 100, 200, 500, 1000, 2000])
    ap.add_argument("--per-budget", type=int, default=5)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    schema, store = load_schema(SCHEMA), default_store()
    sizes, times = [], []
    for budget in args.budgets:
        for seed in range(args.per_budget):
            tree = generate_random_tree(schema, seed, budget)
            best = float("inf")
            for _ in range(args.repeats):
                start = time.perf_counter()
                translate_tree(tree, store)
                best = min(best, time.perf_counter() - start)
            sizes.append(len(tree))
            times.append(best)
            print(f"{len(tree):6d} nodes  {best * 1000:9.3f} ms  {best / len(tree) * 1e6:7.2f} us/node")
    slope, _ = np.polyfit(np.log(sizes), np.log(times), 1)
    print(f"log-log exponent {slope:.3f}")


if __name__ == "__main__":
    main()
