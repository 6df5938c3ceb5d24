"""End-to-end run: seed the store, generate trees, build the corpus, train,
evaluate. Artifacts and report.json land in --out.

    python3 scripts/run_pipeline.py --config scripts/pipeline_config.json --out runs/default
"""
import argparse
import json
import sys

from qepnarrate.cli import run_pipeline


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="scripts/pipeline_config.json")
    ap.add_argument("--out", default="runs/default")
    args = ap.parse_args()
    with open(args.config, encoding="utf-8") as f:
        config = json.load(f)
    report = run_pipeline(config, args.out, log=lambda m: print(m, file=sys.stderr))
    summary = {k: report[k] for k in ("trees", "acts", "self_bleu", "metrics", "timing_seconds")}
    print(json.dumps(summary, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
