"""Command-line entry point.

Exit codes: 0 ok, 1 runtime error, 2 usage error, 3 malformed input file.
Narratives and results go to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .corpus import (BINDABLE, build_corpus, corpus_self_bleu, corpus_stats, decompose_acts, fill_tags, load_corpus,
                     render_input, render_output, save_corpus, split_corpus)
from .errors import IoFailure, MalformedDocument, QepNarrateError, UnboundTag
from .plan import OperatorTree, generate_random_tree, iter_plan_files, load_plan, load_schema, SchemaSpec
from .poem import PoemStore, default_store, load_store, save_store, seed_default_catalog
from .pool import run_script
from .rules import Narrative

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_MALFORMED = 0, 1, 2, 3
DEFAULT_THRESHOLD = 5


class UsageError(Exception):
    pass


# --- hybrid policy -------------------------------------------------------------

def session_dir() -> Path:
    return Path(os.environ.get("QEPNARRATE_STATE_DIR", Path.home() / ".cache" / "qepnarrate" / "sessions"))


@dataclass
class HybridPolicy:
    """Rule text by default; neural text for an operator seen more than
    ``threshold`` times in the session. The count is bumped before deciding."""

    threshold: int = DEFAULT_THRESHOLD
    counts: dict = field(default_factory=dict)
    path: Optional[Path] = None

    @classmethod
    def for_session(cls, name: Optional[str], threshold: int = DEFAULT_THRESHOLD) -> "HybridPolicy":
        if not name:
            return cls(threshold)
        path = session_dir() / f"{name}.json"
        counts = {}
        if path.exists():
            try:
                counts = json.loads(path.read_text(encoding="utf-8"))
            except ValueError:
                raise MalformedDocument(f"session file {path} is not JSON") from None
        return cls(threshold, counts, path)

    def use_neural(self, operator: str) -> bool:
        self.counts[operator] = self.counts.get(operator, 0) + 1
        return self.counts[operator] > self.threshold

    def save(self) -> None:
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps(self.counts, sort_keys=True), encoding="utf-8")


# --- translation ---------------------------------------------------------------

def neural_step(model, act, beam_k: int = 1) -> str:
    from .seq2seq.train import decode_ids

    _, bindings = render_output(act)
    # tags this act cannot fill are masked out of decoding
    unbound = [t for t in BINDABLE if t not in bindings]
    return fill_tags(decode_ids(model, render_input(act), beam_k, banned_tokens=unbound), bindings)


def translate_plan(tree: OperatorTree, store: PoemStore, mode: str = "rule", model=None, beam_k: int = 1,
                   policy: Optional[HybridPolicy] = None, seed: int = 0, warn=None) -> Narrative:
    if mode != "rule" and model is None:
        raise UsageError(f"--mode {mode} needs --model")
    acts = decompose_acts(tree, store, seed)
    texts = []
    for act in acts:
        if mode == "rule":
            texts.append(act.step.render())
        elif mode == "neural":
            texts.append(neural_step(model, act, beam_k))
        else:
            policy = policy or HybridPolicy()
            if policy.use_neural(act.step.node.operator.name):
                try:
                    texts.append(neural_step(model, act, beam_k))
                    continue
                except UnboundTag as exc:
                    if warn:
                        warn(f"neural output unusable ({exc}); using rule text")
            texts.append(act.step.render())
    return Narrative(tuple(texts))


# --- helpers -------------------------------------------------------------------

def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _store(args) -> PoemStore:
    if args.store and Path(args.store).exists():
        return load_store(args.store)
    return default_store()


def _read_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from None
    try:
        return json.loads(text)
    except ValueError as exc:
        raise MalformedDocument(f"{path}: {exc}") from None


def _load_model(path):
    from .seq2seq.checkpoint import load_model
    return load_model(path)


# --- subcommands -----------------------------------------------------------------

def cmd_pool(args) -> int:
    store = _store(args)
    if args.action == "exec":
        try:
            text = Path(args.script).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(str(exc)) from None
        for result in run_script(text, store, args.seed):
            print(result)
    else:
        _repl(store, args)
    if args.store:
        save_store(store, args.store)
    return EXIT_OK


def _repl(store: PoemStore, args) -> None:
    buffer = ""
    prompt = "pool> " if sys.stdin.isatty() else ""
    while True:
        try:
            line = input(prompt)
        except EOFError:
            break
        buffer += line + "\n"
        if not buffer.strip().endswith(";"):
            continue
        try:
            for result in run_script(buffer, store, args.seed):
                print(result)
        except QepNarrateError as exc:
            _err(f"error: {exc}")
        buffer = ""


def cmd_store(args) -> int:
    if args.action == "seed":
        if not args.store:
            raise UsageError("store seed needs --store")
        store = load_store(args.store) if Path(args.store).exists() else PoemStore()
        added = seed_default_catalog(store, args.source)
        save_store(store, args.store)
        print(f"{added} operators seeded for {args.source}")
    else:
        print(json.dumps(_store(args).to_document(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_translate(args) -> int:
    if args.mode != "rule" and not args.model:
        raise UsageError(f"--mode {args.mode} needs --model")
    store = _store(args)
    tree = load_plan(args.plan)
    model = _load_model(args.model) if args.mode != "rule" else None
    policy = HybridPolicy.for_session(args.session, args.threshold) if args.mode == "hybrid" else None
    narrative = translate_plan(tree, store, args.mode, model, args.beam, policy, args.seed, warn=_err)
    if policy is not None:
        policy.save()
    print(narrative.text(numbered=args.numbered))
    return EXIT_OK


def _trees_from_args(args) -> list[OperatorTree]:
    trees = []
    if args.plans:
        trees.extend(load_plan(p) for p in iter_plan_files(args.plans))
    if args.schema:
        schema = load_schema(args.schema)
        trees.extend(generate_random_tree(schema, args.seed + i, args.budget) for i in range(args.trees))
    if not trees:
        raise UsageError("corpus generate needs --plans and/or --schema")
    return trees


def cmd_corpus(args) -> int:
    if args.action == "generate":
        store = _store(args)
        corpus = split_corpus(build_corpus(_trees_from_args(args), store, args.seed, args.variants),
                              args.ratio, args.seed)
        save_corpus(corpus, args.out)
        stats = corpus_stats(corpus)
        stats["acts"] = corpus.act_count
        _err(json.dumps(stats, sort_keys=True))
    else:
        corpus = load_corpus(args.corpus)
        stats = corpus_stats(corpus)
        print(f"groups: {stats['groups']}")
        print(f"samples: {stats['samples']}")
        print(f"expansion factor: {stats['expansion_factor']:.4f}")
        print(f"mean Self-BLEU: {stats['mean_self_bleu']:.4f}")
    return EXIT_OK


def _train_pairs(corpus):
    chosen = corpus.part("train") or corpus.samples
    return [(s.input_tokens, s.output_tokens) for s in chosen]


def cmd_train(args) -> int:
    from .seq2seq.checkpoint import save_model
    from .seq2seq.train import TrainConfig, build_model, train

    config = TrainConfig.from_dict(_read_json(args.config)) if args.config else TrainConfig()
    if args.seed_override is not None:
        config.seed = args.seed_override
    pairs = _train_pairs(load_corpus(args.corpus))
    model = build_model(pairs, config)
    result = train(model, pairs, config, on_epoch=lambda e, l: _err(f"epoch {e}: loss {l:.4f}"))
    save_model(model, args.out)
    print(json.dumps({"epochs": len(result.history), "final_loss": result.history[-1] if result.history else None,
                      "stopped_early": result.stopped_early}))
    return EXIT_OK


def cmd_decode(args) -> int:
    model = _load_model(args.model)
    tree = load_plan(args.plan)
    print(translate_plan(tree, _store(args), "neural", model, args.beam, seed=args.seed).text(args.numbered))
    return EXIT_OK


def evaluate_model(model, corpus, split: str = "validation", beam_k: int = 1) -> dict:
    from .seq2seq.train import held_out_bleu, mean_loss, teacher_forcing_accuracy

    samples = corpus.part(split) or corpus.samples
    pairs = [(s.input_tokens, s.output_tokens) for s in samples]
    refs = {g: [s.output_tokens for s in members] for g, members in corpus.groups().items()}
    return {
        "accuracy": teacher_forcing_accuracy(model, pairs),
        "bleu": held_out_bleu(model, samples, refs, beam_k),
        "loss": mean_loss(model, pairs),
        "samples": len(samples),
    }


def cmd_eval(args) -> int:
    metrics = evaluate_model(_load_model(args.model), load_corpus(args.corpus), args.split, args.beam)
    print(f"accuracy: {metrics['accuracy']:.4f}")
    print(f"mean BLEU: {metrics['bleu']:.2f}")
    print(f"loss: {metrics['loss']:.4f}")
    return EXIT_OK


def run_pipeline(config: dict, out_dir, log=_err) -> dict:
    """Seed store, generate trees, build corpus, train, evaluate. Writes
    store.json, corpus.jsonl, model.bin and report.json into ``out_dir``."""
    from .seq2seq.checkpoint import save_model
    from .seq2seq.train import TrainConfig, build_model, train

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = int(config.get("seed", 0))
    timing = {}

    t = time.perf_counter()
    store = PoemStore()
    seed_default_catalog(store)
    save_store(store, out / "store.json")
    timing["seed_store"] = time.perf_counter() - t

    t = time.perf_counter()
    schema_ref = config.get("schema")
    if isinstance(schema_ref, dict):
        schema = SchemaSpec.from_dict(schema_ref)
    elif schema_ref:
        schema = load_schema(schema_ref)
    else:
        schema = load_schema(Path(__file__).parent / "data" / "schema_toy.json")
    trees = [generate_random_tree(schema, seed + i, int(config.get("sizeBudget", 12)))
             for i in range(int(config.get("treeCount", 20)))]
    timing["generate_trees"] = time.perf_counter() - t

    t = time.perf_counter()
    corpus = split_corpus(build_corpus(trees, store, seed), 0.8, seed)
    save_corpus(corpus, out / "corpus.jsonl")
    timing["build_corpus"] = time.perf_counter() - t

    t = time.perf_counter()
    train_cfg = dict(config.get("train", {}))
    train_cfg.setdefault("rngSeed", seed)
    tc = TrainConfig.from_dict(train_cfg)
    pairs = _train_pairs(corpus)
    model = build_model(pairs, tc)
    result = train(model, pairs, tc, on_epoch=lambda e, l: log(f"epoch {e}: loss {l:.4f}"))
    save_model(model, out / "model.bin")
    timing["train"] = time.perf_counter() - t
    timing["train_per_epoch"] = timing["train"] / max(len(result.history), 1)

    t = time.perf_counter()
    metrics = evaluate_model(model, corpus, "validation", int(config.get("beamK", 1)))
    timing["evaluate"] = time.perf_counter() - t

    report = {
        "trees": len(trees),
        "acts": corpus.act_count,
        "corpus": corpus_stats(corpus),
        "self_bleu": corpus_self_bleu(corpus),
        "loss_history": result.history,
        "stopped_early": result.stopped_early,
        "metrics": metrics,
        "timing_seconds": timing,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    return report


def cmd_pipeline(args) -> int:
    report = run_pipeline(_read_json(args.config), args.out)
    m = report["metrics"]
    print(f"acts: {report['acts']}  samples: {report['corpus']['samples']}  Self-BLEU: {report['self_bleu']:.4f}")
    print(f"accuracy: {m['accuracy']:.4f}  mean BLEU: {m['bleu']:.2f}  loss: {m['loss']:.4f}")
    return EXIT_OK


# --- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def shared(default):
        # the subcommand copies must not clobber values given before it
        parser = argparse.ArgumentParser(add_help=False)
        parser.add_argument("--store", default=default, help="operator store JSON file")
        parser.add_argument("--seed", type=int, default=0 if default is None else default)
        parser.add_argument("--session", default=default, help="hybrid-mode session name")
        return parser

    common = shared(argparse.SUPPRESS)
    p = argparse.ArgumentParser(prog="qepnarrate", description="Narrate query execution plans.",
                                parents=[shared(None)])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    pool = add("pool", help="run POOL statements")
    pool_sub = pool.add_subparsers(dest="action", required=True)
    ex = pool_sub.add_parser("exec", parents=[common], help="execute a script file")
    ex.add_argument("script")
    pool_sub.add_parser("repl", parents=[common], help="read statements from stdin, ';'-terminated")
    pool.set_defaults(func=cmd_pool)

    store = add("store", help="seed or show the operator store")
    store_sub = store.add_subparsers(dest="action", required=True)
    seed = store_sub.add_parser("seed", parents=[common])
    seed.add_argument("--source", default="pg")
    store_sub.add_parser("show", parents=[common])
    store.set_defaults(func=cmd_store)

    tr = add("translate", help="narrate a plan")
    tr.add_argument("--plan", required=True)
    tr.add_argument("--mode", choices=("rule", "neural", "hybrid"), default="rule")
    tr.add_argument("--model")
    tr.add_argument("--beam", type=int, default=1)
    tr.add_argument("--threshold", type=int, default=DEFAULT_THRESHOLD)
    tr.add_argument("--numbered", action="store_true")
    tr.set_defaults(func=cmd_translate)

    co = add("corpus", help="generate or inspect a training corpus")
    co_sub = co.add_subparsers(dest="action", required=True)
    gen = co_sub.add_parser("generate", parents=[common])
    gen.add_argument("--plans")
    gen.add_argument("--schema")
    gen.add_argument("--trees", type=int, default=20)
    gen.add_argument("--budget", type=int, default=12)
    gen.add_argument("--variants", type=int, default=3)
    gen.add_argument("--ratio", type=float, default=0.8)
    gen.add_argument("--out", required=True)
    st = co_sub.add_parser("stats", parents=[common])
    st.add_argument("--corpus", required=True)
    co.set_defaults(func=cmd_corpus)

    t = add("train", help="train a model on a corpus")
    t.add_argument("--corpus", required=True)
    t.add_argument("--config")
    t.add_argument("--out", required=True)
    t.add_argument("--train-seed", dest="seed_override", type=int, default=None)
    t.set_defaults(func=cmd_train)

    d = add("decode", help="narrate a plan with a trained model")
    d.add_argument("--model", required=True)
    d.add_argument("--plan", required=True)
    d.add_argument("--beam", type=int, default=1)
    d.add_argument("--numbered", action="store_true")
    d.set_defaults(func=cmd_decode)

    e = add("eval", help="accuracy, BLEU and loss of a model on a corpus")
    e.add_argument("--model", required=True)
    e.add_argument("--corpus", required=True)
    e.add_argument("--split", default="validation")
    e.add_argument("--beam", type=int, default=1)
    e.set_defaults(func=cmd_eval)

    pl = add("pipeline", help="end-to-end run from a JSON config")
    pl.add_argument("--config", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        _err(f"usage error: {exc}")
        return EXIT_USAGE
    except QepNarrateError as exc:
        _err(f"error: {exc}")
        return exc.exit_code
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
