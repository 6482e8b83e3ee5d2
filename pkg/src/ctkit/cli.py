"""Command-line entry point: one subcommand per pipeline stage.

Stages communicate through files (corpora, tree files, model dumps, JSONL
example dumps), so any stage can be re-run or swapped in isolation. Every
run writes a JSON manifest recording flags, seeds, and input/output digests;
with a fixed seed each stage is byte-reproducible.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time

from . import __version__
from .corruptions import ALL_CORRUPTIONS, make_realfake_dataset, make_rng
from .decoder import (
    DEFAULT_LENGTH_CAP,
    DEFAULT_SCORE_BATCH,
    parse_corpus,
)
from .evaluation import (
    ANALYSIS_LABELS,
    baseline_tree,
    corpus_f1,
    crossing_patterns,
    per_test_pass_rates,
    plot_pass_rates,
    plot_recall_bars,
    recall_by_label,
)
from .remote import DEFAULT_REMOTE_LR, RemoteScorer
from .scorer import JudgmentCache, LabeledExample, NativeScorer
from .synth import OracleScorer, SyntheticGrammar, default_grammar, sample_corpus
from .trees import (
    preprocess,
    read_corpus,
    read_tree_file,
    write_corpus,
    write_tree_file,
)
from .training import (
    TrainConfig,
    export_refinement_batch,
    refine_epoch,
    train_initial,
    write_examples_jsonl,
)
from .transforms import ALL_TESTS, apply_test

log = logging.getLogger("ctkit")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(args, inputs, outputs, manifest_path=None):
    record = {
        "tool": "ctkit",
        "version": __version__,
        "subcommand": args.command,
        "flags": {
            k: v for k, v in sorted(vars(args).items()) if k not in ("command", "func")
        },
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): _sha256(p) for p in inputs if p and os.path.exists(p)},
        "outputs": {str(p): _sha256(p) for p in outputs if p and os.path.exists(p)},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if manifest_path is None:
        first = next((p for p in outputs if p), None)
        if first is None:
            return
        manifest_path = f"{first}.manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _add_scorer_flags(p, trainable_only=False):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--model", help="path to a native scorer model file")
    g.add_argument("--scorer-url", help="base URL of a remote scorer service")
    if not trainable_only:
        g.add_argument(
            "--oracle-grammar",
            help="synthetic grammar file; 'builtin' for the bundled grammar",
        )


def _load_scorer(args):
    if getattr(args, "model", None):
        return NativeScorer.load(args.model)
    if getattr(args, "scorer_url", None):
        return RemoteScorer(args.scorer_url)
    grammar_arg = getattr(args, "oracle_grammar", None)
    if grammar_arg:
        grammar = (
            default_grammar()
            if grammar_arg == "builtin"
            else SyntheticGrammar.from_file(grammar_arg)
        )
        return OracleScorer(grammar)
    raise SystemExit(2)


def _cmd_transforms_debug(args):
    tokens = preprocess(args.sentence.split()) if args.preprocess else tuple(
        args.sentence.split()
    )
    for test in ALL_TESTS:
        out = apply_test(test, tokens, (args.lo, args.hi))
        print(f"{test:15s} {' '.join(out.tokens)}")
    return 0


def _cmd_gen_corruptions(args):
    corpus = read_corpus(args.input)
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    rng = make_rng(args.seed)
    examples = make_realfake_dataset(corpus, kinds, rng, alpha=args.alpha)
    labels_path = args.labels or f"{args.out}.labels.jsonl"
    write_corpus(args.out, [ex.tokens for ex in examples])
    with open(labels_path, "w", encoding="utf-8") as fh:
        for ex in examples:
            kind = "real" if ex.label == 1 else ex.provenance
            fh.write(json.dumps({"label": ex.label, "kind": kind}) + "\n")
    _write_manifest(args, [args.input], [args.out, labels_path], args.manifest)
    print(f"wrote {len(examples)} examples to {args.out}")
    return 0


def _read_examples(corpus_path, fixed_label=None):
    sentences = read_corpus(corpus_path)
    labels_path = f"{corpus_path}.labels.jsonl"
    if fixed_label is None and os.path.exists(labels_path):
        with open(labels_path, encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        if len(records) != len(sentences):
            raise ValueError(
                f"{labels_path}: {len(records)} labels for {len(sentences)} sentences"
            )
        return [
            LabeledExample(s, int(r["label"]), r.get("kind", "real"))
            for s, r in zip(sentences, records)
        ]
    label = 1 if fixed_label is None else fixed_label
    provenance = "real" if label == 1 else "fake"
    return [LabeledExample(s, label, provenance) for s in sentences]


def _cmd_train_realfake(args):
    reals = _read_examples(args.real, fixed_label=1)
    fakes = [ex for ex in _read_examples(args.fake) if ex.label == 0]
    if not fakes:  # a plain corpus file: every line is a fake
        fakes = _read_examples(args.fake, fixed_label=0)
    cfg = TrainConfig(
        batch_real=args.batch_real,
        batch_fake=args.batch_fake,
        lr=args.lr,
        warmup_fraction=args.warmup,
        epochs=args.epochs,
        seed=args.seed,
    )
    model = NativeScorer(dims=args.dims)
    train_initial(model, reals + fakes, cfg)
    model.save(args.out, fmt=args.format)
    _write_manifest(args, [args.real, args.fake], [args.out], args.manifest)
    print(f"trained on {len(reals)} real + {len(fakes)} fake examples -> {args.out}")
    return 0


def _cmd_parse(args):
    scorer = _load_scorer(args)
    sentences = read_corpus(args.input)
    cache = JudgmentCache()
    placeholder = None if args.placeholder_label == "" else args.placeholder_label
    trees, charts, failures = parse_corpus(
        scorer,
        sentences,
        cache=cache,
        length_cap=args.length_cap,
        workers=args.workers,
        batch_size=args.score_batch,
        max_transform_len=args.max_transform_len,
        placeholder_label=placeholder,
        emit_charts=bool(args.emit_charts),
    )
    for i, msg in failures:
        log.error("sentence %d failed (%s); emitting right-branching fallback", i, msg)
    out_trees = [
        t if t is not None else baseline_tree("right", sentences[i], label=placeholder)
        for i, t in enumerate(trees)
    ]
    write_tree_file(args.out, out_trees)
    outputs = [args.out]
    if args.emit_charts:
        with open(args.emit_charts, "w", encoding="utf-8") as fh:
            for toks, chart in zip(sentences, charts):
                record = {
                    "tokens": list(toks),
                    "scores": [
                        [lo, hi, score]
                        for lo, hi, score in (chart.items() if chart else [])
                    ],
                }
                fh.write(json.dumps(record) + "\n")
        outputs.append(args.emit_charts)
    _write_manifest(args, [args.input], outputs, args.manifest)
    print(f"parsed {len(sentences)} sentences ({len(failures)} failures) -> {args.out}")
    return 0 if not failures else 1


def _cmd_refine(args):
    scorer = _load_scorer(args)
    sentences = read_corpus(args.input)
    if args.include_eval_sents:
        if not args.eval_input:
            raise ValueError("--include-eval-sents requires --eval-input")
        sentences = sentences + read_corpus(args.eval_input)
    cfg = TrainConfig(
        lr=args.lr if args.lr is not None else (
            DEFAULT_REMOTE_LR if args.scorer_url else TrainConfig.lr
        ),
        warmup_fraction=args.warmup,
        refine_batch=args.batch,
        tests_per_sentence=args.tests_per_sentence,
        epochs=args.epochs,
        seed=args.seed,
    )
    rng = make_rng(args.seed)
    if args.export_only:
        cache = JudgmentCache()
        trees, _, failures = parse_corpus(
            scorer, sentences, cache=cache, batch_size=args.score_batch
        )
        kept = [t for t in trees if t is not None]
        examples = export_refinement_batch(kept, cfg, rng)
        write_examples_jsonl(args.export_only, examples)
        _write_manifest(args, [args.input], [args.export_only], args.manifest)
        print(f"exported {len(examples)} refinement examples -> {args.export_only}")
        return 0 if not failures else 1
    refine_epoch(
        scorer,
        sentences,
        cfg,
        rng,
        batch_size=args.score_batch,
        max_transform_len=args.max_transform_len,
    )
    outputs = []
    if isinstance(scorer, NativeScorer):
        out = args.out or args.model
        scorer.save(out, fmt=args.format)
        outputs.append(out)
        print(f"refined model -> {out}")
    else:
        print("refined remote model in place")
    _write_manifest(args, [args.input], outputs, args.manifest)
    return 0


def _cmd_eval(args):
    gold = read_tree_file(args.gold)
    pred = read_tree_file(args.pred)
    report = corpus_f1(gold, pred)
    payload = report.to_dict()
    if not args.per_sentence:
        payload.pop("per_sentence")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(
        f"corpus F1 {report.corpus_f1:.2f} "
        f"(P {report.corpus_precision:.2f} / R {report.corpus_recall:.2f}) "
        f"over {report.evaluated} sentences, {report.skipped} skipped"
    )
    _write_manifest(args, [args.gold, args.pred], [args.report] if args.report else [], args.manifest)
    return 0


def _cmd_analyze(args):
    gold = read_tree_file(args.gold)
    payload = {}
    plots = []
    if args.per_label or args.crossing:
        if not args.pred:
            raise ValueError("--per-label/--crossing require --pred")
        pred = read_tree_file(args.pred)
        if args.per_label:
            table = recall_by_label(gold, pred, labels=args.labels.split(","))
            payload["recall_by_label"] = table.to_dict()
            if args.plot:
                path = os.path.join(args.plot, "recall_by_label.png")
                plot_recall_bars(table, path)
                plots.append(path)
        if args.crossing:
            report = crossing_patterns(gold, pred, top=args.top_patterns)
            payload["crossing_patterns"] = report.to_dict()
    if args.per_test:
        scorer = _load_scorer(args)
        table = per_test_pass_rates(
            scorer,
            gold,
            threshold=args.threshold,
            labels=args.labels.split(","),
            distituent_cap=args.distituent_cap,
            seed=args.seed,
            cache=JudgmentCache(),
            batch_size=args.score_batch,
        )
        payload["per_test"] = table.to_dict()
        if args.plot:
            path = os.path.join(args.plot, "per_test_pass_rates.png")
            plot_pass_rates(table, path)
            plots.append(path)
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(
        args,
        [args.gold, args.pred or None],
        [args.report, *plots],
        args.manifest,
    )
    print(f"analysis report -> {args.report}")
    return 0


def _cmd_baseline(args):
    if args.from_corpus:
        sentences = read_corpus(args.input)
    else:
        trees = read_tree_file(args.input)
        if args.strip:
            from .trees import strip_punctuation

            stripped = [strip_punctuation(t) for t in trees]
            sentences = [
                tuple(tok.lower() for tok in t.leaves()) for t in stripped if t is not None
            ]
        else:
            sentences = [tuple(t.leaves()) for t in trees]
    out_trees = [baseline_tree(args.strategy, s) for s in sentences]
    write_tree_file(args.out, out_trees)
    _write_manifest(args, [args.input], [args.out], args.manifest)
    print(f"wrote {len(out_trees)} {args.strategy}-branching trees -> {args.out}")
    return 0


def _cmd_synth_gen(args):
    grammar = (
        default_grammar()
        if args.grammar == "builtin"
        else SyntheticGrammar.from_file(args.grammar)
    )
    rng = make_rng(args.seed)
    corpus = sample_corpus(grammar, args.n, args.max_len, rng)
    write_corpus(args.out_corpus, corpus.sentences)
    write_tree_file(args.out_trees, corpus.trees)
    _write_manifest(
        args,
        [args.grammar if args.grammar != "builtin" else None],
        [args.out_corpus, args.out_trees],
        args.manifest,
    )
    lengths = [len(s) for s in corpus.sentences]
    print(
        f"sampled {len(lengths)} sentences "
        f"(mean length {sum(lengths) / len(lengths):.2f}) -> {args.out_corpus}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ctkit",
        description="Unsupervised constituency parsing via constituency tests",
    )
    ap.add_argument("--version", action="version", version=f"ctkit {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="random seed")
        p.add_argument("--manifest", help="where to write the run manifest")

    p = sub.add_parser("transforms-debug", help="print all 8 transforms for a span")
    p.add_argument("--sentence", required=True, help="space-tokenized sentence")
    p.add_argument("--lo", type=int, required=True)
    p.add_argument("--hi", type=int, required=True)
    p.add_argument("--preprocess", action="store_true", help="preprocess first")
    p.set_defaults(func=_cmd_transforms_debug)
    common(p)

    p = sub.add_parser("gen-corruptions", help="build a real/fake dataset")
    p.add_argument("--input", required=True, help="corpus file")
    p.add_argument(
        "--kinds",
        default=",".join(ALL_CORRUPTIONS),
        help=f"comma-separated subset of {','.join(ALL_CORRUPTIONS)}",
    )
    p.add_argument("--alpha", type=float, default=0.1, help="bigram smoothing")
    p.add_argument("--out", required=True, help="output corpus (real+fake)")
    p.add_argument("--labels", help="label JSONL path (default <out>.labels.jsonl)")
    p.set_defaults(func=_cmd_gen_corruptions)
    common(p)

    p = sub.add_parser("train-realfake", help="train the native scorer on real/fake data")
    p.add_argument("--real", required=True, help="real-sentence corpus")
    p.add_argument("--fake", required=True, help="fake corpus (labels file honored)")
    p.add_argument("--out", required=True, help="model output path")
    p.add_argument("--dims", type=int, default=2 ** 20)
    p.add_argument("--lr", type=float, default=TrainConfig.lr)
    p.add_argument("--warmup", type=float, default=0.10)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--batch-real", type=int, default=32)
    p.add_argument("--batch-fake", type=int, default=32)
    p.add_argument("--format", choices=("npz", "json"), default="npz")
    p.set_defaults(func=_cmd_train_realfake)
    common(p)

    p = sub.add_parser("parse", help="decode minimum-risk trees for a corpus")
    _add_scorer_flags(p)
    p.add_argument("--input", required=True, help="corpus file")
    p.add_argument("--out", required=True, help="tree file output")
    p.add_argument("--emit-charts", help="also dump span charts as JSONL")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--length-cap", type=int, default=DEFAULT_LENGTH_CAP)
    p.add_argument("--score-batch", type=int, default=DEFAULT_SCORE_BATCH)
    p.add_argument("--max-transform-len", type=int, default=None)
    p.add_argument("--placeholder-label", default="X", help="'' for unlabeled output")
    p.set_defaults(func=_cmd_parse)
    common(p)

    p = sub.add_parser("refine", help="alternating refinement of a trainable scorer")
    _add_scorer_flags(p, trainable_only=False)
    p.add_argument("--input", required=True, help="corpus file")
    p.add_argument("--eval-input", help="evaluation-set corpus (see --include-eval-sents)")
    p.add_argument("--include-eval-sents", action="store_true",
                   help="also refine on the --eval-input sentences")
    p.add_argument("--out", help="refined model output (native backend)")
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--tests-per-sentence", type=int, default=16)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=None, help="default: backend-specific")
    p.add_argument("--warmup", type=float, default=0.10)
    p.add_argument("--score-batch", type=int, default=DEFAULT_SCORE_BATCH)
    p.add_argument("--max-transform-len", type=int, default=None)
    p.add_argument("--export-only", help="write refinement examples as JSONL, no training")
    p.add_argument("--format", choices=("npz", "json"), default="npz")
    p.set_defaults(func=_cmd_refine)
    common(p)

    p = sub.add_parser("eval", help="sentence-level unlabeled F1")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--per-sentence", action="store_true", help="include per-sentence rows")
    p.set_defaults(func=_cmd_eval)
    common(p)

    p = sub.add_parser("analyze", help="recall by label, per-test rates, crossings")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred")
    p.add_argument("--per-label", action="store_true")
    p.add_argument("--per-test", action="store_true")
    p.add_argument("--crossing", action="store_true")
    p.add_argument("--model")
    p.add_argument("--scorer-url")
    p.add_argument("--oracle-grammar")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--labels", default=",".join(ANALYSIS_LABELS))
    p.add_argument("--distituent-cap", type=int, default=50)
    p.add_argument("--top-patterns", type=int, default=20)
    p.add_argument("--score-batch", type=int, default=DEFAULT_SCORE_BATCH)
    p.add_argument("--report", required=True)
    p.add_argument("--plot", help="directory for chart images")
    p.set_defaults(func=_cmd_analyze)
    common(p)

    p = sub.add_parser("baseline", help="left/right/balanced branching trees")
    p.add_argument("--strategy", choices=("left", "right", "balanced"), required=True)
    p.add_argument("--input", required=True, help="tree file (or corpus with --from-corpus)")
    p.add_argument("--from-corpus", action="store_true")
    p.add_argument("--strip", action="store_true", default=True,
                   help="strip punctuation from gold tokens (default)")
    p.add_argument("--no-strip", dest="strip", action="store_false")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_baseline)
    common(p)

    p = sub.add_parser("synth", help="synthetic grammar tools")
    synth_sub = p.add_subparsers(dest="synth_command", required=True)
    g = synth_sub.add_parser("gen", help="sample a corpus with gold trees")
    g.add_argument("--grammar", default="builtin", help="grammar file or 'builtin'")
    g.add_argument("--n", type=int, default=500)
    g.add_argument("--max-len", type=int, default=12)
    g.add_argument("--out-corpus", required=True)
    g.add_argument("--out-trees", required=True)
    g.set_defaults(func=_cmd_synth_gen)
    common(g)

    return ap


def dispatch(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # noqa: BLE001 - structured top-level error
        log.error("%s: %s", type(exc).__name__, exc)
        if args.verbose:
            raise
        return 1


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
