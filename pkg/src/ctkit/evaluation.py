"""Sentence-level unlabeled F1, deterministic baselines, and error analysis.

Both gold and predicted trees are normalized first: punctuation stripped,
unary chains collapsed into span sets, trivial spans (length <= 1 and the
full sentence) dropped. F1 is computed per sentence and then averaged, so a
short sentence counts as much as a long one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from collections import Counter, defaultdict
from collections.abc import Sequence

import numpy as np

from .scorer import GrammaticalityScorer, JudgmentCache
from .transforms import ALL_TESTS
from .trees import (
    DEFAULT_PUNCT_TOKENS,
    PTB_PUNCT_TAGS,
    Span,
    Tree,
    strip_punctuation,
)

log = logging.getLogger(__name__)

ANALYSIS_LABELS = ("SBAR", "NP", "VP", "PP", "ADJP", "ADVP")

# POS groupings used when reporting crossing-bracket patterns
POS_GROUPS = {
    "VBD": "VBD/P/Z",
    "VBP": "VBD/P/Z",
    "VBZ": "VBD/P/Z",
    "NN": "NN(S)",
    "NNS": "NN(S)",
}


class EvalError(ValueError):
    pass


def sentence_f1(gold: frozenset, pred: frozenset):
    """Set precision/recall/F1 over nontrivial spans; empty sides count 1."""
    inter = len(gold & pred)
    precision = inter / len(pred) if pred else 1.0
    recall = inter / len(gold) if gold else 1.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return precision, recall, f1


@dataclass
class EvalReport:
    per_sentence: list  # (precision, recall, f1) per evaluated sentence
    corpus_f1: float  # mean sentence F1, scaled to [0, 100]
    evaluated: int
    skipped: int
    corpus_precision: float = 0.0
    corpus_recall: float = 0.0

    def to_dict(self):
        return {
            "corpus_f1": self.corpus_f1,
            "corpus_precision": self.corpus_precision,
            "corpus_recall": self.corpus_recall,
            "evaluated": self.evaluated,
            "skipped": self.skipped,
            "per_sentence": [list(t) for t in self.per_sentence],
        }


def _eval_pair(gold_tree, pred_tree, punct_tags, punct_tokens, index):
    gold_stripped = strip_punctuation(gold_tree, punct_tags, punct_tokens)
    pred_stripped = strip_punctuation(pred_tree, punct_tags, punct_tokens)
    if gold_stripped is None or pred_stripped is None:
        if (gold_stripped is None) != (pred_stripped is None):
            raise EvalError(
                f"sentence {index}: one side vanished after punctuation stripping"
            )
        return None
    gold_toks = [t.lower() for t in gold_stripped.leaves()]
    pred_toks = [t.lower() for t in pred_stripped.leaves()]
    if gold_toks != pred_toks:
        raise EvalError(
            f"sentence {index}: token mismatch after punctuation stripping: "
            f"{gold_toks[:8]}... vs {pred_toks[:8]}..."
        )
    return gold_stripped, pred_stripped


def corpus_f1(
    gold_trees: Sequence[Tree],
    pred_trees: Sequence[Tree],
    punct_tags=PTB_PUNCT_TAGS,
    punct_tokens=DEFAULT_PUNCT_TOKENS,
) -> EvalReport:
    """Normalize both sides, score each sentence, average."""
    if len(gold_trees) != len(pred_trees):
        raise EvalError(
            f"tree count mismatch: {len(gold_trees)} gold vs {len(pred_trees)} predicted"
        )
    per_sentence = []
    skipped = 0
    for i, (gold, pred) in enumerate(zip(gold_trees, pred_trees)):
        pair = _eval_pair(gold, pred, punct_tags, punct_tokens, i)
        if pair is None:
            skipped += 1
            continue
        gold_stripped, pred_stripped = pair
        per_sentence.append(
            sentence_f1(
                gold_stripped.nontrivial_span_set(),
                pred_stripped.nontrivial_span_set(),
            )
        )
    if not per_sentence:
        return EvalReport([], 0.0, 0, skipped)
    mean = lambda xs: float(np.mean(xs))  # noqa: E731
    return EvalReport(
        per_sentence,
        100.0 * mean([f for _, _, f in per_sentence]),
        len(per_sentence),
        skipped,
        100.0 * mean([p for p, _, _ in per_sentence]),
        100.0 * mean([r for _, r, _ in per_sentence]),
    )


def baseline_tree(strategy: str, tokens: Sequence[str], label="X") -> Tree:
    """Deterministic binary tree of the named shape over ``tokens``."""
    tokens = tuple(tokens)
    if not tokens:
        raise ValueError("empty sentence")

    def leaf(i):
        return Tree(label=label, token=tokens[i])

    def build(lo, hi):
        if hi - lo == 1:
            return leaf(lo)
        if strategy == "right":
            k = lo + 1
        elif strategy == "left":
            k = hi - 1
        elif strategy == "balanced":
            k = lo + (hi - lo + 1) // 2  # ceiling midpoint
        else:
            raise ValueError(f"unknown baseline strategy {strategy!r}")
        return Tree(label=label, children=(build(lo, k), build(k, hi)))

    return build(0, len(tokens))


@dataclass
class LabelRecallTable:
    rows: dict  # label -> (matched, total, recall)

    def to_dict(self):
        return {
            lbl: {"matched": m, "total": t, "recall": r}
            for lbl, (m, t, r) in self.rows.items()
        }


def _labeled_nontrivial_spans(stripped: Tree):
    n = len(stripped)
    return [
        (lo, hi, label)
        for lo, hi, label in stripped.labeled_spans()
        if hi - lo >= 2 and hi - lo < n and label is not None
    ]


def recall_by_label(
    gold_trees,
    pred_trees,
    labels: Sequence[str] = ANALYSIS_LABELS,
    punct_tags=PTB_PUNCT_TAGS,
    punct_tokens=DEFAULT_PUNCT_TOKENS,
) -> LabelRecallTable:
    """Fraction of gold constituents of each label found in the prediction."""
    labels = tuple(labels)
    matched = Counter()
    total = Counter()
    for i, (gold, pred) in enumerate(zip(gold_trees, pred_trees)):
        pair = _eval_pair(gold, pred, punct_tags, punct_tokens, i)
        if pair is None:
            continue
        gold_stripped, pred_stripped = pair
        pred_spans = pred_stripped.nontrivial_span_set()
        for lo, hi, label in _labeled_nontrivial_spans(gold_stripped):
            if label not in labels:
                continue
            total[label] += 1
            if (lo, hi) in pred_spans:
                matched[label] += 1
    rows = {}
    for label in labels:
        t = total[label]
        rows[label] = (matched[label], t, matched[label] / t if t else 0.0)
    return LabelRecallTable(rows)


def classify_span(span: Span, gold_spans) -> str:
    """Exactly one of correct / consistent / crossing, relative to gold."""
    if span in gold_spans:
        return "correct"
    lo, hi = span
    for glo, ghi in gold_spans:
        if lo < ghi and glo < hi:  # overlap
            if not (lo <= glo and ghi <= hi) and not (glo <= lo and hi <= ghi):
                return "crossing"
    return "consistent"


@dataclass
class PatternReport:
    patterns: list  # (pattern, count, share), most frequent first
    total_crossing: int
    total_predicted: int

    def to_dict(self):
        return {
            "total_crossing": self.total_crossing,
            "total_predicted": self.total_predicted,
            "patterns": [
                {"pattern": p, "count": c, "share": s}
                for p, c, s in self.patterns
            ],
        }


def crossing_patterns(
    gold_trees,
    pred_trees,
    punct_tags=PTB_PUNCT_TAGS,
    punct_tokens=DEFAULT_PUNCT_TOKENS,
    pos_groups=POS_GROUPS,
    top: int | None = None,
) -> PatternReport:
    """POS-tag patterns of crossing predicted brackets, ranked by frequency."""
    counts = Counter()
    total_crossing = 0
    total_predicted = 0
    for i, (gold, pred) in enumerate(zip(gold_trees, pred_trees)):
        pair = _eval_pair(gold, pred, punct_tags, punct_tokens, i)
        if pair is None:
            continue
        gold_stripped, pred_stripped = pair
        tags = gold_stripped.leaf_labels()
        gold_spans = gold_stripped.nontrivial_span_set()
        for span in pred_stripped.nontrivial_span_set():
            total_predicted += 1
            if classify_span(span, gold_spans) != "crossing":
                continue
            total_crossing += 1
            lo, hi = span
            pattern = " ".join(
                pos_groups.get(t, t if t is not None else "?") for t in tags[lo:hi]
            )
            counts[pattern] += 1
    ranked = [
        (pat, cnt, cnt / total_crossing if total_crossing else 0.0)
        for pat, cnt in counts.most_common(top)
    ]
    return PatternReport(ranked, total_crossing, total_predicted)


@dataclass
class PassRateTable:
    """Per-(label, test) pass rates plus a distituent row and per-test F1."""

    pass_rates: dict  # label -> {test -> rate}
    distituent_rates: dict  # test -> rate
    test_f1: dict  # test -> f1 over all judged spans
    counts: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "pass_rates": self.pass_rates,
            "distituent_rates": self.distituent_rates,
            "test_f1": self.test_f1,
            "counts": self.counts,
        }


def per_test_pass_rates(
    scorer: GrammaticalityScorer,
    gold_trees,
    threshold: float = 0.5,
    labels: Sequence[str] = ANALYSIS_LABELS,
    punct_tags=PTB_PUNCT_TAGS,
    punct_tokens=DEFAULT_PUNCT_TOKENS,
    distituent_cap: int = 50,
    seed: int = 0,
    cache: JudgmentCache | None = None,
    max_transform_len: int | None = None,
    batch_size: int = 256,
) -> PassRateTable:
    """Judge every test on gold constituents and sampled distituents.

    A span passes a test when the judged probability is >= ``threshold``.
    Beyond ``distituent_cap`` non-gold spans per sentence, a seeded
    subsample is used.
    """
    labels = tuple(labels)
    rng = np.random.default_rng(seed)
    pass_counts = defaultdict(Counter)  # label -> test -> passes
    span_counts = Counter()  # label -> judged spans
    dist_pass = Counter()
    dist_total = 0
    tp = Counter()
    fp = Counter()
    fn = Counter()

    for gold in gold_trees:
        stripped = strip_punctuation(gold, punct_tags, punct_tokens)
        if stripped is None or len(stripped) < 3:
            continue
        tokens = tuple(t.lower() for t in stripped.leaves())
        judged = _judge_spans_per_test(
            scorer, tokens, cache, batch_size, max_transform_len
        )
        gold_span_labels = defaultdict(list)
        for lo, hi, label in _labeled_nontrivial_spans(stripped):
            gold_span_labels[(lo, hi)].append(label)
        gold_spans = set(gold_span_labels)
        distituents = [s for s in judged if s not in gold_spans]
        if len(distituents) > distituent_cap:
            picked = rng.choice(len(distituents), size=distituent_cap, replace=False)
            distituents = [distituents[int(i)] for i in sorted(picked)]
        for span in gold_spans:
            probs = judged[span]
            span_labels = [l for l in gold_span_labels[span] if l in labels]
            for label in span_labels:
                span_counts[label] += 1
            for test in ALL_TESTS:
                passed = probs[test] is not None and probs[test] >= threshold
                if passed:
                    tp[test] += 1
                    for label in span_labels:
                        pass_counts[label][test] += 1
                else:
                    fn[test] += 1
        for span in distituents:
            dist_total += 1
            probs = judged[span]
            for test in ALL_TESTS:
                if probs[test] is not None and probs[test] >= threshold:
                    dist_pass[test] += 1
                    fp[test] += 1

    rates = {
        label: {
            test: (pass_counts[label][test] / span_counts[label])
            if span_counts[label]
            else 0.0
            for test in ALL_TESTS
        }
        for label in labels
    }
    dist_rates = {
        test: dist_pass[test] / dist_total if dist_total else 0.0
        for test in ALL_TESTS
    }
    f1s = {}
    for test in ALL_TESTS:
        denom = 2 * tp[test] + fp[test] + fn[test]
        f1s[test] = 2 * tp[test] / denom if denom else 0.0
    counts = {
        "constituents": dict(span_counts),
        "distituents": dist_total,
    }
    return PassRateTable(rates, dist_rates, f1s, counts)


def _judge_spans_per_test(scorer, tokens, cache, batch_size, max_transform_len):
    """Map span -> {test -> probability or None (capped)} for one sentence."""
    from .decoder import _span_transforms  # local import; shares skip logic

    n = len(tokens)
    spans = [
        (lo, lo + length)
        for length in range(2, n)
        for lo in range(n - length + 1)
    ]
    texts = {}
    needed = {}
    for span in spans:
        row = []
        for trans in _span_transforms(tokens, span, max_transform_len):
            if trans is None:
                row.append(None)
                continue
            text = trans.text()
            row.append(text)
            if text not in needed:
                needed[text] = None if cache is None else cache.get(text)
        texts[span] = row
    pending = [t for t, p in needed.items() if p is None]
    for start in range(0, len(pending), batch_size):
        batch = pending[start : start + batch_size]
        probs = scorer.score_sentences([tuple(t.split(" ")) for t in batch])
        for text, prob in zip(batch, probs):
            needed[text] = float(prob)
            if cache is not None:
                cache.put(text, float(prob))
    return {
        span: {
            test: (needed[row[i]] if row[i] is not None else None)
            for i, test in enumerate(ALL_TESTS)
        }
        for span, row in ((s, texts[s]) for s in spans)
    }


def plot_recall_bars(table: LabelRecallTable, path):
    """Bar chart of per-label recall."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = list(table.rows)
    values = [table.rows[lbl][2] for lbl in labels]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(labels, values, color="#4878a8")
    ax.set_ylim(0, 1)
    ax.set_ylabel("recall")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_pass_rates(table: PassRateTable, path):
    """Grouped bars: per-test pass rate for each label plus distituents."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = list(table.pass_rates) + ["distituent"]
    tests = list(ALL_TESTS)
    data = np.zeros((len(rows), len(tests)))
    for r, label in enumerate(rows):
        source = (
            table.distituent_rates
            if label == "distituent"
            else table.pass_rates[label]
        )
        for c, test in enumerate(tests):
            data[r, c] = source[test]
    fig, ax = plt.subplots(figsize=(10, 4))
    width = 0.8 / len(rows)
    x = np.arange(len(tests))
    for r, label in enumerate(rows):
        ax.bar(x + r * width, data[r], width, label=label)
    ax.set_xticks(x + 0.4)
    ax.set_xticklabels(tests, rotation=30, ha="right")
    ax.set_ylim(0, 1)
    ax.set_ylabel("pass rate")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
