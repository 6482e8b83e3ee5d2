"""Span scoring from constituency-test judgments and minimum-risk CKY.

Each span of length 2..n-1 is scored by the mean grammaticality judgment of
its eight constituency tests; length-1 spans and the whole sentence are
pinned at 1.0 (they sit in every binary tree, so any constant is
argmax-equivalent). The decoder returns the binary tree maximizing the sum
of its span scores.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from collections.abc import Sequence

import numpy as np

from .scorer import GrammaticalityScorer, JudgmentCache
from .transforms import ALL_TESTS, LengthCapExceeded, apply_test
from .trees import Span, Tree

log = logging.getLogger(__name__)

DEFAULT_LENGTH_CAP = 60
DEFAULT_SCORE_BATCH = 256


class Chart:
    """Per-sentence matrix of span scores in [0, 1]."""

    def __init__(self, tokens: Sequence[str]):
        self.tokens = tuple(tokens)
        n = len(self.tokens)
        if n == 0:
            raise ValueError("empty sentence")
        self.n = n
        self.scores = np.zeros((n + 1, n + 1), dtype=np.float64)
        for i in range(n):
            self.scores[i, i + 1] = 1.0
        self.scores[0, n] = 1.0

    def set(self, lo: int, hi: int, value: float):
        if not (0 <= lo < hi <= self.n):
            raise ValueError(f"invalid span ({lo}, {hi})")
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"score {value} outside [0, 1]")
        if hi - lo == 1 or (lo == 0 and hi == self.n):
            raise ValueError("trivial spans are fixed at 1.0")
        self.scores[lo, hi] = value

    def get(self, lo: int, hi: int) -> float:
        return float(self.scores[lo, hi])

    def judged_spans(self):
        """Spans this chart actually judges: 2 <= length < n."""
        return [
            (lo, lo + length)
            for length in range(2, self.n)
            for lo in range(self.n - length + 1)
        ]

    def items(self):
        for lo in range(self.n):
            for hi in range(lo + 1, self.n + 1):
                yield lo, hi, float(self.scores[lo, hi])


def _span_transforms(tokens, span, max_transform_len):
    """Eight transform texts for a span; capped ones come back as None."""
    out = []
    for test in ALL_TESTS:
        try:
            out.append(apply_test(test, tokens, span, max_len=max_transform_len))
        except LengthCapExceeded:
            out.append(None)
    return out


def score_spans(
    scorer: GrammaticalityScorer,
    tokens: Sequence[str],
    cache: JudgmentCache | None = None,
    batch_size: int = DEFAULT_SCORE_BATCH,
    max_transform_len: int | None = None,
) -> Chart:
    """Judge all eight tests for every nontrivial span and average them.

    Judgments are deduplicated by transformed-sentence text, through
    ``cache`` when given (valid only while the scorer is fixed) and within
    the call otherwise.
    """
    chart = Chart(tokens)
    span_texts: dict[Span, list] = {}
    needed: dict[str, float | None] = {}
    for span in chart.judged_spans():
        texts = []
        for trans in _span_transforms(chart.tokens, span, max_transform_len):
            if trans is None:
                texts.append(None)
                continue
            text = trans.text()
            texts.append(text)
            if text not in needed:
                needed[text] = None if cache is None else cache.get(text)
        span_texts[span] = texts

    pending = [text for text, prob in needed.items() if prob is None]
    for start in range(0, len(pending), batch_size):
        batch = pending[start : start + batch_size]
        probs = scorer.score_sentences([tuple(t.split(" ")) for t in batch])
        if len(probs) != len(batch):
            raise RuntimeError(
                f"scorer returned {len(probs)} values for a batch of {len(batch)}"
            )
        for text, prob in zip(batch, probs):
            prob = float(prob)
            if not 0.0 <= prob <= 1.0:
                raise RuntimeError(f"scorer produced {prob} outside [0, 1]")
            needed[text] = prob
            if cache is not None:
                cache.put(text, prob)

    for span, texts in span_texts.items():
        judged = [needed[t] for t in texts if t is not None]
        if not judged:
            raise RuntimeError(f"all tests capped for span {span}")
        chart.set(span[0], span[1], float(sum(judged)) / len(judged))
    return chart


def mbr_parse(chart: Chart, placeholder_label: str | None = "X") -> Tree:
    """Binary tree maximizing the total span score, via CKY.

    Ties break toward the lowest split index, so decoding is deterministic.
    """
    n = chart.n
    tokens = chart.tokens
    if n == 1:
        return Tree(label=placeholder_label, token=tokens[0])
    best = np.zeros((n + 1, n + 1), dtype=np.float64)
    splits = {}
    for i in range(n):
        best[i, i + 1] = chart.scores[i, i + 1]
    for length in range(2, n + 1):
        for lo in range(n - length + 1):
            hi = lo + length
            best_total = -np.inf
            best_k = -1
            for k in range(lo + 1, hi):
                total = best[lo, k] + best[k, hi]
                if total > best_total:
                    best_total = total
                    best_k = k
            best[lo, hi] = chart.scores[lo, hi] + best_total
            splits[(lo, hi)] = best_k

    def build(lo, hi):
        if hi - lo == 1:
            return Tree(label=placeholder_label, token=tokens[lo])
        k = splits[(lo, hi)]
        return Tree(
            label=placeholder_label, children=(build(lo, k), build(k, hi))
        )

    return build(0, n)


def parse_sentence(
    scorer,
    tokens,
    cache=None,
    batch_size: int = DEFAULT_SCORE_BATCH,
    max_transform_len: int | None = None,
    placeholder_label: str | None = "X",
) -> Tree:
    chart = score_spans(
        scorer, tokens, cache=cache, batch_size=batch_size,
        max_transform_len=max_transform_len,
    )
    return mbr_parse(chart, placeholder_label=placeholder_label)


def parse_corpus(
    scorer,
    sentences: Sequence[Sequence[str]],
    cache: JudgmentCache | None = None,
    length_cap: int = DEFAULT_LENGTH_CAP,
    workers: int = 1,
    batch_size: int = DEFAULT_SCORE_BATCH,
    max_transform_len: int | None = None,
    placeholder_label: str | None = "X",
    emit_charts: bool = False,
):
    """Parse every sentence; order preserved.

    Returns ``(trees, charts, failures)``. ``charts`` is None unless
    ``emit_charts``. Per-sentence failures leave a None tree and are
    reported in ``failures`` as (index, message); the run continues.
    Sentences longer than ``length_cap`` are parsed anyway but logged.
    """
    trees = [None] * len(sentences)
    charts = [None] * len(sentences) if emit_charts else None
    failures = []

    def work(i):
        toks = tuple(sentences[i])
        if len(toks) > length_cap:
            log.warning(
                "sentence %d has %d tokens (cap %d); parsing anyway",
                i, len(toks), length_cap,
            )
        chart = score_spans(
            scorer, toks, cache=cache, batch_size=batch_size,
            max_transform_len=max_transform_len,
        )
        return chart, mbr_parse(chart, placeholder_label=placeholder_label)

    def record(i, result, exc):
        if exc is not None:
            failures.append((i, str(exc)))
            log.error("failed to parse sentence %d: %s", i, exc)
            return
        chart, tree = result
        trees[i] = tree
        if emit_charts:
            charts[i] = chart

    if workers > 1 and len(sentences) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(work, i): i for i in range(len(sentences))}
            for fut, i in futs.items():
                try:
                    record(i, fut.result(), None)
                except Exception as exc:  # noqa: BLE001 - per-sentence isolation
                    record(i, None, exc)
    else:
        for i in range(len(sentences)):
            try:
                record(i, work(i), None)
            except Exception as exc:  # noqa: BLE001
                record(i, None, exc)

    return trees, charts, failures
