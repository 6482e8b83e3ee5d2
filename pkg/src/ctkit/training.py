"""Scorer training: real/fake initialization and alternating refinement.

Refinement alternates between (1) decoding trees with the current scorer and
(2) nudging the judgments toward tree membership: for each sentence a fixed
number of (span, test) pairs is sampled uniformly, labeled 1 when the span
sits in the decoded tree and 0 otherwise, and the pooled examples take one
binary cross-entropy gradient step. Judgment caches are cleared whenever the
model changes.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .decoder import mbr_parse, score_spans
from .scorer import GrammaticalityScorer, JudgmentCache, LabeledExample
from .transforms import ALL_TESTS, apply_test
from .trees import Tree

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


class NotTrainable(TrainingError):
    pass


@dataclass
class TrainConfig:
    batch_real: int = 32
    batch_fake: int = 32
    lr: float = 1e-2  # native-model default; remote backends want 3e-5
    warmup_fraction: float = 0.10
    refine_batch: int = 32
    tests_per_sentence: int = 16
    epochs: int = 1
    seed: int = 0

    def __post_init__(self):
        counts = (
            self.batch_real,
            self.batch_fake,
            self.refine_batch,
            self.tests_per_sentence,
            self.epochs,
        )
        if any(c <= 0 for c in counts):
            raise ValueError("all counts must be positive")
        if not 0.0 <= self.warmup_fraction <= 1.0:
            raise ValueError("warmup_fraction must lie in [0, 1]")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


def _warmup_lr(base_lr, step_index, total_steps, warmup_fraction):
    """Linear warmup over the first fraction of steps, then constant."""
    warmup_steps = math.ceil(warmup_fraction * total_steps)
    if warmup_steps <= 0 or step_index >= warmup_steps:
        return base_lr
    return base_lr * (step_index + 1) / warmup_steps


def train_initial(model, dataset: Sequence[LabeledExample], cfg: TrainConfig):
    """One pass of mixed real/fake batches; no early stopping."""
    if not getattr(model, "trainable", False):
        raise NotTrainable("backend not trainable; use export mode")
    reals = [ex for ex in dataset if ex.label == 1]
    fakes = [ex for ex in dataset if ex.label == 0]
    if not reals or not fakes:
        raise TrainingError("degenerate dataset: both labels must be present")

    rng = np.random.default_rng(cfg.seed)
    steps_per_epoch = max(
        math.ceil(len(reals) / cfg.batch_real),
        math.ceil(len(fakes) / cfg.batch_fake),
    )
    total_steps = steps_per_epoch * cfg.epochs
    step_index = 0
    for _ in range(cfg.epochs):
        real_order = rng.permutation(len(reals))
        fake_order = rng.permutation(len(fakes))
        for s in range(steps_per_epoch):
            batch = [
                reals[real_order[i % len(reals)]]
                for i in range(s * cfg.batch_real, (s + 1) * cfg.batch_real)
            ]
            batch += [
                fakes[fake_order[i % len(fakes)]]
                for i in range(s * cfg.batch_fake, (s + 1) * cfg.batch_fake)
            ]
            lr = _warmup_lr(cfg.lr, step_index, total_steps, cfg.warmup_fraction)
            try:
                loss = model.train_batch(batch, lr)
            except Exception as exc:
                raise TrainingError(f"training aborted at step {step_index}: {exc}") from exc
            if not np.isfinite(loss):
                raise TrainingError(f"diverged at step {step_index}")
            step_index += 1
    return model


def sample_refinement_examples(
    tokens: Sequence[str],
    tree: Tree,
    tests_per_sentence: int,
    rng: np.random.Generator,
) -> list[LabeledExample]:
    """Uniformly sample (span, test) pairs; label = span in decoded tree.

    Sampling is without replacement over all (nontrivial span, test) pairs;
    when fewer pairs exist than requested, all of them are used.
    """
    tokens = tuple(tokens)
    n = len(tokens)
    spans = [
        (lo, lo + length)
        for length in range(2, n)
        for lo in range(n - length + 1)
    ]
    if not spans:
        return []
    pairs = [(span, test) for span in spans for test in ALL_TESTS]
    k = min(tests_per_sentence, len(pairs))
    if k == len(pairs):
        chosen = range(len(pairs))
    else:
        chosen = sorted(int(i) for i in rng.choice(len(pairs), size=k, replace=False))
    tree_spans = tree.nontrivial_span_set()
    examples = []
    for i in chosen:
        span, test = pairs[i]
        transformed = apply_test(test, tokens, span)
        label = 1 if span in tree_spans else 0
        examples.append(
            LabeledExample(
                transformed.tokens,
                label,
                {"test": test, "span": [span[0], span[1]]},
            )
        )
    return examples


def refine_epoch(
    scorer: GrammaticalityScorer,
    sentences: Sequence[Sequence[str]],
    cfg: TrainConfig,
    rng: np.random.Generator,
    batch_size: int = 256,
    max_transform_len: int | None = None,
):
    """Alternate decode-and-update over the corpus for ``cfg.epochs`` epochs."""
    if not getattr(scorer, "trainable", False):
        raise NotTrainable("backend not trainable; use export mode")
    if not sentences:
        raise TrainingError("no sentences to refine on")
    sentences = [tuple(s) for s in sentences]
    batches_per_epoch = math.ceil(len(sentences) / cfg.refine_batch)
    total_steps = batches_per_epoch * cfg.epochs
    step_index = 0
    for _ in range(cfg.epochs):
        for b in range(batches_per_epoch):
            batch = sentences[b * cfg.refine_batch : (b + 1) * cfg.refine_batch]
            examples = []
            # fresh cache per step: judgments go stale after each update
            cache = JudgmentCache()
            for toks in batch:
                try:
                    chart = score_spans(
                        scorer,
                        toks,
                        cache=cache,
                        batch_size=batch_size,
                        max_transform_len=max_transform_len,
                    )
                    tree = mbr_parse(chart)
                except Exception as exc:  # noqa: BLE001 - keep the run alive
                    log.error("refinement skipping %r: %s", " ".join(toks), exc)
                    continue
                examples.extend(
                    sample_refinement_examples(
                        toks, tree, cfg.tests_per_sentence, rng
                    )
                )
            if not examples:
                step_index += 1
                continue
            lr = _warmup_lr(cfg.lr, step_index, total_steps, cfg.warmup_fraction)
            loss = scorer.train_batch(examples, lr)
            log.info("refine step %d: %d examples, loss %.4f", step_index, len(examples), loss)
            step_index += 1
    return scorer


def export_refinement_batch(
    trees: Sequence[Tree],
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> list[LabeledExample]:
    """Materialize one refinement batch as labeled examples.

    Sentences are recovered from tree leaves; a remote backend consumes the
    result through its train endpoint.
    """
    examples = []
    for tree in trees:
        tokens = tuple(tree.leaves())
        examples.extend(
            sample_refinement_examples(tokens, tree, cfg.tests_per_sentence, rng)
        )
    return examples


def write_examples_jsonl(path, examples: Sequence[LabeledExample]):
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(
                json.dumps(
                    {
                        "tokens": list(ex.tokens),
                        "label": ex.label,
                        "provenance": ex.provenance,
                    }
                )
                + "\n"
            )


def read_examples_jsonl(path) -> list[LabeledExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(
                LabeledExample(
                    tuple(rec["tokens"]),
                    int(rec["label"]),
                    rec.get("provenance", "real"),
                )
            )
    return out
