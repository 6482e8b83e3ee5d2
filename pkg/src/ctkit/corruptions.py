"""Corruption generators for real/fake training data, plus the bigram LM.

Six kinds: shuffle, swap, drop, span_drop, span_movement, bigram. Every
corruption resamples until the output differs from the input (at most
``max_attempts`` tries) so a fake can never duplicate its real source.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Sequence

import numpy as np

from .scorer import LabeledExample

log = logging.getLogger(__name__)

SHUFFLE = "shuffle"
SWAP = "swap"
DROP = "drop"
SPAN_DROP = "span_drop"
SPAN_MOVEMENT = "span_movement"
BIGRAM = "bigram"

ALL_CORRUPTIONS = (SHUFFLE, SWAP, DROP, SPAN_DROP, SPAN_MOVEMENT, BIGRAM)

BOS = "<s>"
EOS = "</s>"

SHUFFLE_PICK_PROB = 0.5
DROP_PICK_PROB = 0.3


class CorruptionError(ValueError):
    """The corruption cannot apply to this sentence (too short, missing LM)."""


class DegenerateInput(RuntimeError):
    """Resampling kept reproducing the input sentence."""


def make_rng(seed: int) -> np.random.Generator:
    """Seeded random source; identical seeds yield identical streams."""
    return np.random.default_rng(int(seed))


class BigramLM:
    """Add-alpha smoothed bigram model with begin/end boundary symbols."""

    def __init__(self, counts, context_totals, vocab, alpha: float):
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        self.counts = counts
        self.context_totals = context_totals
        self.vocab = tuple(sorted(vocab))
        self._vocab_set = frozenset(self.vocab)
        self.alpha = float(alpha)

    @classmethod
    def train(cls, corpus: Sequence[Sequence[str]], alpha: float = 0.1):
        if not corpus:
            raise ValueError("empty corpus")
        counts = Counter()
        totals = Counter()
        vocab = set()
        for sent in corpus:
            vocab.update(sent)
            prev = BOS
            for tok in (*sent, EOS):
                counts[(prev, tok)] += 1
                totals[prev] += 1
                prev = tok
        return cls(counts, totals, vocab, alpha)

    def prob(self, context: str, token: str) -> float:
        """P(token | context); token may be the end symbol."""
        if token != EOS and token not in self._vocab_set:
            return 0.0
        support = len(self.vocab) + 1  # vocab plus the end symbol
        denom = self.context_totals[context] + self.alpha * support
        if denom == 0:
            return 0.0
        return (self.counts[(context, token)] + self.alpha) / denom

    def generate(self, length: int, rng: np.random.Generator) -> tuple[str, ...]:
        """Sample exactly ``length`` tokens, never emitting the end symbol."""
        if length <= 0:
            raise ValueError("length must be positive")
        if not self.vocab:
            raise ValueError("empty vocabulary")
        out = []
        context = BOS
        vocab = self.vocab
        for _ in range(length):
            weights = np.array(
                [self.counts[(context, t)] + self.alpha for t in vocab],
                dtype=np.float64,
            )
            total = weights.sum()
            if total <= 0:
                weights = np.ones(len(vocab))
                total = float(len(vocab))
            tok = vocab[rng.choice(len(vocab), p=weights / total)]
            out.append(tok)
            context = tok
        return tuple(out)


def train_bigram(corpus, alpha: float = 0.1) -> BigramLM:
    return BigramLM.train(corpus, alpha)


def _shuffle(tokens, rng):
    n = len(tokens)
    picked = [i for i in range(n) if rng.random() < SHUFFLE_PICK_PROB]
    if len(picked) < 2:
        return tuple(tokens)  # counts as a failed attempt
    perm = rng.permutation(len(picked))
    out = list(tokens)
    for slot, src in zip(picked, perm):
        out[slot] = tokens[picked[src]]
    return tuple(out)


def _swap(tokens, rng):
    n = len(tokens)
    i, j = rng.choice(n, size=2, replace=False)
    out = list(tokens)
    out[i], out[j] = out[j], out[i]
    return tuple(out)


def _drop(tokens, rng):
    keep = [t for t in tokens if rng.random() >= DROP_PICK_PROB]
    if not keep or len(keep) == len(tokens):
        return tuple(tokens)
    return tuple(keep)


def _span_bounds(n, rng):
    length = int(rng.integers(1, n))  # uniform in [1, n-1]
    lo = int(rng.integers(0, n - length + 1))
    return lo, lo + length


def _span_drop(tokens, rng):
    lo, hi = _span_bounds(len(tokens), rng)
    return tuple(tokens[:lo]) + tuple(tokens[hi:])


def _span_movement(tokens, rng):
    lo, hi = _span_bounds(len(tokens), rng)
    span = tuple(tokens[lo:hi])
    rest = tuple(tokens[:lo]) + tuple(tokens[hi:])
    if rng.integers(2) == 0:
        return span + rest
    return rest + span


def corrupt(
    kind: str,
    tokens: Sequence[str],
    rng: np.random.Generator,
    lm: BigramLM | None = None,
    max_attempts: int = 16,
) -> tuple[str, ...]:
    """Produce a corrupted variant of ``tokens`` that differs from it."""
    if kind not in ALL_CORRUPTIONS:
        raise ValueError(f"unknown corruption kind {kind!r}")
    tokens = tuple(tokens)
    n = len(tokens)
    min_len = 3 if kind == SPAN_DROP else 2
    if n < min_len:
        raise CorruptionError(
            f"corruption inapplicable: {kind} needs >= {min_len} tokens, got {n}"
        )
    if kind == BIGRAM and lm is None:
        raise CorruptionError("corruption inapplicable: bigram requires a language model")

    for _ in range(max_attempts):
        if kind == SHUFFLE:
            out = _shuffle(tokens, rng)
        elif kind == SWAP:
            out = _swap(tokens, rng)
        elif kind == DROP:
            out = _drop(tokens, rng)
        elif kind == SPAN_DROP:
            out = _span_drop(tokens, rng)
        elif kind == SPAN_MOVEMENT:
            out = _span_movement(tokens, rng)
        else:
            out = lm.generate(n, rng)
        if out != tokens:
            return out
    raise DegenerateInput(f"degenerate input: {kind} kept reproducing the sentence")


def make_realfake_dataset(
    corpus: Sequence[Sequence[str]],
    kinds: Sequence[str],
    rng: np.random.Generator,
    lm: BigramLM | None = None,
    alpha: float = 0.1,
    max_attempts: int = 16,
) -> list[LabeledExample]:
    """One real (label 1) and one corrupted (label 0) example per sentence.

    The corruption kind is drawn uniformly from ``kinds``; sentences a
    corruption cannot handle are skipped (and logged) entirely, keeping the
    labels balanced.
    """
    if not corpus:
        raise ValueError("empty corpus")
    kinds = tuple(sorted(set(kinds)))
    if not kinds:
        raise ValueError("no corruption kinds given")
    for k in kinds:
        if k not in ALL_CORRUPTIONS:
            raise ValueError(f"unknown corruption kind {k!r}")
    if BIGRAM in kinds and lm is None:
        lm = train_bigram(corpus, alpha)

    examples = []
    skipped = 0
    for sent in corpus:
        sent = tuple(sent)
        kind = kinds[int(rng.integers(len(kinds)))]
        try:
            fake = corrupt(kind, sent, rng, lm=lm, max_attempts=max_attempts)
        except (CorruptionError, DegenerateInput) as exc:
            skipped += 1
            log.warning("skipping %r: %s", " ".join(sent), exc)
            continue
        examples.append(LabeledExample(sent, 1, "real"))
        examples.append(LabeledExample(fake, 0, kind))
    if skipped:
        log.info("skipped %d sentences while building real/fake data", skipped)
    return examples
