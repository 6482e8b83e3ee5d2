"""Alternating refinement: parse with the current judge, then train the
judge toward its own trees.

Each round decodes trees for a batch, samples 16 (span, test) pairs per
sentence, labels them by tree membership, and takes one gradient step on
the judged probabilities. Self-consistency between judgments and trees
improves unlabeled F1 without ever seeing a gold tree.
"""

from ctkit import (
    JudgmentCache,
    NativeScorer,
    TrainConfig,
    corpus_f1,
    default_grammar,
    make_realfake_dataset,
    make_rng,
    parse_corpus,
    refine_epoch,
    sample_corpus,
    train_initial,
)
from ctkit.corruptions import SHUFFLE

grammar = default_grammar()
corpus = sample_corpus(grammar, n=300, max_len=12, rng=make_rng(7))

model = NativeScorer(dims=2 ** 18)
train_initial(
    model,
    make_realfake_dataset(corpus.sentences, [SHUFFLE], make_rng(13)),
    TrainConfig(lr=5e-2, seed=13),
)


def f1():
    trees, _, _ = parse_corpus(model, corpus.sentences, cache=JudgmentCache())
    return corpus_f1(corpus.trees, trees).corpus_f1


print(f"F1 after real/fake initialization: {f1():.2f}")
for round_index in range(3):
    refine_epoch(
        model,
        corpus.sentences,
        TrainConfig(lr=0.1, seed=21 + round_index),
        make_rng(21 + round_index),
    )
    print(f"F1 after refinement round {round_index + 1}:    {f1():.2f}")
