"""Initialize a grammaticality scorer with the real/fake task.

Fake sentences are manufactured by corruptions (shuffles, swaps, drops,
span moves, bigram resamples); the scorer learns to tell them from real
corpus sentences. No treebank labels anywhere.
"""

import numpy as np

from ctkit import (
    ALL_CORRUPTIONS,
    NativeScorer,
    TrainConfig,
    corrupt,
    default_grammar,
    make_realfake_dataset,
    make_rng,
    sample_corpus,
    train_bigram,
    train_initial,
)

grammar = default_grammar()
corpus = sample_corpus(grammar, n=400, max_len=12, rng=make_rng(3)).sentences

print("one sentence, all corruption kinds:")
sent = corpus[6]
lm = train_bigram(corpus, alpha=0.1)
print("  real:         ", " ".join(sent))
for kind in ALL_CORRUPTIONS:
    try:
        fake = corrupt(kind, sent, make_rng(1), lm=lm)
        print(f"  {kind:14s}", " ".join(fake))
    except Exception as exc:
        print(f"  {kind:14s} ({exc})")

dataset = make_realfake_dataset(corpus, ALL_CORRUPTIONS, make_rng(5))
print(f"\ndataset: {len(dataset)} examples")

model = NativeScorer(dims=2 ** 18)
train_initial(model, dataset, TrainConfig(lr=5e-2, seed=5))

reals = [ex.tokens for ex in dataset if ex.label == 1][:200]
fakes = [ex.tokens for ex in dataset if ex.label == 0][:200]
real_mean = float(np.mean(model.score_sentences(reals)))
fake_mean = float(np.mean(model.score_sentences(fakes)))
print(f"mean score on real sentences: {real_mean:.3f}")
print(f"mean score on fakes:          {fake_mean:.3f}")
