"""End-to-end parsing on the bundled synthetic grammar.

The grammar's CYK recognizer is a perfect grammaticality judge, so this
shows the method at its ceiling: score spans by averaging the eight test
judgments, decode the best binary tree with CKY, evaluate against the
sampled gold trees, and compare with a right-branching baseline.
"""

from ctkit import (
    JudgmentCache,
    OracleScorer,
    baseline_tree,
    corpus_f1,
    default_grammar,
    make_rng,
    parse_corpus,
    render_bracketed,
    sample_corpus,
    score_spans,
)

grammar = default_grammar()
corpus = sample_corpus(grammar, n=200, max_len=12, rng=make_rng(7))
oracle = OracleScorer(grammar)

print("sampled sentences:")
for s in corpus.sentences[:5]:
    print("  ", " ".join(s))

# span scores for one sentence
tokens = corpus.sentences[2]
chart = score_spans(oracle, tokens)
print(f"\nspan scores for: {' '.join(tokens)}")
for lo, hi, score in chart.items():
    if hi - lo >= 2 and score > 0:
        print(f"  ({lo},{hi}) {' '.join(tokens[lo:hi])!r:40s} {score:.3f}")

trees, _, _ = parse_corpus(oracle, corpus.sentences, cache=JudgmentCache())
print("\ndecoded vs gold:")
for toks, pred, gold in list(zip(corpus.sentences, trees, corpus.trees))[:3]:
    print("  sent:", " ".join(toks))
    print("  pred:", render_bracketed(pred))
    print("  gold:", render_bracketed(gold))

report = corpus_f1(corpus.trees, trees)
rb = [baseline_tree("right", s) for s in corpus.sentences]
rb_report = corpus_f1(corpus.trees, rb)
print(f"\noracle-judge F1:      {report.corpus_f1:.2f}")
print(f"right-branching F1:   {rb_report.corpus_f1:.2f}")
