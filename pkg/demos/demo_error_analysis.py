"""Error analysis: recall by label, per-test pass rates, crossing brackets.

Run on the synthetic setup where we know the right answers: substitution
tests should fire on exactly their own category (it -> NP, ones -> NOM,
did so -> VP), coordination on coordinable categories, and crossing
brackets should be rare.
"""

from ctkit import (
    JudgmentCache,
    OracleScorer,
    crossing_patterns,
    default_grammar,
    make_rng,
    parse_corpus,
    per_test_pass_rates,
    recall_by_label,
    sample_corpus,
)

grammar = default_grammar()
corpus = sample_corpus(grammar, n=200, max_len=12, rng=make_rng(11))
oracle = OracleScorer(grammar)
trees, _, _ = parse_corpus(oracle, corpus.sentences, cache=JudgmentCache())

labels = ("NP", "VP", "NOM", "PP", "CNP", "CVP")

print("recall by label:")
table = recall_by_label(corpus.trees, trees, labels=labels)
for label, (matched, total, recall) in table.rows.items():
    if total:
        print(f"  {label:5s} {recall:.3f}  ({matched}/{total})")

print("\nper-test pass rates (threshold 0.5):")
rates = per_test_pass_rates(
    oracle, corpus.trees, labels=("NP", "VP", "NOM"), cache=JudgmentCache()
)
header = "        " + " ".join(f"{t[:9]:>10s}" for t in rates.test_f1)
print(header)
for label in ("NP", "VP", "NOM"):
    row = " ".join(f"{rates.pass_rates[label][t]:10.3f}" for t in rates.test_f1)
    print(f"  {label:5s} {row}")
row = " ".join(f"{rates.distituent_rates[t]:10.3f}" for t in rates.test_f1)
print(f"  dist. {row}")

print("\ncrossing brackets:")
report = crossing_patterns(corpus.trees, trees, top=5)
print(f"  {report.total_crossing} of {report.total_predicted} predicted spans cross gold")
for pattern, count, share in report.patterns:
    print(f"  {pattern:20s} {count:4d}  {100 * share:.1f}%")
