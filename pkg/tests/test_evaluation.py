import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctkit.evaluation import (
    EvalError,
    baseline_tree,
    classify_span,
    corpus_f1,
    crossing_patterns,
    per_test_pass_rates,
    recall_by_label,
    sentence_f1,
)
from ctkit.scorer import ConstantScorer
from ctkit.transforms import ALL_TESTS
from ctkit.trees import Tree, parse_bracketed, strip_punctuation

from .oracles import naive_f1, random_tree


def bt(shape):
    """Build an unlabeled tree from nested tuples of tokens."""
    if isinstance(shape, str):
        return Tree(token=shape)
    return Tree(children=[bt(s) for s in shape])


span_sets = st.sets(
    st.tuples(st.integers(0, 6), st.integers(0, 8)).map(
        lambda t: (min(t), max(t) + 1)
    ),
    max_size=8,
).map(frozenset)


class TestSentenceF1:
    def test_identical(self):
        s = frozenset({(0, 2), (2, 5)})
        assert sentence_f1(s, s) == (1.0, 1.0, 1.0)

    def test_disjoint(self):
        assert sentence_f1(frozenset({(0, 2)}), frozenset({(1, 3)})) == (0.0, 0.0, 0.0)

    def test_half_overlap(self):
        gold = frozenset({(0, 2), (2, 5)})
        pred = frozenset({(0, 2), (1, 5)})
        assert sentence_f1(gold, pred) == (0.5, 0.5, 0.5)

    def test_empty_both(self):
        assert sentence_f1(frozenset(), frozenset()) == (1.0, 1.0, 1.0)

    def test_empty_gold_nonempty_pred(self):
        p, r, f = sentence_f1(frozenset(), frozenset({(0, 2)}))
        assert (p, r) == (0.0, 1.0)
        assert f == 0.0

    @given(span_sets, span_sets)
    def test_matches_naive_oracle(self, gold, pred):
        assert sentence_f1(gold, pred) == pytest.approx(naive_f1(gold, pred))

    @given(span_sets, span_sets)
    def test_symmetry(self, gold, pred):
        p1, r1, f1 = sentence_f1(gold, pred)
        p2, r2, f2 = sentence_f1(pred, gold)
        assert (p1, r1) == (r2, p2)
        assert f1 == pytest.approx(f2)


class TestCorpusF1:
    def test_self_is_100(self, synth_corpus):
        trees = synth_corpus.trees[:50]
        report = corpus_f1(trees, trees)
        assert report.corpus_f1 == 100.0
        assert report.skipped == 0

    def test_count_mismatch(self):
        t = parse_bracketed("((a b))")
        with pytest.raises(EvalError, match="count"):
            corpus_f1([t], [t, t])

    def test_token_mismatch_identifies_sentence(self):
        g = parse_bracketed("((a b))")
        p = parse_bracketed("((a c))")
        with pytest.raises(EvalError, match="sentence 1"):
            corpus_f1([g, g], [g, p])

    def test_punct_only_sentences_skipped(self):
        g = [parse_bracketed("(S (. .))"), parse_bracketed("(S (A a) (B b) (C c))")]
        p = [parse_bracketed("((.))"), parse_bracketed("((a b) c)")]
        report = corpus_f1(g, p)
        assert report.skipped == 1 and report.evaluated == 1

    def test_hand_computed_mini_corpus(self):
        gold = [
            "(S (NP (DT the) (NN cat)) (VP (VBD sat) (PP (IN on) (NP (DT the) (NN mat)))))",
            "(S (NP (PRP it)) (VP (VBD fell) (ADVP (RB down))) (. .))",
            "(S (NP (DT a) (JJ big) (NN dog)) (VP (VBD ran)))",
        ]
        gold_trees = [parse_bracketed(t) for t in gold]
        pred_trees = [
            bt((("the", "cat"), (("sat", "on"), ("the", "mat")))),
            bt(("it", ("fell", "down"))),
            bt((("a", ("big", "dog")), "ran")),
        ]
        report = corpus_f1(gold_trees, pred_trees)
        # sentence 1: gold {(0,2),(2,6),(3,6),(4,6)}, pred {(0,2),(2,6),(2,4),(4,6)}
        #   -> p 3/4, r 3/4, f 3/4
        # sentence 2: gold {(1,3)}, pred {(1,3)} -> 1
        # sentence 3: gold {(0,3)}, pred {(0,3),(1,3)} -> p 1/2, r 1, f 2/3
        expected = 100.0 * np.mean([3 / 4, 1.0, 2 / 3])
        assert report.corpus_f1 == pytest.approx(expected, abs=1e-9)


class TestBaselines:
    def test_right(self):
        t = baseline_tree("right", "a b c d".split())
        assert t.nontrivial_span_set() == {(1, 4), (2, 4)}
        assert t.span_set() == {(0, 4), (1, 4), (2, 4)}

    def test_left(self):
        t = baseline_tree("left", "a b c d".split())
        assert t.span_set() == {(0, 4), (0, 3), (0, 2)}

    def test_balanced(self):
        t = baseline_tree("balanced", "a b c d".split())
        assert t.span_set() == {(0, 4), (0, 2), (2, 4)}

    def test_balanced_odd_splits_at_ceiling(self):
        t = baseline_tree("balanced", "a b c".split())
        assert t.span_set() == {(0, 3), (0, 2)}

    def test_deterministic(self):
        a = baseline_tree("right", "a b c d e".split())
        b = baseline_tree("right", "a b c d e".split())
        assert a == b

    def test_single_token(self):
        assert baseline_tree("left", ["x"]).is_leaf


class TestRecallByLabel:
    GOLD = [
        "(S (NP (DT the) (NN cat)) (VP (VBD sat) (PP (IN on) (NP (DT the) (NN mat)))))",
        "(S (NP (DT a) (NN dog)) (VP (VBD ran) (ADVP (RB fast))))",
        "(S (NP (NNP sue)) (VP (VBD saw) (NP (DT the) (NN bird))))",
    ]

    def test_pred_equals_gold(self):
        gold = [parse_bracketed(t) for t in self.GOLD]
        table = recall_by_label(gold, gold, labels=("NP", "VP", "PP", "ADVP"))
        for label in ("NP", "VP", "PP"):
            assert table.rows[label][2] == 1.0

    def test_pred_without_spans(self):
        gold = [parse_bracketed(t) for t in self.GOLD]
        # flat predictions carry only the trivial full span
        preds = [
            Tree(children=[Tree(token=tok.lower()) for tok in t.leaves() if tok != "."])
            for t in gold
        ]
        table = recall_by_label(gold, preds, labels=("NP", "VP", "PP"))
        assert all(row[2] == 0.0 for row in table.rows.values())

    def test_matches_independent_counter(self):
        gold = [parse_bracketed(t) for t in self.GOLD]
        pred = [
            bt((("the", "cat"), ("sat", ("on", ("the", "mat"))))),
            bt((("a", "dog"), ("ran", "fast"))),
            bt((("sue", ("saw", "the")), "bird")),
        ]
        table = recall_by_label(gold, pred, labels=("NP", "VP", "PP"))

        # independent naive counter over the same fixtures
        def naive(label):
            matched = total = 0
            for g, p in zip(gold, pred):
                gs = strip_punctuation(g)
                ps = strip_punctuation(p)
                n = len(gs)
                pred_spans = {
                    s for s in ps.spans() if 2 <= s[1] - s[0] < n
                }
                for lo, hi, lbl in gs.labeled_spans():
                    if lbl == label and 2 <= hi - lo < n:
                        total += 1
                        matched += (lo, hi) in pred_spans
            return matched, total

        for label in ("NP", "VP", "PP"):
            m, t = naive(label)
            assert table.rows[label][0] == m
            assert table.rows[label][1] == t


class TestPerTestPassRates:
    def test_constant_one_scorer(self):
        gold = [
            parse_bracketed(
                "(S (NP (DT the) (NN cat)) (VP (VBD sat) (PP (IN on) (NP (DT the) (NN mat)))))"
            )
        ]
        table = per_test_pass_rates(ConstantScorer(1.0), gold, labels=("NP", "VP", "PP"))
        for label in ("NP", "VP", "PP"):
            assert all(r == 1.0 for r in table.pass_rates[label].values())
        assert all(r == 1.0 for r in table.distituent_rates.values())
        # 4 gold spans and 10 distituents, everything passes: F1 = 8 / 18
        assert table.counts["distituents"] == 10
        assert all(f == pytest.approx(4 / 9) for f in table.test_f1.values())

    def test_threshold_zero_passes_everything(self):
        gold = [parse_bracketed("(S (NP (DT a) (NN dog)) (VP (VBD ran) (RB fast)))")]
        table = per_test_pass_rates(
            ConstantScorer(0.0), gold, threshold=0.0, labels=("NP", "VP")
        )
        for label in ("NP", "VP"):
            assert all(r == 1.0 for r in table.pass_rates[label].values())


class TestCrossing:
    def test_pred_equals_gold_no_crossings(self, synth_corpus):
        trees = synth_corpus.trees[:30]
        report = crossing_patterns(trees, trees)
        assert report.total_crossing == 0
        assert report.patterns == []

    def test_single_crossing(self):
        gold = parse_bracketed("(S (AB (A a) (B b)) (CDE (C c) (D d) (E e)))")
        # the lone predicted span (1,3) crosses both gold brackets: one mistake
        pred = bt(("a", ("b", "c"), "d", "e"))
        report = crossing_patterns([gold], [pred])
        assert report.total_crossing == 1
        assert report.patterns[0][0] == "B C"

    def test_pos_grouping_and_rank(self):
        gold = parse_bracketed(
            "(S (NP (PRP they)) (VP (VBP 're) (VP (VBG squaring) (PRT (RP off)))))"
        )
        pred = parse_bracketed("((they 're) (squaring off))")
        report = crossing_patterns([gold], [pred])
        assert report.patterns[0][0] == "PRP VBD/P/Z"
        assert report.patterns[0][2] == 1.0

    def test_classification_partition(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(3, 10))
            gold = random_tree(rng, n)
            gold_spans = gold.nontrivial_span_set()
            spans = [
                (lo, lo + length)
                for length in range(2, n)
                for lo in range(n - length + 1)
            ]
            for span in spans:
                kind = classify_span(span, gold_spans)
                assert kind in ("correct", "consistent", "crossing")
                if span in gold_spans:
                    assert kind == "correct"
