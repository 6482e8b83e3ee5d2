import numpy as np
import pytest

from ctkit.decoder import Chart, mbr_parse, parse_corpus, score_spans
from ctkit.scorer import ConstantScorer, GrammaticalityScorer, JudgmentCache
from ctkit.transforms import ALL_TESTS, apply_test
from ctkit.trees import render_bracketed

from .oracles import all_binary_span_sets, best_tree_score


class LookupScorer(GrammaticalityScorer):
    """Scores sentences from a fixed text -> probability table."""

    def __init__(self, table, default=0.0):
        self.table = dict(table)
        self.default = default

    def score_sentences(self, batch):
        return [self.table.get(" ".join(t), self.default) for t in batch]


def random_chart(rng, n, scale=1000):
    """Integer-scaled random chart (exact float sums, no ties by accident)."""
    chart = Chart([f"w{i}" for i in range(n)])
    for lo, hi in chart.judged_spans():
        chart.set(lo, hi, float(rng.integers(0, scale)) / scale)
    return chart


class TestChart:
    def test_trivial_spans_fixed(self):
        chart = Chart(["a", "b", "c"])
        assert chart.get(0, 1) == chart.get(1, 2) == chart.get(2, 3) == 1.0
        assert chart.get(0, 3) == 1.0
        with pytest.raises(ValueError):
            chart.set(0, 1, 0.4)
        with pytest.raises(ValueError):
            chart.set(0, 3, 0.4)

    def test_range_validation(self):
        chart = Chart(["a", "b", "c", "d"])
        with pytest.raises(ValueError):
            chart.set(0, 2, 1.5)


class TestScoreSpans:
    def test_constant_one(self):
        chart = score_spans(ConstantScorer(1.0), ("a", "b", "c", "d"))
        for lo, hi, score in chart.items():
            assert score == 1.0

    def test_constant_zero(self):
        chart = score_spans(ConstantScorer(0.0), ("a", "b", "c", "d"))
        for lo, hi, score in chart.items():
            trivial = hi - lo == 1 or (lo == 0 and hi == 4)
            assert score == (1.0 if trivial else 0.0)

    def test_mean_of_eight(self):
        tokens = ("a", "b", "c", "d")
        span = (1, 3)
        table = {}
        for i, test in enumerate(ALL_TESTS):
            text = " ".join(apply_test(test, tokens, span).tokens)
            table[text] = 1.0 if i < 4 else 0.0
        chart = score_spans(LookupScorer(table), tokens)
        assert chart.get(*span) == pytest.approx(0.5)

    def test_cache_transparency(self):
        rng = np.random.default_rng(0)
        probs = {}

        class HashScorer(GrammaticalityScorer):
            def score_sentences(self, batch):
                out = []
                for toks in batch:
                    key = " ".join(toks)
                    if key not in probs:
                        probs[key] = float(rng.random())
                    out.append(probs[key])
                return out

        tokens = tuple("u v w x y".split())
        plain = score_spans(HashScorer(), tokens, cache=None)
        cached = score_spans(HashScorer(), tokens, cache=JudgmentCache())
        assert np.array_equal(plain.scores, cached.scores)

    def test_length_cap_excludes_test(self):
        tokens = ("a", "b", "c", "d")
        # cap low enough that coordination of (0,3) is skipped
        table = {}
        for test in ALL_TESTS:
            try:
                out = apply_test(test, tokens, (0, 3), max_len=6)
            except Exception:
                continue
            table[" ".join(out.tokens)] = 1.0
        chart = score_spans(LookupScorer(table), tokens, max_transform_len=6)
        assert chart.get(0, 3) == 1.0  # average over the 7 judged tests


class TestMBRParse:
    def test_two_tokens_unique_tree(self):
        chart = Chart(["a", "b"])
        tree = mbr_parse(chart)
        assert tree.span_set() == {(0, 2)}
        assert render_bracketed(tree) == "(X (X a) (X b))"

    def test_three_tokens_prefers_higher_span(self):
        chart = Chart(["a", "b", "c"])
        chart.set(0, 2, 0.9)
        chart.set(1, 3, 0.1)
        tree = mbr_parse(chart)
        assert tree.span_set() == {(0, 3), (0, 2)}

    def test_single_token(self):
        tree = mbr_parse(Chart(["only"]))
        assert tree.is_leaf and tree.token == "only"

    def test_tie_break_lowest_split(self):
        chart = Chart(["a", "b", "c"])  # judged spans both default 0.0
        tree = mbr_parse(chart)
        # split k=1 wins the tie, putting the two-token span on the right
        assert tree.span_set() == {(0, 3), (1, 3)}

    def test_optimality_small_n(self):
        rng = np.random.default_rng(42)
        for n in range(2, 8):
            for _ in range(40):
                chart = random_chart(rng, n)
                tree = mbr_parse(chart)
                total = sum(chart.get(lo, hi) for lo, hi in tree.spans())
                total += sum(chart.get(i, i + 1) for i in range(n))
                expected = best_tree_score(chart.scores, n)
                assert total == pytest.approx(expected, abs=1e-9)

    def test_structure_counts(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(2, 12))
            tree = mbr_parse(random_chart(rng, n))
            assert tree.is_binary()
            internal = tree.spans()
            assert len(internal) == n - 1
            assert len(tree.leaves()) == n

    def test_monotone_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(3, 9))
            chart = Chart([f"w{i}" for i in range(n)])
            for lo, hi in chart.judged_spans():
                chart.set(lo, hi, float(rng.integers(0, 1000)) / 2000)  # [0, 0.5)
            shifted = Chart(chart.tokens)
            for lo, hi in chart.judged_spans():
                shifted.set(lo, hi, chart.get(lo, hi) + 0.5)
            assert mbr_parse(chart) == mbr_parse(shifted)


class TestParseCorpus:
    def test_empty_corpus(self):
        trees, charts, failures = parse_corpus(ConstantScorer(1.0), [])
        assert trees == [] and failures == []

    def test_single_token_sentence(self):
        trees, _, failures = parse_corpus(ConstantScorer(1.0), [("hi",)])
        assert not failures
        assert trees[0].is_leaf

    def test_deterministic_output(self):
        rng = np.random.default_rng(0)
        sentences = [
            tuple(rng.choice(list("abcdef"), size=int(rng.integers(2, 8))))
            for _ in range(12)
        ]
        scorer = ConstantScorer(0.5)
        first = [
            render_bracketed(t)
            for t in parse_corpus(scorer, sentences, cache=JudgmentCache())[0]
        ]
        second = [
            render_bracketed(t)
            for t in parse_corpus(scorer, sentences, cache=JudgmentCache())[0]
        ]
        assert first == second

    def test_worker_parity(self):
        rng = np.random.default_rng(5)
        sentences = [
            tuple(rng.choice(list("abcdef"), size=int(rng.integers(2, 8))))
            for _ in range(10)
        ]

        class SumScorer(GrammaticalityScorer):
            def score_sentences(self, batch):
                return [min(1.0, len(set(t)) / 6) for t in batch]

        serial = parse_corpus(SumScorer(), sentences, workers=1)[0]
        threaded = parse_corpus(SumScorer(), sentences, workers=4)[0]
        assert [render_bracketed(t) for t in serial] == [
            render_bracketed(t) for t in threaded
        ]

    def test_failures_recorded_and_run_continues(self):
        class FlakyScorer(GrammaticalityScorer):
            def score_sentences(self, batch):
                if any("boom" in t for t in batch):
                    raise RuntimeError("scorer exploded")
                return [0.5] * len(batch)

        sentences = [("a", "b", "c"), ("boom", "x", "y"), ("d", "e", "f")]
        trees, _, failures = parse_corpus(FlakyScorer(), sentences)
        assert len(failures) == 1 and failures[0][0] == 1
        assert trees[0] is not None and trees[2] is not None and trees[1] is None
