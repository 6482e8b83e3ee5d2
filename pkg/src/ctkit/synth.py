"""Synthetic context-free grammar harness with a decidable oracle judge.

The grammar is in normal form (binary rules plus unary-to-terminal rules)
and may designate a proform terminal per nonterminal, so substitution and
coordination tests behave the way they do in natural language: replacing a
true constituent of category X by X's proform keeps the string inside the
language. Membership is decided exactly by CYK, giving a hard 0/1
grammaticality oracle for end-to-end verification of the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from collections import defaultdict
from collections.abc import Sequence
from importlib import resources

import numpy as np

from .scorer import GrammaticalityScorer
from .trees import Tree

MAX_SAMPLE_REJECTIONS = 100_000


class GrammarError(ValueError):
    pass


@dataclass
class DerivedCorpus:
    """Sampled sentences with their derivation trees."""

    sentences: list[tuple[str, ...]]
    trees: list[Tree]


class SyntheticGrammar:
    """Binary + lexical rules over a start symbol, with proform metadata.

    Duplicate rule lines are allowed and act as sampling weights; the
    recognizer ignores multiplicity.
    """

    def __init__(self, binary_rules, lexical_rules, start="S", proforms=None):
        self.binary_rules = [tuple(r) for r in binary_rules]
        self.lexical_rules = [tuple(r) for r in lexical_rules]
        self.start = start
        self.proforms = dict(proforms or {})
        if not self.lexical_rules:
            raise GrammarError("grammar has no lexical rules")

        self.nonterminals = frozenset(
            [lhs for lhs, *_ in self.binary_rules]
            + [lhs for lhs, _ in self.lexical_rules]
        )
        for lhs, left, right in self.binary_rules:
            for sym in (left, right):
                if sym not in self.nonterminals:
                    raise GrammarError(
                        f"rule {lhs} -> {left} {right}: {sym} never rewrites"
                    )
        if start not in self.nonterminals:
            raise GrammarError(f"start symbol {start!r} has no rules")
        self.terminals = frozenset(t for _, t in self.lexical_rules)

        self._expansions = defaultdict(list)  # lhs -> rule list, with repeats
        for lhs, left, right in self.binary_rules:
            self._expansions[lhs].append(("bin", left, right))
        for lhs, term in self.lexical_rules:
            self._expansions[lhs].append(("lex", term))

        self._pair_index = defaultdict(set)
        for lhs, left, right in self.binary_rules:
            self._pair_index[(left, right)].add(lhs)
        self._pair_index = {k: frozenset(v) for k, v in self._pair_index.items()}
        self._lex_index = defaultdict(set)
        for lhs, term in self.lexical_rules:
            self._lex_index[term].add(lhs)
        self._lex_index = {k: frozenset(v) for k, v in self._lex_index.items()}

        self._check_no_dead_symbols()
        self._check_proforms()
        self._min_yield = self._compute_min_yields()

    def _check_no_dead_symbols(self):
        productive = {lhs for lhs, _ in self.lexical_rules}
        changed = True
        while changed:
            changed = False
            for lhs, left, right in self.binary_rules:
                if lhs not in productive and left in productive and right in productive:
                    productive.add(lhs)
                    changed = True
        dead = self.nonterminals - productive
        if dead:
            raise GrammarError(f"dead nonterminals (derive no string): {sorted(dead)}")

    def _check_proforms(self):
        for nt, term in self.proforms.items():
            parents = self._lex_index.get(term, frozenset())
            if parents != {nt}:
                raise GrammarError(
                    f"proform {term!r} of {nt} must be derivable from exactly "
                    f"{nt}, found {sorted(parents)}"
                )

    def _compute_min_yields(self):
        dist = {nt: float("inf") for nt in self.nonterminals}
        for lhs, _ in self.lexical_rules:
            dist[lhs] = 1
        changed = True
        while changed:
            changed = False
            for lhs, left, right in self.binary_rules:
                cand = dist[left] + dist[right]
                if cand < dist[lhs]:
                    dist[lhs] = cand
                    changed = True
        return dist

    @classmethod
    def from_text(cls, text: str, start: str = "S") -> "SyntheticGrammar":
        """Parse a rule list: one ``LHS -> RHS1 [RHS2] [# proform]`` per line."""
        binary, lexical, proforms = [], [], {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            is_proform = False
            if "#" in line:
                line, comment = line.split("#", 1)
                is_proform = comment.strip() == "proform"
                line = line.strip()
            if "->" not in line:
                raise GrammarError(f"line {lineno}: missing '->'")
            lhs, rhs = (part.strip() for part in line.split("->", 1))
            symbols = rhs.split()
            if not lhs or not symbols:
                raise GrammarError(f"line {lineno}: empty rule side")
            if len(symbols) == 1:
                lexical.append((lhs, symbols[0]))
                if is_proform:
                    proforms[lhs] = symbols[0]
            elif len(symbols) == 2:
                if is_proform:
                    raise GrammarError(
                        f"line {lineno}: proform marker on a binary rule"
                    )
                binary.append((lhs, symbols[0], symbols[1]))
            else:
                raise GrammarError(
                    f"line {lineno}: rules must have one or two right-hand symbols"
                )
        return cls(binary, lexical, start=start, proforms=proforms)

    @classmethod
    def from_file(cls, path, start: str = "S") -> "SyntheticGrammar":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), start=start)


def default_grammar() -> SyntheticGrammar:
    """The grammar bundled with the package."""
    text = resources.files("ctkit.data").joinpath("grammar.txt").read_text("utf-8")
    return SyntheticGrammar.from_text(text)


class _TooLong(Exception):
    pass


def _sample_tree(grammar, symbol, rng, budget):
    """Sample a derivation of ``symbol``; ``budget`` is remaining leaf slots."""
    if grammar._min_yield[symbol] > budget[0]:
        raise _TooLong
    options = grammar._expansions[symbol]
    choice = options[int(rng.integers(len(options)))]
    if choice[0] == "lex":
        budget[0] -= 1
        if budget[0] < 0:
            raise _TooLong
        return Tree(label=symbol, token=choice[1])
    left = _sample_tree(grammar, choice[1], rng, budget)
    right = _sample_tree(grammar, choice[2], rng, budget)
    return Tree(label=symbol, children=(left, right))


def sample_corpus(
    grammar: SyntheticGrammar,
    n: int,
    max_len: int,
    rng: np.random.Generator,
) -> DerivedCorpus:
    """Sample ``n`` derivations of at most ``max_len`` tokens (rejection)."""
    if n <= 0:
        raise ValueError("n must be positive")
    sentences, trees = [], []
    rejections = 0
    while len(sentences) < n:
        try:
            tree = _sample_tree(grammar, grammar.start, rng, [max_len])
        except _TooLong:
            rejections += 1
            if rejections >= MAX_SAMPLE_REJECTIONS:
                raise GrammarError(
                    f"grammar generates nothing under max_len={max_len}"
                )
            continue
        rejections = 0
        sentences.append(tuple(tree.leaves()))
        trees.append(tree)
    return DerivedCorpus(sentences, trees)


def recognize(grammar: SyntheticGrammar, tokens: Sequence[str]) -> bool:
    """CYK membership for ``tokens``; unknown tokens are rejected outright."""
    n = len(tokens)
    if n == 0:
        return False
    lex = grammar._lex_index
    pairs = grammar._pair_index
    cells = {}
    for i, tok in enumerate(tokens):
        nts = lex.get(tok)
        if nts is None:
            return False
        cells[(i, i + 1)] = nts
    for length in range(2, n + 1):
        for lo in range(n - length + 1):
            hi = lo + length
            acc = set()
            for k in range(lo + 1, hi):
                left = cells[(lo, k)]
                right = cells[(k, hi)]
                if not left or not right:
                    continue
                for b in left:
                    for c in right:
                        found = pairs.get((b, c))
                        if found:
                            acc.update(found)
            cells[(lo, hi)] = frozenset(acc)
    return grammar.start in cells[(0, n)]


def oracle_judge(grammar: SyntheticGrammar, tokens: Sequence[str]) -> float:
    """1.0 iff the sentence is in the grammar's language, else 0.0."""
    return 1.0 if recognize(grammar, tokens) else 0.0


class OracleScorer(GrammaticalityScorer):
    """Grammaticality scorer backed by exact CYK membership."""

    trainable = False
    deterministic = True

    def __init__(self, grammar: SyntheticGrammar):
        self.grammar = grammar

    def score_sentences(self, batch):
        return [oracle_judge(self.grammar, toks) for toks in batch]
