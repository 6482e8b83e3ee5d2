"""Sentences, spans, constituency trees, bracketed I/O, and eval normalization.

A sentence is a tuple of non-empty whitespace-free tokens. A span is a
half-open ``(lo, hi)`` token interval, 0-based. Trees are immutable after
construction: a leaf holds exactly one token (plus an optional POS label),
an internal node holds an optional category label and one or more children.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Sequence

Span = tuple[int, int]

QUOTE_TOKENS = frozenset({"``", "''", '"', "`", "'"})
SENTENCE_FINAL_PUNCT = frozenset({".", "!", "?"})

# POS tags the PTB assigns to punctuation, plus the escaped bracket spellings.
PTB_PUNCT_TAGS = frozenset(
    {"#", "$", "''", "``", ",", ".", ":", "(", ")", "-LRB-", "-RRB-"}
)

# Surface forms used to spot punctuation in trees whose leaves carry no tags.
DEFAULT_PUNCT_TOKENS = frozenset(
    {
        ",", ".", "!", "?", ";", ":", "...", "--", "-",
        "``", "''", '"', "`", "'",
        "(", ")", "-lrb-", "-rrb-",
    }
)


class PreprocessError(ValueError):
    pass


class BracketParseError(ValueError):
    """Malformed bracketed tree; ``column`` is the 1-based offender position."""

    def __init__(self, message: str, column: int):
        super().__init__(f"{message} (column {column})")
        self.column = column


def preprocess(raw_tokens: Sequence[str]) -> tuple[str, ...]:
    """Lowercase, drop quotation marks and one sentence-final . ! or ?

    Internal punctuation (commas, colons, abbreviation periods) is kept.
    """
    if not raw_tokens:
        raise PreprocessError("empty token sequence")
    for tok in raw_tokens:
        if not tok or any(ch.isspace() for ch in tok):
            raise PreprocessError(f"bad token {tok!r}: empty or contains whitespace")
    toks = [t.lower() for t in raw_tokens if t not in QUOTE_TOKENS]
    if toks and toks[-1] in SENTENCE_FINAL_PUNCT:
        toks.pop()
    if not toks:
        raise PreprocessError("sentence vanished under preprocessing")
    return tuple(toks)


class Tree:
    """Constituency tree node.

    Leaves have ``token`` set and no children; internal nodes have children
    and no token. ``label`` is the category (POS for leaves) or None for
    induced/unlabeled nodes.
    """

    __slots__ = ("label", "children", "token")

    def __init__(self, label=None, children=(), token=None):
        children = tuple(children)
        if (token is None) == (len(children) == 0):
            raise ValueError("a node is either a leaf with a token or has children")
        if token is not None and children:
            raise ValueError("leaf cannot have children")
        self.label = label
        self.children = children
        self.token = token

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    def __len__(self) -> int:
        if self.is_leaf:
            return 1
        return sum(len(c) for c in self.children)

    def leaves(self) -> list[str]:
        if self.is_leaf:
            return [self.token]
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def leaf_labels(self) -> list:
        """POS labels of the leaves, left to right (None where absent)."""
        if self.is_leaf:
            return [self.label]
        out = []
        for c in self.children:
            out.extend(c.leaf_labels())
        return out

    def spans(self) -> list[Span]:
        """Spans of all internal nodes, preorder."""
        return [(lo, hi) for lo, hi, _ in self.labeled_spans()]

    def labeled_spans(self) -> list[tuple[int, int, object]]:
        """(lo, hi, label) for all internal nodes, preorder."""
        out = []

        def walk(node, offset):
            if node.is_leaf:
                return offset + 1
            end = offset
            for c in node.children:
                end = walk(c, end)
            out.append((offset, end, node.label))
            return end

        walk(self, 0)
        # preorder: parents before children
        out.sort(key=lambda t: (t[0], -t[1]))
        return out

    def span_set(self) -> frozenset:
        return frozenset(self.spans())

    def nontrivial_span_set(self) -> frozenset:
        """Internal-node spans with length >= 2, excluding the full span."""
        n = len(self)
        return frozenset(
            (lo, hi) for lo, hi in self.spans() if hi - lo >= 2 and hi - lo < n
        )

    def is_binary(self) -> bool:
        if self.is_leaf:
            return True
        return len(self.children) == 2 and all(c.is_binary() for c in self.children)

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return (
            self.label == other.label
            and self.token == other.token
            and self.children == other.children
        )

    def __hash__(self):
        return hash((self.label, self.token, self.children))

    def __repr__(self):
        return f"Tree({render_bracketed(self)!r})"


def _looks_labeled(text: str) -> bool:
    # PTB-style labels reveal themselves as a bare symbol followed by an
    # opening paren; a lone "(X tok)" group is read as a preterminal too.
    if re.search(r"[^\s()]\s*\(", text):
        return True
    return bool(re.fullmatch(r"\s*\(\s*[^\s()]+\s+[^\s()]+\s*\)\s*", text))


def parse_bracketed(text: str) -> Tree:
    """Parse one bracketed tree; a label-less unary root wrapper is dropped.

    Trees containing any ``symbol (`` sequence are read with PTB label
    conventions, so a bare token directly preceding a subtree is taken as a
    node label; fully bare trees like ``((a b))`` read every symbol as a
    token.
    """
    trees = parse_bracketed_many(text)
    if len(trees) != 1:
        raise BracketParseError(f"expected one tree, found {len(trees)}", 1)
    return trees[0]


def parse_bracketed_many(text: str) -> list[Tree]:
    """Parse a string holding one or more bracketed trees."""
    labeled = _looks_labeled(text)
    pos = 0
    n = len(text)
    trees = []

    def err(msg, at):
        raise BracketParseError(msg, at + 1)

    def skip_ws():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def read_symbol():
        nonlocal pos
        start = pos
        while pos < n and not text[pos].isspace() and text[pos] not in "()":
            pos += 1
        return text[start:pos]

    def parse_node():
        nonlocal pos
        if pos >= n or text[pos] != "(":
            err("expected '('", pos)
        open_at = pos
        pos += 1
        skip_ws()
        label = None
        if labeled and pos < n and text[pos] not in "()":
            label = read_symbol()
        elements = []  # mix of Tree children and bare-token strings
        while True:
            skip_ws()
            if pos >= n:
                err("unbalanced parentheses: missing ')'", pos)
            ch = text[pos]
            if ch == ")":
                pos += 1
                break
            if ch == "(":
                elements.append(parse_node())
            else:
                elements.append(read_symbol())
        if label is not None and len(elements) == 1 and isinstance(elements[0], str):
            return Tree(label=label, token=elements[0])  # preterminal
        if not elements:
            err("empty node", open_at)
        children = [
            e if isinstance(e, Tree) else Tree(token=e) for e in elements
        ]
        return Tree(label=label, children=children)

    while True:
        skip_ws()
        if pos >= n:
            break
        root = parse_node()
        # conventional PTB outer wrapper: "( (S ...) )"
        if (
            root.label is None
            and not root.is_leaf
            and len(root.children) == 1
            and not root.children[0].is_leaf
        ):
            root = root.children[0]
        trees.append(root)
    if not trees:
        raise BracketParseError("empty input", 1)
    return trees


def render_bracketed(tree: Tree) -> str:
    """One-line bracketed form; ``parse_bracketed`` round-trips the result."""

    def render(node):
        if node.is_leaf:
            if node.label is None:
                return node.token
            return f"({node.label} {node.token})"
        inner = " ".join(render(c) for c in node.children)
        if node.label is None:
            return f"({inner})"
        return f"({node.label} {inner})"

    body = render(tree)
    if tree.label is None:
        # wrap fully unlabeled trees so bare tokens never read as labels
        return f"({body})"
    return body


def strip_punctuation(
    tree: Tree,
    punct_tags: frozenset = PTB_PUNCT_TAGS,
    punct_tokens: frozenset = DEFAULT_PUNCT_TOKENS,
):
    """Drop punctuation leaves (by POS tag when present, else by token).

    Returns None when nothing remains. Remaining leaves renumber implicitly.
    """

    def keep(leaf):
        if leaf.label is not None:
            return leaf.label not in punct_tags
        return leaf.token.lower() not in punct_tokens

    def rec(node):
        if node.is_leaf:
            return node if keep(node) else None
        kids = [k for k in (rec(c) for c in node.children) if k is not None]
        if not kids:
            return None
        return Tree(label=node.label, children=kids)

    return rec(tree)


def normalize_for_eval(
    tree: Tree,
    punct_tags: frozenset = PTB_PUNCT_TAGS,
    punct_tokens: frozenset = DEFAULT_PUNCT_TOKENS,
) -> frozenset:
    """Nontrivial span set after punctuation stripping and unary collapse.

    Unary chains collapse by set semantics (duplicate spans merge); spans of
    length <= 1 and the full-sentence span are dropped. An all-punctuation
    tree yields the empty set.
    """
    stripped = strip_punctuation(tree, punct_tags, punct_tokens)
    if stripped is None:
        return frozenset()
    return stripped.nontrivial_span_set()


def binarize_right(tree: Tree) -> Tree:
    """Right-branching binarization; unary chains collapse.

    Every multi-token span of the input survives, and every internal node of
    the output has exactly two children. Introduced nodes are unlabeled.
    """
    if tree.is_leaf:
        return tree
    kids = [binarize_right(c) for c in tree.children]
    if len(kids) == 1:
        return kids[0]
    acc = kids[-1]
    for c in reversed(kids[1:-1]):
        acc = Tree(label=None, children=(c, acc))
    return Tree(label=tree.label, children=(kids[0], acc))


def read_corpus(path) -> list[tuple[str, ...]]:
    """Read a one-sentence-per-line, space-tokenized corpus file."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            toks = tuple(line.split())
            if toks:
                sentences.append(toks)
    return sentences


def write_corpus(path, sentences: Iterable[Sequence[str]]):
    with open(path, "w", encoding="utf-8") as fh:
        for toks in sentences:
            fh.write(" ".join(toks) + "\n")


def read_tree_file(path) -> list[Tree]:
    """Read bracketed trees; handles one-per-line and multi-line files."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_bracketed_many(text)


def write_tree_file(path, trees: Iterable[Tree]):
    with open(path, "w", encoding="utf-8") as fh:
        for t in trees:
            fh.write(render_bracketed(t) + "\n")
