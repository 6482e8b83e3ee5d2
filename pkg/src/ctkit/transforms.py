"""The eight constituency-test transformations.

Each test rewrites a sentence around a candidate span. Writing the sentence
as ``A B C`` with ``B = tokens[lo:hi]``, the templates are:

    cleft_is        it is B that A C
    cleft_was       it was B that A C
    coordination    A B and B C
    sub_it          A it C
    sub_ones        A ones C
    sub_did_so      A did so C
    front_movement  B , A C
    end_movement    A C B

All functions are pure; templates emit lowercase tokens because the
preprocessing step lowercases everything upstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from collections.abc import Sequence

from .trees import Span

CLEFT_IS = "cleft_is"
CLEFT_WAS = "cleft_was"
COORDINATION = "coordination"
SUB_IT = "sub_it"
SUB_ONES = "sub_ones"
SUB_DID_SO = "sub_did_so"
FRONT_MOVEMENT = "front_movement"
END_MOVEMENT = "end_movement"

ALL_TESTS = (
    CLEFT_IS,
    CLEFT_WAS,
    COORDINATION,
    SUB_IT,
    SUB_ONES,
    SUB_DID_SO,
    FRONT_MOVEMENT,
    END_MOVEMENT,
)


class SpanError(ValueError):
    pass


class LengthCapExceeded(RuntimeError):
    """Raised when a transformed sentence would exceed the configured cap."""


@dataclass(frozen=True)
class TransformedSentence:
    tokens: tuple[str, ...]
    source_span: Span
    test: str

    def text(self) -> str:
        return " ".join(self.tokens)


def _cleft_is(a, b, c):
    return ["it", "is", *b, "that", *a, *c]


def _cleft_was(a, b, c):
    return ["it", "was", *b, "that", *a, *c]


def _coordination(a, b, c):
    return [*a, *b, "and", *b, *c]


def _sub_it(a, b, c):
    return [*a, "it", *c]


def _sub_ones(a, b, c):
    return [*a, "ones", *c]


def _sub_did_so(a, b, c):
    return [*a, "did", "so", *c]


def _front_movement(a, b, c):
    return [*b, ",", *a, *c]


def _end_movement(a, b, c):
    return [*a, *c, *b]


_TEMPLATES = {
    CLEFT_IS: _cleft_is,
    CLEFT_WAS: _cleft_was,
    COORDINATION: _coordination,
    SUB_IT: _sub_it,
    SUB_ONES: _sub_ones,
    SUB_DID_SO: _sub_did_so,
    FRONT_MOVEMENT: _front_movement,
    END_MOVEMENT: _end_movement,
}


def apply_test(
    test: str,
    tokens: Sequence[str],
    span: Span,
    max_len: int | None = None,
) -> TransformedSentence:
    """Apply one constituency test to ``tokens`` at ``span``."""
    if test not in _TEMPLATES:
        raise ValueError(f"unknown constituency test {test!r}")
    lo, hi = span
    n = len(tokens)
    if not (0 <= lo < hi <= n):
        raise SpanError(f"invalid span ({lo}, {hi}) for sentence of length {n}")
    a, b, c = list(tokens[:lo]), list(tokens[lo:hi]), list(tokens[hi:])
    out = _TEMPLATES[test](a, b, c)
    if max_len is not None and len(out) > max_len:
        raise LengthCapExceeded(
            f"test skipped: length cap ({len(out)} > {max_len})"
        )
    return TransformedSentence(tuple(out), (lo, hi), test)


def enumerate_tests(
    tokens: Sequence[str], span: Span, max_len: int | None = None
) -> list[TransformedSentence]:
    """All eight transformed sentences for ``span``, in fixed test order."""
    return [apply_test(t, tokens, span, max_len=max_len) for t in ALL_TESTS]
