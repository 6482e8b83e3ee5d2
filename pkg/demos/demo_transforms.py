"""Walk through the eight constituency tests on one sentence.

Each test rewrites the sentence around a candidate span; a grammaticality
judge then decides whether the rewrite still sounds like a sentence. Spans
that survive many tests are probably constituents.
"""

from ctkit import ALL_TESTS, apply_test, enumerate_tests, preprocess

raw = "By midday , the London market was in full retreat .".split()
sentence = preprocess(raw)
print("sentence:", " ".join(sentence))

span = (3, 6)  # "the london market"
print("span:", " ".join(sentence[span[0]:span[1]]), span)
print()

for result in enumerate_tests(sentence, span):
    print(f"{result.test:15s} {' '.join(result.tokens)}")

print()
print("A span the tests should reject, for contrast:")
bad = (2, 5)  # ", the london" straddles the NP boundary
for test in ALL_TESTS[:4]:
    out = apply_test(test, sentence, bad)
    print(f"{test:15s} {' '.join(out.tokens)}")
