"""Integration with the parser toolkit's remote-scorer client over a socket.

Runs the real service under uvicorn and drives it through ctkit's
RemoteScorer: fuzzes the schema/order/length contract, exercises a parse,
and consumes an exported refinement batch.
"""

import socket
import threading
import time

import numpy as np
import pytest

ctkit = pytest.importorskip("ctkit")

import uvicorn  # noqa: E402

from scorer_service.app import create_app  # noqa: E402
from scorer_service.model import ScoringModel  # noqa: E402


@pytest.fixture(scope="module")
def service_url():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    config = uvicorn.Config(
        create_app(model=ScoringModel(seed=3), max_batch=128),
        host="127.0.0.1",
        port=port,
        log_level="error",
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("service failed to start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=10)


def test_client_fuzz_against_real_service(service_url):
    scorer = ctkit.RemoteScorer(service_url)
    info = scorer.info()
    assert info["max_batch"] == 128
    rng = np.random.default_rng(2)
    for _ in range(5):
        batch = [
            tuple(str(t) for t in rng.choice(list("abcdef"), size=int(rng.integers(1, 10))))
            for _ in range(int(rng.integers(1, 200)))  # forces chunking
        ]
        probs = scorer.score_sentences(batch)
        assert len(probs) == len(batch)
        assert all(0.0 <= p <= 1.0 for p in probs)


def test_parse_through_remote_scorer(service_url):
    scorer = ctkit.RemoteScorer(service_url)
    sentences = [("the", "dog", "ran", "fast"), ("it", "fell", "over")]
    trees, _, failures = ctkit.parse_corpus(
        scorer, sentences, cache=ctkit.JudgmentCache()
    )
    assert not failures
    assert [len(t.leaves()) for t in trees] == [4, 3]
    assert all(t.is_binary() for t in trees)


def test_export_consumption_raises_label1_mean(service_url):
    scorer = ctkit.RemoteScorer(service_url)
    grammar = ctkit.default_grammar()
    corpus = ctkit.sample_corpus(grammar, 32, 10, ctkit.make_rng(4))
    trees, _, _ = ctkit.parse_corpus(
        scorer, corpus.sentences, cache=ctkit.JudgmentCache()
    )
    cfg = ctkit.TrainConfig(tests_per_sentence=16)
    examples = ctkit.export_refinement_batch(
        [t for t in trees if t is not None], cfg, ctkit.make_rng(5)
    )
    examples = examples[:512]
    positives = [ex.tokens for ex in examples if ex.label == 1]
    assert positives

    before = float(np.mean(scorer.score_sentences(positives)))
    for _ in range(5):
        scorer.train_batch(examples, lr=1e-3)
    after = float(np.mean(scorer.score_sentences(positives)))
    assert after > before
