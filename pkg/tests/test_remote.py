import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from ctkit.remote import ProtocolError, RemoteScorer, ScorerTransportError
from ctkit.scorer import LabeledExample


def stub_probability(tokens):
    """Deterministic toy judgment: long sentences look less grammatical."""
    return round(1.0 / (1.0 + 0.1 * len(tokens)), 6)


class StubHandler(BaseHTTPRequestHandler):
    """Minimal scorer service speaking the wire format, with failure knobs."""

    behavior = {"fail_next": 0, "bad_length": False, "max_batch": 8}
    train_calls = []

    def log_message(self, *args):
        pass

    def _send(self, code, payload):
        body = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/v1/info":
            self._send(
                200,
                {"model": "stub", "max_batch": self.behavior["max_batch"], "version": "1"},
            )
        else:
            self._send(404, {"error": "not found"})

    def do_POST(self):
        if self.behavior["fail_next"] > 0:
            self.behavior["fail_next"] -= 1
            self._send(503, {"error": "warming up"})
            return
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        if self.path == "/v1/score":
            sentences = payload["sentences"]
            if len(sentences) > self.behavior["max_batch"]:
                self._send(413, {"error": "batch too large"})
                return
            probs = [stub_probability(s) for s in sentences]
            if self.behavior["bad_length"]:
                probs = probs[:-1]
            self._send(200, {"probabilities": probs})
        elif self.path == "/v1/train":
            self.train_calls.append(payload)
            self._send(200, {"loss": 0.5, "steps": 1})
        else:
            self._send(404, {"error": "not found"})


@pytest.fixture()
def stub_server():
    StubHandler.behavior = {"fail_next": 0, "bad_length": False, "max_batch": 8}
    StubHandler.train_calls = []
    server = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()
    thread.join(timeout=5)


def test_info(stub_server):
    scorer = RemoteScorer(stub_server)
    info = scorer.info()
    assert info["model"] == "stub"
    assert scorer.max_batch == 8


def test_score_order_and_length_fuzz(stub_server):
    scorer = RemoteScorer(stub_server)
    rng = np.random.default_rng(0)
    for _ in range(10):
        batch = [
            tuple(rng.choice(list("abcdef"), size=int(rng.integers(1, 9))))
            for _ in range(int(rng.integers(1, 30)))
        ]
        probs = scorer.score_sentences(batch)
        assert len(probs) == len(batch)
        assert probs == [stub_probability(t) for t in batch]
        assert all(0.0 <= p <= 1.0 for p in probs)


def test_chunks_respect_max_batch(stub_server):
    scorer = RemoteScorer(stub_server)
    batch = [("a",)] * 30  # only accepted if chunked to <= 8 per request
    probs = scorer.score_sentences(batch)
    assert probs == [stub_probability(("a",))] * 30


def test_retry_then_success(stub_server):
    StubHandler.behavior["fail_next"] = 2
    scorer = RemoteScorer(stub_server, retries=3, backoff=0.01)
    assert scorer.score_sentences([("a", "b")]) == [stub_probability(("a", "b"))]


def test_transport_error_carries_batch():
    scorer = RemoteScorer("http://127.0.0.1:1", retries=1, backoff=0.01, timeout=0.5)
    with pytest.raises(ScorerTransportError) as exc:
        scorer.score_sentences([("a", "b"), ("c",)])
    assert exc.value.batch == [("a", "b"), ("c",)]


def test_protocol_error_on_bad_length(stub_server):
    StubHandler.behavior["bad_length"] = True
    scorer = RemoteScorer(stub_server)
    with pytest.raises(ProtocolError, match="length"):
        scorer.score_sentences([("a",), ("b",)])


def test_train_batch(stub_server):
    scorer = RemoteScorer(stub_server)
    examples = [LabeledExample(("a", "b"), 1), LabeledExample(("b", "a"), 0)]
    loss = scorer.train_batch(examples, lr=3e-5)
    assert loss == 0.5
    sent = StubHandler.train_calls[-1]
    assert sent["learning_rate"] == 3e-5
    assert sent["examples"] == [
        {"tokens": ["a", "b"], "label": 1},
        {"tokens": ["b", "a"], "label": 0},
    ]
