"""Wire-protocol conformance: schemas, shapes, status codes, determinism."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from scorer_service.app import create_app
from scorer_service.model import ScoringModel


@pytest.fixture(scope="module")
def model():
    return ScoringModel(seed=0)


@pytest.fixture()
def client(model):
    return TestClient(create_app(model=model, max_batch=64))


def test_info(client):
    reply = client.get("/v1/info")
    assert reply.status_code == 200
    payload = reply.json()
    assert set(payload) == {"model", "max_batch", "version"}
    assert payload["max_batch"] == 64


def test_score_shape_order_and_range(client):
    rng = np.random.default_rng(0)
    for _ in range(10):
        batch = [
            [str(t) for t in rng.choice(list("abcdefgh"), size=int(rng.integers(1, 12)))]
            for _ in range(int(rng.integers(1, 30)))
        ]
        reply = client.post("/v1/score", json={"sentences": batch})
        assert reply.status_code == 200
        probs = reply.json()["probabilities"]
        assert len(probs) == len(batch)
        assert all(0.0 <= p <= 1.0 for p in probs)


def test_duplicate_sentences_judge_identically(client):
    batch = [["the", "dog", "ran"]] * 3 + [["ran", "dog", "the"]]
    probs = client.post("/v1/score", json={"sentences": batch}).json()["probabilities"]
    assert probs[0] == probs[1] == probs[2]
    assert probs[3] != probs[0]  # order-sensitive model


def test_score_is_deterministic(client):
    batch = [["a", "b", "c"], ["d", "e"]]
    first = client.post("/v1/score", json={"sentences": batch}).json()["probabilities"]
    second = client.post("/v1/score", json={"sentences": batch}).json()["probabilities"]
    assert first == second


def test_malformed_requests_get_400(client):
    assert client.post("/v1/score", json={"sentences": []}).status_code == 400
    assert client.post("/v1/score", json={"nope": 1}).status_code == 400
    assert client.post("/v1/score", json={"sentences": "hello"}).status_code == 400
    assert (
        client.post("/v1/train", json={"examples": [{"tokens": ["a"], "label": 7}]})
        .status_code
        == 400
    )


def test_oversized_batch_gets_413(client):
    batch = [["a"]] * 65
    assert client.post("/v1/score", json={"sentences": batch}).status_code == 413


def test_model_not_loaded_gets_503():
    client = TestClient(create_app(model=None))
    assert client.post("/v1/score", json={"sentences": [["a"]]}).status_code == 503
    assert (
        client.post("/v1/train", json={"examples": [{"tokens": ["a"], "label": 1}]})
        .status_code
        == 503
    )


def test_train_shape_and_steps(client):
    examples = [{"tokens": ["a", "b"], "label": i % 2} for i in range(130)]
    reply = client.post("/v1/train", json={"examples": examples, "learning_rate": 0.0})
    assert reply.status_code == 200
    payload = reply.json()
    assert payload["steps"] == 3  # ceil(130 / 64)
    assert np.isfinite(payload["loss"])


def test_zero_learning_rate_leaves_probe_scores_bit_identical(client):
    probe = [["the", "cat", "sat"], ["sat", "cat", "the"], ["a", "b", "c", "d"]]
    before = client.post("/v1/score", json={"sentences": probe}).json()["probabilities"]
    examples = [{"tokens": ["x", "y", "z"], "label": 1}] * 64
    reply = client.post("/v1/train", json={"examples": examples, "learning_rate": 0.0})
    assert reply.status_code == 200
    after = client.post("/v1/score", json={"sentences": probe}).json()["probabilities"]
    assert after == before


def test_train_conflict_gets_409(model):
    client = TestClient(create_app(model=model, max_batch=64))
    assert model.train_lock.acquire(blocking=False)
    try:
        reply = client.post(
            "/v1/train", json={"examples": [{"tokens": ["a"], "label": 1}]}
        )
        assert reply.status_code == 409
    finally:
        model.train_lock.release()
