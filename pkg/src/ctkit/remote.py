"""HTTP client for a remote grammaticality scorer.

Wire format (JSON over HTTP):

    GET  /v1/info   -> {"model": str, "max_batch": int, "version": str}
    POST /v1/score  {"sentences": [[tok, ...], ...]}
                    -> {"probabilities": [float, ...]}
    POST /v1/train  {"examples": [{"tokens": [...], "label": 0|1}, ...],
                     "learning_rate": float | null}
                    -> {"loss": float, "steps": int}

Responses are validated client-side: a score response must be the same
length and order as the request, with probabilities in [0, 1].
"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence

import requests

from .scorer import GrammaticalityScorer, LabeledExample

log = logging.getLogger(__name__)

DEFAULT_REMOTE_LR = 3e-5


class ScorerTransportError(RuntimeError):
    """Transport failed after retries; carries the batch for re-queueing."""

    def __init__(self, message, batch=None):
        super().__init__(message)
        self.batch = batch


class ProtocolError(RuntimeError):
    """The service answered, but the payload violates the wire contract."""


class RemoteScorer(GrammaticalityScorer):
    trainable = True
    deterministic = True

    def __init__(
        self,
        base_url: str,
        timeout: float = 60.0,
        retries: int = 3,
        backoff: float = 0.5,
        session=None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.session = session or requests.Session()
        self._info = None

    def _request(self, method, path, payload=None, batch=None):
        url = f"{self.base_url}{path}"
        last_error = None
        for attempt in range(self.retries + 1):
            try:
                resp = self.session.request(
                    method, url, json=payload, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
            else:
                if resp.status_code < 500:
                    if resp.status_code >= 400:
                        raise ProtocolError(
                            f"{method} {path} -> {resp.status_code}: {resp.text[:200]}"
                        )
                    try:
                        return resp.json()
                    except ValueError as exc:
                        raise ProtocolError(f"non-JSON response from {path}") from exc
                last_error = RuntimeError(f"HTTP {resp.status_code}")
            if attempt < self.retries:
                time.sleep(self.backoff * (2 ** attempt))
        raise ScorerTransportError(
            f"{method} {url} failed after {self.retries + 1} attempts: {last_error}",
            batch=batch,
        )

    def info(self) -> dict:
        if self._info is None:
            self._info = self._request("GET", "/v1/info")
        return self._info

    @property
    def max_batch(self) -> int:
        return int(self.info().get("max_batch", 256))

    def score_sentences(self, batch):
        batch = [tuple(toks) for toks in batch]
        if not batch:
            return []
        out = []
        try:
            limit = self.max_batch
        except ScorerTransportError as exc:
            raise ScorerTransportError(str(exc), batch=batch) from exc
        for start in range(0, len(batch), limit):
            chunk = batch[start : start + limit]
            payload = {"sentences": [list(t) for t in chunk]}
            reply = self._request("POST", "/v1/score", payload, batch=chunk)
            probs = reply.get("probabilities")
            if not isinstance(probs, list) or len(probs) != len(chunk):
                raise ProtocolError(
                    f"score response length {len(probs) if isinstance(probs, list) else '??'}"
                    f" != request length {len(chunk)}"
                )
            for p in probs:
                p = float(p)
                if not 0.0 <= p <= 1.0:
                    raise ProtocolError(f"probability {p} outside [0, 1]")
                out.append(p)
        return out

    def train_batch(self, examples: Sequence[LabeledExample], lr=None) -> float:
        payload = {
            "examples": [
                {"tokens": list(ex.tokens), "label": ex.label} for ex in examples
            ],
            "learning_rate": lr,
        }
        reply = self._request("POST", "/v1/train", payload, batch=examples)
        loss = reply.get("loss")
        if loss is None:
            raise ProtocolError("train response missing 'loss'")
        return float(loss)
