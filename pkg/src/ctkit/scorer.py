"""Grammaticality scorers: map a token sequence to P(grammatical) in [0, 1].

Backends share one contract: ``score_sentences`` returns one probability per
input, order preserved. ``NativeScorer`` is the trainable in-process model,
a logistic regression over hashed n-gram features with an Adam optimizer.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

MODEL_FORMAT = "ctkit-scorer-v1"
_HASH_KEY = b"ctkit.feats.v1"  # fixed published key: hashes are portable
_BOS = "<s>"
_EOS = "</s>"

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-6


@dataclass(frozen=True)
class LabeledExample:
    """A sentence with a 0/1 grammaticality label and its provenance.

    Provenance is ``"real"`` or a corruption kind for real/fake data, and a
    ``{"test": ..., "span": [lo, hi]}`` mapping for refinement data.
    """

    tokens: tuple[str, ...]
    label: int
    provenance: object = "real"

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


class ScorerError(RuntimeError):
    pass


class TrainingDiverged(ScorerError):
    pass


class ModelFormatError(ScorerError):
    pass


class GrammaticalityScorer:
    """Interface; see module docstring for the scoring contract."""

    trainable = False
    deterministic = True

    def score_sentences(self, batch: Sequence[Sequence[str]]) -> list[float]:
        raise NotImplementedError

    def score_tokens(self, tokens: Sequence[str]) -> float:
        return self.score_sentences([tokens])[0]


class ConstantScorer(GrammaticalityScorer):
    """Returns a fixed probability for every sentence; useful for wiring."""

    def __init__(self, value: float):
        if not 0.0 <= value <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        self.value = float(value)

    def score_sentences(self, batch):
        if not batch:
            return []
        return [self.value] * len(batch)


def _hash_feature(feat: str, dims: int) -> int:
    digest = hashlib.blake2b(feat.encode("utf-8"), digest_size=8, key=_HASH_KEY)
    return int.from_bytes(digest.digest(), "big") % dims


def _length_bucket(n: int) -> int:
    if n <= 10:
        return n
    if n <= 20:
        return 10 + 5 * ((n - 6) // 5)  # 15 or 20
    return 25


def featurize(tokens: Sequence[str], dims: int) -> np.ndarray:
    """Hashed indicator features: uni/bi/trigrams with boundaries + length.

    Returns sorted unique indices in [0, dims). Deterministic across runs
    and platforms (fixed hash key).
    """
    if not tokens:
        raise ValueError("cannot featurize an empty sentence")
    padded = (_BOS, *tokens, _EOS)
    feats = [f"u:{t}" for t in tokens]
    feats.extend(f"b:{padded[i]}\x1f{padded[i + 1]}" for i in range(len(padded) - 1))
    feats.extend(
        f"t:{padded[i]}\x1f{padded[i + 1]}\x1f{padded[i + 2]}"
        for i in range(len(padded) - 2)
    )
    feats.append(f"len:{_length_bucket(len(tokens))}")
    idx = {_hash_feature(f, dims) for f in feats}
    return np.fromiter(sorted(idx), dtype=np.int64, count=len(idx))


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


def _bce(z: float, y: int) -> float:
    # stable -[y log p + (1-y) log(1-p)] with p = sigmoid(z)
    return max(z, 0.0) - y * z + np.log1p(np.exp(-abs(z)))


class NativeScorer(GrammaticalityScorer):
    """Trainable logistic regression over hashed features.

    ``dims`` must be a power of two. The optimizer state (Adam moments and
    step counter) is part of the model so training can resume after a
    save/load round trip.
    """

    trainable = True
    deterministic = True

    def __init__(self, dims: int = 2 ** 20):
        if dims <= 0 or dims & (dims - 1):
            raise ValueError("dims must be a positive power of two")
        self.dims = dims
        self.w = np.zeros(dims, dtype=np.float64)
        self.b = 0.0
        self.m_w = np.zeros(dims, dtype=np.float64)
        self.v_w = np.zeros(dims, dtype=np.float64)
        self.m_b = 0.0
        self.v_b = 0.0
        self.step = 0

    def features(self, tokens) -> np.ndarray:
        return featurize(tokens, self.dims)

    def _logit(self, tokens) -> float:
        return float(self.w[self.features(tokens)].sum() + self.b)

    def score_tokens(self, tokens) -> float:
        return _sigmoid(self._logit(tokens))

    def score_sentences(self, batch):
        return [self.score_tokens(toks) for toks in batch]

    def loss_and_grad(self, batch: Sequence[LabeledExample]):
        """Mean binary cross-entropy and its gradient over a batch."""
        if not batch:
            raise ValueError("empty batch")
        grad_w = np.zeros(self.dims, dtype=np.float64)
        grad_b = 0.0
        loss = 0.0
        scale = 1.0 / len(batch)
        for ex in batch:
            idx = self.features(ex.tokens)
            z = float(self.w[idx].sum() + self.b)
            p = _sigmoid(z)
            err = (p - ex.label) * scale
            np.add.at(grad_w, idx, err)
            grad_b += err
            loss += _bce(z, ex.label) * scale
        return loss, grad_w, grad_b

    def grad_step(self, batch: Sequence[LabeledExample], lr: float) -> float:
        """One Adam update on the batch; returns the pre-update mean loss."""
        if lr <= 0:
            raise ValueError("lr must be positive")
        loss, grad_w, grad_b = self.loss_and_grad(batch)
        if not np.isfinite(loss):
            raise TrainingDiverged("diverged: non-finite loss")
        self.step += 1
        t = self.step
        bc1 = 1.0 - ADAM_BETA1 ** t
        bc2 = 1.0 - ADAM_BETA2 ** t
        self.m_w *= ADAM_BETA1
        self.m_w += (1.0 - ADAM_BETA1) * grad_w
        self.v_w *= ADAM_BETA2
        self.v_w += (1.0 - ADAM_BETA2) * grad_w ** 2
        self.w -= lr * (self.m_w / bc1) / (np.sqrt(self.v_w / bc2) + ADAM_EPS)
        self.m_b = ADAM_BETA1 * self.m_b + (1.0 - ADAM_BETA1) * grad_b
        self.v_b = ADAM_BETA2 * self.v_b + (1.0 - ADAM_BETA2) * grad_b ** 2
        self.b -= lr * (self.m_b / bc1) / (np.sqrt(self.v_b / bc2) + ADAM_EPS)
        return float(loss)

    def train_batch(self, batch, lr):
        return self.grad_step(batch, lr)

    # -- persistence -----------------------------------------------------

    def save_bytes(self, fmt: str = "npz") -> bytes:
        if fmt == "npz":
            buf = io.BytesIO()
            np.savez(
                buf,
                format=np.array(MODEL_FORMAT),
                dims=np.array(self.dims),
                w=self.w,
                b=np.array(self.b),
                m_w=self.m_w,
                v_w=self.v_w,
                m_b=np.array(self.m_b),
                v_b=np.array(self.v_b),
                step=np.array(self.step),
            )
            return buf.getvalue()
        if fmt == "json":
            payload = {
                "format": MODEL_FORMAT,
                "dims": self.dims,
                "w": self.w.tolist(),
                "b": self.b,
                "m_w": self.m_w.tolist(),
                "v_w": self.v_w.tolist(),
                "m_b": self.m_b,
                "v_b": self.v_b,
                "step": self.step,
            }
            return json.dumps(payload).encode("utf-8")
        raise ValueError(f"unknown model format {fmt!r}")

    @classmethod
    def load_bytes(cls, data: bytes) -> "NativeScorer":
        try:
            if data[:1] == b"{":
                payload = json.loads(data.decode("utf-8"))
                if payload.get("format") != MODEL_FORMAT:
                    raise ModelFormatError(
                        f"unsupported model format {payload.get('format')!r}"
                    )
                model = cls(dims=int(payload["dims"]))
                model.w = np.asarray(payload["w"], dtype=np.float64)
                model.b = float(payload["b"])
                model.m_w = np.asarray(payload["m_w"], dtype=np.float64)
                model.v_w = np.asarray(payload["v_w"], dtype=np.float64)
                model.m_b = float(payload["m_b"])
                model.v_b = float(payload["v_b"])
                model.step = int(payload["step"])
            else:
                with np.load(io.BytesIO(data), allow_pickle=False) as arc:
                    if str(arc["format"]) != MODEL_FORMAT:
                        raise ModelFormatError(
                            f"unsupported model format {arc['format']!r}"
                        )
                    model = cls(dims=int(arc["dims"]))
                    model.w = arc["w"].astype(np.float64)
                    model.b = float(arc["b"])
                    model.m_w = arc["m_w"].astype(np.float64)
                    model.v_w = arc["v_w"].astype(np.float64)
                    model.m_b = float(arc["m_b"])
                    model.v_b = float(arc["v_b"])
                    model.step = int(arc["step"])
        except ModelFormatError:
            raise
        except Exception as exc:
            raise ModelFormatError(f"cannot load model: {exc}") from exc
        if model.w.shape != (model.dims,):
            raise ModelFormatError("weight vector shape mismatch")
        return model

    def save(self, path, fmt: str | None = None):
        if fmt is None:
            fmt = "json" if str(path).endswith(".json") else "npz"
        with open(path, "wb") as fh:
            fh.write(self.save_bytes(fmt))

    @classmethod
    def load(cls, path) -> "NativeScorer":
        with open(path, "rb") as fh:
            return cls.load_bytes(fh.read())


class JudgmentCache:
    """Bounded FIFO cache from transformed-sentence text to probability.

    Only valid while the scorer's weights are fixed; clear after training.
    """

    def __init__(self, capacity: int = 1_000_000):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._store: dict[str, float] = {}
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self._store)

    def get(self, key: str):
        val = self._store.get(key)
        if val is None:
            self.misses += 1
        else:
            self.hits += 1
        return val

    def put(self, key: str, value: float):
        if key not in self._store and len(self._store) >= self.capacity:
            self._store.pop(next(iter(self._store)))
        self._store[key] = value

    def clear(self):
        self._store.clear()
