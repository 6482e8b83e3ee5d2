"""Transformer grammaticality classifier with a hashed open vocabulary.

Tokens hash into a fixed bucket space, so no vocabulary file is needed and
any sentence can be scored. A learned summary token is prepended; its final
representation feeds a linear layer and softmax whose second class is
P(grammatical). Dropout is zero and threading pinned so that scoring is
bit-deterministic for fixed weights.
"""

from __future__ import annotations

import hashlib
import math
import threading
from collections.abc import Sequence

import torch
from torch import nn

_HASH_KEY = b"scorer-service.vocab.v1"

CLS_ID = 0
PAD_ID = 1
_N_SPECIAL = 2

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-6
DEFAULT_LR = 3e-5
TRAIN_CHUNK = 64


def hash_token(token: str, buckets: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=_HASH_KEY)
    return _N_SPECIAL + int.from_bytes(digest.digest(), "big") % buckets


class GrammaticalityClassifier(nn.Module):
    def __init__(
        self,
        vocab_buckets: int = 4096,
        d_model: int = 64,
        heads: int = 4,
        layers: int = 2,
        feedforward: int = 128,
        max_positions: int = 64,
        seed: int = 0,
    ):
        super().__init__()
        torch.manual_seed(seed)
        self.vocab_buckets = vocab_buckets
        self.max_positions = max_positions
        self.embed = nn.Embedding(vocab_buckets + _N_SPECIAL, d_model, padding_idx=PAD_ID)
        self.position = nn.Embedding(max_positions, d_model)
        encoder_layer = nn.TransformerEncoderLayer(
            d_model=d_model,
            nhead=heads,
            dim_feedforward=feedforward,
            dropout=0.0,
            batch_first=True,
        )
        # the nested-tensor fast path computes rows differently depending on
        # batch composition; keep the dense path so duplicates score equally
        self.encoder = nn.TransformerEncoder(
            encoder_layer, num_layers=layers, enable_nested_tensor=False
        )
        self.head = nn.Linear(d_model, 2)

    def encode_batch(self, sentences: Sequence[Sequence[str]]):
        """Pad, hash, and mask a batch; sentences truncate to max positions."""
        width = min(
            self.max_positions, 1 + max(len(s) for s in sentences)
        )
        ids = torch.full((len(sentences), width), PAD_ID, dtype=torch.long)
        mask = torch.ones((len(sentences), width), dtype=torch.bool)  # True = pad
        for row, sent in enumerate(sentences):
            ids[row, 0] = CLS_ID
            mask[row, 0] = False
            for col, tok in enumerate(sent[: width - 1], start=1):
                ids[row, col] = hash_token(tok, self.vocab_buckets)
                mask[row, col] = False
        return ids, mask

    def forward(self, ids, pad_mask):
        positions = torch.arange(ids.shape[1], device=ids.device)
        x = self.embed(ids) + self.position(positions)[None, :, :]
        encoded = self.encoder(x, src_key_padding_mask=pad_mask)
        return self.head(encoded[:, 0, :])  # summary position


class ScoringModel:
    """Thread-safe wrapper owning the classifier and its optimizer.

    Scoring takes a shared snapshot (mutex around forward passes); training
    is serialized by a non-blocking lock so concurrent train calls fail fast.
    """

    def __init__(self, device: str = "cpu", seed: int = 0, **kwargs):
        torch.set_num_threads(1)
        self.device = torch.device(device)
        self.net = GrammaticalityClassifier(seed=seed, **kwargs).to(self.device)
        self.net.eval()
        self.optimizer = torch.optim.Adam(
            self.net.parameters(), lr=DEFAULT_LR, betas=ADAM_BETAS, eps=ADAM_EPS
        )
        self.train_lock = threading.Lock()
        self._weights_lock = threading.Lock()

    @torch.no_grad()
    def score(self, sentences: Sequence[Sequence[str]]) -> list[float]:
        # dedupe within the request: batched CPU matmuls are not bitwise
        # row-stable, and duplicates must come back with equal probabilities
        keys = [tuple(s) for s in sentences]
        unique = list(dict.fromkeys(keys))
        ids, mask = self.net.encode_batch(unique)
        with self._weights_lock:
            logits = self.net(ids.to(self.device), mask.to(self.device))
            probs = torch.softmax(logits, dim=-1)[:, 1].cpu()
        by_key = {key: float(p) for key, p in zip(unique, probs)}
        return [by_key[key] for key in keys]

    def train_steps(self, examples, learning_rate=None) -> tuple[float, int]:
        """ceil(len/64) optimizer steps over fixed-order chunks; mean loss."""
        lr = DEFAULT_LR if learning_rate is None else float(learning_rate)
        for group in self.optimizer.param_groups:
            group["lr"] = lr
        loss_fn = nn.CrossEntropyLoss()
        total_loss = 0.0
        steps = 0
        for start in range(0, len(examples), TRAIN_CHUNK):
            chunk = examples[start : start + TRAIN_CHUNK]
            sentences = [ex["tokens"] for ex in chunk]
            labels = torch.tensor([ex["label"] for ex in chunk], dtype=torch.long)
            ids, mask = self.net.encode_batch(sentences)
            with self._weights_lock:
                self.net.train()
                self.optimizer.zero_grad()
                logits = self.net(ids.to(self.device), mask.to(self.device))
                loss = loss_fn(logits, labels.to(self.device))
                loss.backward()
                self.optimizer.step()
                self.net.eval()
            if not math.isfinite(float(loss)):
                raise RuntimeError("training diverged: non-finite loss")
            total_loss += float(loss) * len(chunk)
            steps += 1
        return total_loss / len(examples), steps

    def save(self, path):
        with self._weights_lock:
            torch.save(
                {
                    "net": self.net.state_dict(),
                    "optimizer": self.optimizer.state_dict(),
                },
                path,
            )

    def load(self, path):
        state = torch.load(path, map_location=self.device, weights_only=True)
        with self._weights_lock:
            self.net.load_state_dict(state["net"])
            self.optimizer.load_state_dict(state["optimizer"])
