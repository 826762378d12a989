"""Text embeddings and cosine similarity.

Two embedders share one interface: a remote HTTP service (the production
path) and a seeded hashing embedder that keeps every test hermetic. The
hashing scheme: lowercase, split on non-alphanumerics, hash each token into
one of ``dim`` buckets with a seed-keyed hash, weight by term frequency,
L2-normalize. Empty text embeds to the zero vector, which is flagged and
excluded from clustering.
"""

from __future__ import annotations

import hashlib
import json
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field

import numpy as np

from .errors import EmbeddingError

DEFAULT_DIM = 384

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return vec
    return vec / norm


def is_zero(vec: np.ndarray) -> bool:
    return not np.any(vec)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two non-zero vectors, in [-1, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise EmbeddingError("cosine similarity undefined for the zero vector")
    return float(np.dot(a, b) / (norm_a * norm_b))


def similarity_matrix(vectors: np.ndarray) -> np.ndarray:
    """Pairwise cosine matrix; zero rows produce zero similarity entries."""
    vectors = np.asarray(vectors, dtype=float)
    norms = np.linalg.norm(vectors, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = vectors / safe[:, None]
    return unit @ unit.T


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass
class HashingEmbedder:
    """Deterministic term-frequency hashing embedder."""

    dim: int = DEFAULT_DIM
    seed: int = 0
    _buckets: dict[str, int] = field(default_factory=dict, repr=False)

    kind = "fallback_hash"

    def bucket(self, token: str) -> int:
        cached = self._buckets.get(token)
        if cached is None:
            digest = hashlib.sha256(f"{self.seed}|{token}".encode("utf-8")).digest()
            cached = int.from_bytes(digest[:8], "big") % self.dim
            self._buckets[token] = cached
        return cached

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=float)
        for token in tokenize(text):
            vec[self.bucket(token)] += 1.0
        return l2_normalize(vec)

    def embed_many(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=float)
        for i, text in enumerate(texts):
            out[i] = self.embed(text)
        return out

    def describe(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "seed": self.seed}


@dataclass(frozen=True)
class EmbeddingEndpointConfig:
    base_url: str
    model_id: str
    timeout_ms: int = 30000
    max_retries: int = 2


@dataclass
class RemoteEmbedder:
    """Client for an HTTP embedding service.

    Wire format: POST {"model": ..., "input": [text, ...]} and read
    {"data": [{"embedding": [...]}, ...]} back, one entry per input.
    """

    endpoint: EmbeddingEndpointConfig
    kind = "remote"

    def embed_many(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, DEFAULT_DIM), dtype=float)
        body = json.dumps({"model": self.endpoint.model_id, "input": list(texts)}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint.base_url,
            data=body,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        last_error: Exception | None = None
        for _ in range(self.endpoint.max_retries + 1):
            try:
                with urllib.request.urlopen(request, timeout=self.endpoint.timeout_ms / 1000.0) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
                rows = [entry["embedding"] for entry in payload["data"]]
                if len(rows) != len(texts):
                    raise EmbeddingError(
                        f"embedding service returned {len(rows)} vectors for {len(texts)} inputs"
                    )
                matrix = np.asarray(rows, dtype=float)
                return np.vstack([l2_normalize(row) for row in matrix])
            except (urllib.error.URLError, json.JSONDecodeError, KeyError, TypeError) as exc:
                last_error = exc
        raise EmbeddingError(f"embedding endpoint failed after retries: {last_error}")

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def describe(self) -> dict:
        return {"kind": self.kind, "model": self.endpoint.model_id}
