"""Text embedders behind one contract: name, dimension, embed(text) -> unit vector.

The reference embedder is a deterministic stand-in for a learned model: a
hashed character-trigram bag in 256 dimensions. It exists so every retrieval
path can be tested exactly, with an external HTTP embedder swappable by
configuration.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache
from typing import Protocol

import numpy as np

from .errors import AdapterUnavailableError, InvalidError

REFERENCE_DIMENSION = 256


class EmbedderContract(Protocol):
    name: str
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


@lru_cache(maxsize=65536)
def _trigram_slot(gram: str) -> int:
    digest = hashlib.blake2s(gram.encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "big") % REFERENCE_DIMENSION


class ReferenceEmbedder:
    """Hashed trigram-bag embedder; deterministic, components non-negative."""

    name = "reference-trigram-256"
    dimension = REFERENCE_DIMENSION

    def embed(self, text: str) -> np.ndarray:
        vector = np.zeros(self.dimension, dtype=np.float64)
        lowered = text.lower()
        if not lowered.strip():
            return vector
        if len(lowered) < 3:
            grams = [lowered]
        else:
            grams = [lowered[i:i + 3] for i in range(len(lowered) - 2)]
        for gram in grams:
            vector[_trigram_slot(gram)] += 1.0
        return vector / np.linalg.norm(vector)


class HttpEmbedder:
    """Delegates to an embedding service: POST {text} -> {vector}."""

    def __init__(self, endpoint: str, name: str = "http", dimension: int = REFERENCE_DIMENSION,
                 timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.name = name
        self.dimension = dimension
        self.timeout = timeout

    def embed(self, text: str) -> np.ndarray:
        import httpx

        try:
            response = httpx.post(self.endpoint, json={"text": text}, timeout=self.timeout)
            response.raise_for_status()
            vector = np.asarray(response.json()["vector"], dtype=np.float64)
        except Exception as exc:
            raise AdapterUnavailableError(f"embedding service failed: {exc}") from exc
        if vector.shape != (self.dimension,):
            raise InvalidError(
                f"embedding service returned dimension {vector.shape}, expected {self.dimension}")
        return vector
