"""Exact top-k cosine retrieval over embedded block text.

Search is a full scan with partial selection of the top k — corpora here are
tens of documents, so correctness and reproducibility beat ANN structures.
Scores tie-break by ascending block_id so rankings are stable across runs.
"""

from __future__ import annotations

import heapq
import json
import threading
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .embedding import EmbedderContract
from .errors import InvalidError
from .model import BlockType, LayoutBlock
from .storage import atomic_write_text


class IndexEntry(NamedTuple):
    block_id: str
    document_id: str
    block_type: BlockType
    vector: np.ndarray
    revision: int


class SearchHit(NamedTuple):
    block_id: str
    score: float
    block_type: BlockType
    document_id: str


class VectorIndex:
    """In-memory exact index keyed by block_id, persisted as one JSON file."""

    def __init__(self, embedder: EmbedderContract):
        self.embedder = embedder
        self._entries: dict[str, IndexEntry] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, block_id: str) -> bool:
        return block_id in self._entries

    def entry(self, block_id: str) -> IndexEntry | None:
        return self._entries.get(block_id)

    def entries(self) -> list[IndexEntry]:
        with self._lock:
            return list(self._entries.values())

    def upsert(self, block: LayoutBlock) -> None:
        """Insert or replace the entry for a block at its current revision."""
        if block.tombstoned:
            raise InvalidError(f"block {block.block_id} is tombstoned and cannot be indexed")
        if not block.text_repr:
            raise InvalidError(f"block {block.block_id} has empty text_repr")
        entry = IndexEntry(
            block_id=block.block_id,
            document_id=block.document_id,
            block_type=block.block_type,
            vector=self.embedder.embed(block.text_repr),
            revision=block.revision,
        )
        with self._lock:
            self._entries[block.block_id] = entry

    def remove(self, block_id: str) -> None:
        with self._lock:
            self._entries.pop(block_id, None)

    def document_ids(self) -> set[str]:
        with self._lock:
            return {e.document_id for e in self._entries.values()}

    def block_types(self, corpus_filter: set[str] | None = None) -> set[BlockType]:
        with self._lock:
            return {e.block_type for e in self._entries.values()
                    if corpus_filter is None or e.document_id in corpus_filter}

    def search(self, query_vector: np.ndarray, k: int,
               type_filter: BlockType | None = None,
               corpus_filter: Iterable[str] | None = None) -> list[SearchHit]:
        """Exact top-k by cosine, descending; ties by block_id ascending."""
        if k < 1:
            raise InvalidError("k must be >= 1")
        corpus = set(corpus_filter) if corpus_filter is not None else None
        with self._lock:
            entries = list(self._entries.values())
        query = np.asarray(query_vector, dtype=np.float64)
        scored = []
        for entry in entries:
            if type_filter is not None and entry.block_type is not type_filter:
                continue
            if corpus is not None and entry.document_id not in corpus:
                continue
            score = float(np.dot(entry.vector, query))
            scored.append((-score, entry.block_id, entry))
        top = heapq.nsmallest(k, scored)
        return [SearchHit(block_id=e.block_id, score=-neg, block_type=e.block_type,
                          document_id=e.document_id)
                for neg, _, e in top]

    # --- persistence -------------------------------------------------------

    def save(self, path: Path | str) -> None:
        with self._lock:
            entries = sorted(self._entries.values(), key=lambda e: e.block_id)
        payload = {
            "embedder_name": self.embedder.name,
            "dimension": self.embedder.dimension,
            "entries": [
                {
                    "block_id": e.block_id,
                    "document_id": e.document_id,
                    "block_type": e.block_type.value,
                    "revision": e.revision,
                    "vector": e.vector.tolist(),
                }
                for e in entries
            ],
        }
        atomic_write_text(Path(path), json.dumps(payload, ensure_ascii=False) + "\n")

    def load(self, path: Path | str) -> None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("embedder_name") != self.embedder.name:
            raise InvalidError(
                f"index was built with embedder {data.get('embedder_name')!r}, "
                f"configured embedder is {self.embedder.name!r}")
        if data.get("dimension") != self.embedder.dimension:
            raise InvalidError("index dimension does not match configured embedder")
        entries = {}
        for item in data["entries"]:
            entries[item["block_id"]] = IndexEntry(
                block_id=item["block_id"],
                document_id=item["document_id"],
                block_type=BlockType(item["block_type"]),
                vector=np.asarray(item["vector"], dtype=np.float64),
                revision=item["revision"],
            )
        with self._lock:
            self._entries = entries
