"""File-backed persistence: block stores, append-only logs, JSON snapshots.

One JSON document per source document, JSON Lines for the edit and event
logs, and atomic replace for every snapshot write. Serialization is
deterministic so identical states produce identical bytes.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from pathlib import Path
from typing import Iterator

from .errors import NotFoundError
from .model import Document, LayoutBlock, document_from_dict, document_to_dict, reading_order_key


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def canonical_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2) + "\n"


def jsonl_line(obj) -> str:
    return json.dumps(obj, ensure_ascii=False) + "\n"


def read_jsonl(path: Path) -> Iterator[dict]:
    if not path.exists():
        return
    with path.open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)


class AppendLog:
    """Append-only JSON Lines file; past lines are never rewritten."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = jsonl_line(record)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(line)
                handle.flush()

    def read_all(self) -> list[dict]:
        with self._lock:
            return list(read_jsonl(self.path))

    def count(self) -> int:
        return sum(1 for _ in read_jsonl(self.path))


class BlockStore:
    """One JSON file per document, plus an in-memory block_id -> document map."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._cache: dict[str, Document] = {}
        self._block_owner: dict[str, str] = {}
        self._lock = threading.RLock()
        for path in sorted(self.directory.glob("*.json")):
            doc = document_from_dict(json.loads(path.read_text(encoding="utf-8")))
            self._cache[doc.document_id] = doc
            self._index_blocks(doc)

    def _index_blocks(self, doc: Document) -> None:
        for block in doc.iter_blocks():
            self._block_owner[block.block_id] = doc.document_id

    def _path(self, document_id: str) -> Path:
        return self.directory / f"{document_id}.json"

    def save(self, doc: Document) -> None:
        with self._lock:
            self._cache[doc.document_id] = doc
            self._index_blocks(doc)
            atomic_write_text(self._path(doc.document_id), canonical_json(document_to_dict(doc)))

    def get(self, document_id: str) -> Document:
        with self._lock:
            doc = self._cache.get(document_id)
        if doc is None:
            raise NotFoundError(f"document {document_id} not found")
        return doc

    def exists(self, document_id: str) -> bool:
        with self._lock:
            return document_id in self._cache

    def list_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._cache)

    def documents(self) -> list[Document]:
        with self._lock:
            return [self._cache[i] for i in sorted(self._cache)]

    def get_block(self, block_id: str) -> tuple[Document, LayoutBlock]:
        with self._lock:
            owner = self._block_owner.get(block_id)
        if owner is None:
            raise NotFoundError(f"block {block_id} not found")
        doc = self.get(owner)
        block = doc.find_block(block_id)
        if block is None:
            raise NotFoundError(f"block {block_id} not found")
        return doc, block

    def has_block(self, block_id: str) -> bool:
        with self._lock:
            return block_id in self._block_owner

    def replace_block(self, new_block: LayoutBlock) -> Document:
        """Swap a block for its new revision, keeping its position on the page."""
        with self._lock:
            doc, _ = self.get_block(new_block.block_id)
            pages = []
            for page in doc.pages:
                if page.page_index == new_block.bbox.page_index or any(
                        b.block_id == new_block.block_id for b in page.blocks):
                    blocks = [new_block if b.block_id == new_block.block_id else b
                              for b in page.blocks]
                    pages.append(page.model_copy(update={"blocks": blocks}))
                else:
                    pages.append(page)
            updated = doc.model_copy(update={"pages": pages})
            self.save(updated)
            return updated

    def insert_block(self, document_id: str, block: LayoutBlock) -> Document:
        """Add a freshly minted block at its reading-order position."""
        with self._lock:
            doc = self.get(document_id)
            pages = []
            for page in doc.pages:
                if page.page_index == block.bbox.page_index:
                    blocks = list(page.blocks)
                    key = reading_order_key(block)
                    at = len(blocks)
                    for i, existing in enumerate(blocks):
                        if reading_order_key(existing) > key:
                            at = i
                            break
                    blocks.insert(at, block)
                    pages.append(page.model_copy(update={"blocks": blocks}))
                else:
                    pages.append(page)
            updated = doc.model_copy(update={"pages": pages})
            self.save(updated)
            return updated
