"""Human review and correction of pipeline outputs.

Every change to a block is a ValidationEdit: a before snapshot (optimistic
concurrency guard), an after snapshot, and a kind. Accepted edits bump the
block revision by exactly 1, recompute text_repr, refresh the vector index,
and append to an edit log whose replay reproduces the store state.
"""

from __future__ import annotations

import threading
from collections import defaultdict
from enum import Enum
from typing import Iterable

from pydantic import BaseModel, ConfigDict

from .clock import Clock, SystemClock
from .errors import ConflictError, InvalidError, NotFoundError, SchemaError
from .model import (
    BlockType,
    BoundingBox,
    Document,
    LayoutBlock,
    block_identity,
    bbox_to_dict,
    canonical_text_repr,
    reading_order_key,
    validate_payload,
)
from .storage import AppendLog, BlockStore
from .vector_index import VectorIndex


class EditKind(str, Enum):
    RECLASSIFY = "Reclassify"
    ADJUST_BOUNDS = "AdjustBounds"
    ADD_BLOCK = "AddBlock"
    REMOVE_BLOCK = "RemoveBlock"
    CORRECT_TEXT = "CorrectText"
    CORRECT_TABLE = "CorrectTable"
    CORRECT_FIGURE = "CorrectFigure"
    CORRECT_FORMULA = "CorrectFormula"


_CORRECTION_TYPES: dict[EditKind, set[BlockType]] = {
    EditKind.CORRECT_TEXT: {BlockType.TEXT, BlockType.TITLE, BlockType.CAPTION,
                            BlockType.OTHER},
    EditKind.CORRECT_TABLE: {BlockType.TABLE},
    EditKind.CORRECT_FIGURE: {BlockType.FIGURE},
    EditKind.CORRECT_FORMULA: {BlockType.FORMULA},
}


class Snapshot(BaseModel):
    """Point-in-time view of the mutable block state.

    For AddBlock the before snapshot is absent (exists=False) and the after
    snapshot carries document_id so the server knows where to mint.
    """

    model_config = ConfigDict(frozen=True)

    exists: bool = True
    document_id: str | None = None
    block_type: BlockType | None = None
    bbox: BoundingBox | None = None
    raw_payload: dict | None = None
    tombstoned: bool = False

    @classmethod
    def of_block(cls, block: LayoutBlock) -> "Snapshot":
        return cls(block_type=block.block_type, bbox=block.bbox,
                   raw_payload=dict(block.raw_payload), tombstoned=block.tombstoned)

    @classmethod
    def absent(cls) -> "Snapshot":
        return cls(exists=False)

    def matches(self, block: LayoutBlock) -> bool:
        return (self.exists
                and self.block_type == block.block_type
                and self.bbox == block.bbox
                and self.raw_payload == block.raw_payload
                and self.tombstoned == block.tombstoned)

    def to_dict(self) -> dict:
        return {
            "exists": self.exists,
            "document_id": self.document_id,
            "block_type": self.block_type.value if self.block_type else None,
            "bbox": bbox_to_dict(self.bbox) if self.bbox else None,
            "raw_payload": self.raw_payload,
            "tombstoned": self.tombstoned,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Snapshot":
        bbox = BoundingBox(**data["bbox"]) if data.get("bbox") else None
        block_type = BlockType(data["block_type"]) if data.get("block_type") else None
        return cls(exists=data.get("exists", True), document_id=data.get("document_id"),
                   block_type=block_type, bbox=bbox,
                   raw_payload=data.get("raw_payload"),
                   tombstoned=data.get("tombstoned", False))


class ValidationEdit(BaseModel):
    model_config = ConfigDict(frozen=True)

    edit_id: str
    block_id: str
    editor_id: str
    edit_kind: EditKind
    before: Snapshot
    after: Snapshot
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "edit_id": self.edit_id,
            "block_id": self.block_id,
            "editor_id": self.editor_id,
            "edit_kind": self.edit_kind.value,
            "before": self.before.to_dict(),
            "after": self.after.to_dict(),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ValidationEdit":
        return cls(
            edit_id=data["edit_id"], block_id=data["block_id"],
            editor_id=data["editor_id"], edit_kind=EditKind(data["edit_kind"]),
            before=Snapshot.from_dict(data["before"]),
            after=Snapshot.from_dict(data["after"]),
            timestamp=data["timestamp"],
        )


class Validator:
    """Applies validation edits over a block store with per-block serialization."""

    def __init__(self, store: BlockStore, index: VectorIndex,
                 edit_log: AppendLog | None = None, clock: Clock | None = None):
        self.store = store
        self.index = index
        self.edit_log = edit_log
        self.clock = clock or SystemClock()
        self._locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()
        self._edit_count = edit_log.count() if edit_log is not None else 0

    def _lock_for(self, block_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[block_id]

    def new_edit(self, block_id: str, editor_id: str, edit_kind: EditKind,
                 before: Snapshot, after: Snapshot) -> ValidationEdit:
        """Mint an edit record with a fresh id and timestamp."""
        with self._locks_guard:
            self._edit_count += 1
            edit_id = f"edit-{self._edit_count:06d}"
        return ValidationEdit(
            edit_id=edit_id, block_id=block_id, editor_id=editor_id,
            edit_kind=edit_kind, before=before, after=after,
            timestamp=self.clock.now().isoformat().replace("+00:00", "Z"),
        )

    def apply_edit(self, edit: ValidationEdit) -> LayoutBlock:
        """Apply one edit; stale before raises Conflict, bad payloads Schema."""
        if edit.edit_kind is EditKind.ADD_BLOCK:
            return self._apply_add(edit)
        lock = self._lock_for(edit.block_id)
        with lock:
            document, block = self.store.get_block(edit.block_id)
            if not edit.before.matches(block):
                raise ConflictError("stale before snapshot",
                                    detail={"block_id": edit.block_id,
                                            "revision": block.revision})
            updated = self._transform(document, block, edit)
            updated = updated.model_copy(update={
                "revision": block.revision + 1,
                "needs_validation": False,
            })
            self.store.replace_block(updated)
            self._reindex(updated)
            self._log(edit)
            return updated

    def _transform(self, document: Document, block: LayoutBlock,
                   edit: ValidationEdit) -> LayoutBlock:
        kind, after = edit.edit_kind, edit.after
        if kind is EditKind.RECLASSIFY:
            if after.block_type is None:
                raise SchemaError("Reclassify requires after.block_type")
            payload = after.raw_payload if after.raw_payload is not None else block.raw_payload
            text = canonical_text_repr(after.block_type, payload)
            return block.model_copy(update={
                "block_type": after.block_type, "raw_payload": dict(payload),
                "text_repr": text,
            })
        if kind is EditKind.ADJUST_BOUNDS:
            if after.bbox is None:
                raise SchemaError("AdjustBounds requires after.bbox")
            if after.bbox.page_index != block.bbox.page_index:
                raise InvalidError("blocks cannot move between pages")
            page = document.page(block.bbox.page_index)
            clipped = after.bbox.clipped(page.width, page.height)
            if clipped is None:
                raise InvalidError("adjusted bounds fall outside the page")
            return block.model_copy(update={"bbox": clipped})
        if kind is EditKind.REMOVE_BLOCK:
            return block.model_copy(update={"tombstoned": True})
        if kind in _CORRECTION_TYPES:
            if block.block_type not in _CORRECTION_TYPES[kind]:
                raise SchemaError(
                    f"{kind.value} does not apply to {block.block_type.value} blocks")
            if after.raw_payload is None:
                raise SchemaError(f"{kind.value} requires after.raw_payload")
            text = canonical_text_repr(block.block_type, after.raw_payload)
            return block.model_copy(update={
                "raw_payload": dict(after.raw_payload), "text_repr": text,
            })
        raise InvalidError(f"unsupported edit kind {kind.value}")

    def _apply_add(self, edit: ValidationEdit) -> LayoutBlock:
        after = edit.after
        if edit.before.exists:
            raise ConflictError("AddBlock requires an absent before snapshot")
        if after.document_id is None or after.block_type is None or after.bbox is None:
            raise SchemaError("AddBlock requires document_id, block_type and bbox")
        payload = after.raw_payload if after.raw_payload is not None else {}
        text = canonical_text_repr(after.block_type, payload)
        document = self.store.get(after.document_id)
        page = document.page(after.bbox.page_index)
        clipped = after.bbox.clipped(page.width, page.height)
        if clipped is None:
            raise InvalidError("new block falls outside the page")
        block_id = block_identity(after.document_id, clipped.page_index, clipped,
                                  after.block_type)
        lock = self._lock_for(block_id)
        with lock:
            if self.store.has_block(block_id):
                raise ConflictError("a block with this geometry and type already exists",
                                    detail={"block_id": block_id})
            block = LayoutBlock(
                block_id=block_id, document_id=after.document_id, bbox=clipped,
                block_type=after.block_type, raw_payload=dict(payload),
                text_repr=text, revision=1,
            )
            self.store.insert_block(after.document_id, block)
            self._reindex(block)
            self._log(edit.model_copy(update={"block_id": block_id}))
            return block

    def _reindex(self, block: LayoutBlock) -> None:
        if block.tombstoned or not block.text_repr.strip():
            self.index.remove(block.block_id)
        else:
            self.index.upsert(block)

    def _log(self, edit: ValidationEdit) -> None:
        if self.edit_log is not None:
            self.edit_log.append(edit.to_dict())

    # --- review queue -------------------------------------------------------

    def list_pending(self, document_id: str, flt: str = "needs_validation",
                     cursor: int = 0, page_size: int | None = None,
                     ) -> tuple[list[LayoutBlock], int | None]:
        """Blocks awaiting review in (page, reading order); offset pagination."""
        if not self.store.exists(document_id):
            raise NotFoundError(f"unknown document {document_id}")
        document = self.store.get(document_id)
        blocks = [b for b in document.iter_blocks() if not b.tombstoned]
        if flt == "needs_validation":
            blocks = [b for b in blocks if b.needs_validation]
        elif flt != "all":
            wanted = BlockType.from_label(flt)
            blocks = [b for b in blocks if b.block_type is wanted]
        blocks.sort(key=lambda b: (b.bbox.page_index, *reading_order_key(b), b.block_id))
        if cursor < 0:
            raise InvalidError("cursor must be non-negative")
        if page_size is None:
            return blocks[cursor:], None
        window = blocks[cursor:cursor + page_size]
        next_cursor = cursor + page_size if cursor + page_size < len(blocks) else None
        return window, next_cursor


def replay_log(store: BlockStore, index: VectorIndex,
               edits: Iterable[dict], clock: Clock | None = None) -> Validator:
    """Re-apply an accepted-edit log over a revision-0 store copy."""
    validator = Validator(store, index, edit_log=None, clock=clock)
    for record in edits:
        validator.apply_edit(ValidationEdit.from_dict(record))
    return validator
