"""Document / page / block data model with provenance-preserving identity.

Blocks are identified by a content hash of their birth geometry, so
re-ingesting the same source bytes reproduces the same ids and keeps
interaction logs and staging sets valid across reprocessing. All types are
treated as immutable values once constructed; mutation happens by producing
a new revision through the validation module.
"""

from __future__ import annotations

import hashlib
import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import NotFoundError, SchemaError

FORMULA_SEPARATOR = "\n---\n"


class BlockType(str, Enum):
    TITLE = "Title"
    TEXT = "Text"
    TABLE = "Table"
    FIGURE = "Figure"
    FORMULA = "Formula"
    CAPTION = "Caption"
    OTHER = "Other"

    @classmethod
    def from_label(cls, label: str) -> "BlockType":
        """Map a detector label onto the closed enumeration; unknowns become Other."""
        key = label.strip().lower().replace("-", "_").replace(" ", "_")
        return _LABEL_ALIASES.get(key, cls.OTHER)


_LABEL_ALIASES = {
    "title": BlockType.TITLE,
    "section_title": BlockType.TITLE,
    "text": BlockType.TEXT,
    "plain_text": BlockType.TEXT,
    "paragraph": BlockType.TEXT,
    "content": BlockType.TEXT,
    "list": BlockType.TEXT,
    "table": BlockType.TABLE,
    "figure": BlockType.FIGURE,
    "image": BlockType.FIGURE,
    "formula": BlockType.FORMULA,
    "equation": BlockType.FORMULA,
    "isolate_formula": BlockType.FORMULA,
    "caption": BlockType.CAPTION,
    "figure_caption": BlockType.CAPTION,
    "table_caption": BlockType.CAPTION,
}


class ProcessingState(str, Enum):
    UPLOADED = "Uploaded"
    NORMALIZED = "Normalized"
    LAYOUT_DETECTED = "LayoutDetected"
    EXTRACTED = "Extracted"
    INDEXED = "Indexed"
    FAILED = "Failed"


STATE_ORDER = [
    ProcessingState.UPLOADED,
    ProcessingState.NORMALIZED,
    ProcessingState.LAYOUT_DETECTED,
    ProcessingState.EXTRACTED,
    ProcessingState.INDEXED,
]


def state_rank(state: ProcessingState) -> int:
    return STATE_ORDER.index(state)


class BoundingBox(BaseModel):
    """A rectangle on a page, in PDF points with a top-left origin."""

    model_config = ConfigDict(frozen=True)

    page_index: int = Field(ge=0)
    x0: float
    y0: float
    x1: float
    y1: float

    @model_validator(mode="after")
    def _check_geometry(self) -> "BoundingBox":
        coords = (self.x0, self.y0, self.x1, self.y1)
        if not all(math.isfinite(c) and c >= 0 for c in coords):
            raise ValueError("bbox coordinates must be finite and non-negative")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("bbox must satisfy x0 < x1 and y0 < y1")
        return self

    def clipped(self, width: float, height: float) -> "BoundingBox | None":
        """Intersect with the page rectangle; None when nothing remains."""
        x0 = min(max(self.x0, 0.0), width)
        y0 = min(max(self.y0, 0.0), height)
        x1 = min(max(self.x1, 0.0), width)
        y1 = min(max(self.y1, 0.0), height)
        if x0 >= x1 or y0 >= y1:
            return None
        return BoundingBox(page_index=self.page_index, x0=x0, y0=y0, x1=x1, y1=y1)


class LayoutBlock(BaseModel):
    """A typed, bounded region of a page; the unit of retrieval and provenance."""

    model_config = ConfigDict(frozen=True)

    block_id: str
    document_id: str
    bbox: BoundingBox
    block_type: BlockType
    raw_payload: dict = Field(default_factory=dict)
    text_repr: str = ""
    revision: int = Field(default=0, ge=0)
    needs_validation: bool = False
    tombstoned: bool = False


class Page(BaseModel):
    page_index: int = Field(ge=0)
    width: float = Field(gt=0)
    height: float = Field(gt=0)
    native_text: str = ""
    blocks: list[LayoutBlock] = Field(default_factory=list)


class Document(BaseModel):
    document_id: str
    source_name: str
    page_count: int = Field(ge=1)
    processing_state: ProcessingState = ProcessingState.UPLOADED
    pages: list[Page] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_pages(self) -> "Document":
        for page in self.pages:
            for block in page.blocks:
                if block.bbox.page_index >= self.page_count:
                    raise ValueError(
                        f"block {block.block_id} references page "
                        f"{block.bbox.page_index} >= page_count {self.page_count}"
                    )
        return self

    def page(self, page_index: int) -> Page:
        for page in self.pages:
            if page.page_index == page_index:
                return page
        raise NotFoundError(f"no page {page_index} in document {self.document_id}")

    def iter_blocks(self):
        for page in self.pages:
            yield from page.blocks

    def find_block(self, block_id: str) -> LayoutBlock | None:
        for block in self.iter_blocks():
            if block.block_id == block_id:
                return block
        return None


def reading_order_key(block: LayoutBlock) -> tuple[float, float]:
    """Within a page, blocks are kept sorted by (y0, x0)."""
    return (block.bbox.y0, block.bbox.x0)


# --- payload schemas -------------------------------------------------------

# block type -> (required fields, optional fields); every field is grouped by
# the Python types accepted for it.
_TEXTUAL = {BlockType.TEXT, BlockType.TITLE, BlockType.CAPTION, BlockType.OTHER}

_PAYLOAD_FIELDS: dict[BlockType, tuple[dict[str, type], dict[str, type]]] = {
    BlockType.TABLE: ({"cells": list}, {"caption": str}),
    BlockType.FORMULA: ({"latex": str}, {"description": str}),
    BlockType.FIGURE: ({"description": str}, {"caption": str}),
}
for _t in _TEXTUAL:
    _PAYLOAD_FIELDS[_t] = ({"text": str}, {})


def validate_payload(block_type: BlockType, raw_payload: dict) -> None:
    """Raise SchemaError unless the payload matches the type's schema."""
    if not isinstance(raw_payload, dict):
        raise SchemaError(f"payload for {block_type.value} must be a record")
    required, optional = _PAYLOAD_FIELDS[block_type]
    for name, typ in required.items():
        if name not in raw_payload:
            raise SchemaError(f"{block_type.value} payload missing field '{name}'")
        if not isinstance(raw_payload[name], typ):
            raise SchemaError(f"{block_type.value} payload field '{name}' has wrong type")
    for name, value in raw_payload.items():
        if name in required:
            continue
        if name not in optional:
            raise SchemaError(f"{block_type.value} payload has unknown field '{name}'")
        if not isinstance(value, optional[name]):
            raise SchemaError(f"{block_type.value} payload field '{name}' has wrong type")
    if block_type is BlockType.TABLE:
        cells = raw_payload["cells"]
        if not all(isinstance(row, list) and all(isinstance(c, str) for c in row) for row in cells):
            raise SchemaError("Table payload 'cells' must be rows of strings")


def canonical_text_repr(block_type: BlockType, raw_payload: dict) -> str:
    """Flatten a type-specific extraction record into embeddable text.

    Text-like blocks pass through verbatim; tables flatten caption plus cells
    in row-major order; formulas join LaTeX and description with a separator
    line; figures join caption and description.
    """
    validate_payload(block_type, raw_payload)
    if block_type in _TEXTUAL:
        return raw_payload["text"]
    if block_type is BlockType.TABLE:
        lines = []
        caption = raw_payload.get("caption", "")
        if caption:
            lines.append(caption)
        lines.extend(" | ".join(row) for row in raw_payload["cells"])
        return "\n".join(lines)
    if block_type is BlockType.FORMULA:
        latex = raw_payload["latex"]
        description = raw_payload.get("description", "")
        return latex + FORMULA_SEPARATOR + description if description else latex
    # Figure
    description = raw_payload["description"]
    caption = raw_payload.get("caption", "")
    return caption + "\n" + description if caption else description


def block_identity(document_id: str, page_index: int, bbox: BoundingBox,
                   block_type: BlockType) -> str:
    """Deterministic block id; coordinates rounded to 0.1 pt before hashing."""
    key = "|".join([
        document_id,
        str(page_index),
        f"{bbox.x0:.1f},{bbox.y0:.1f},{bbox.x1:.1f},{bbox.y1:.1f}",
        block_type.value,
    ])
    return "b-" + hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


def document_identity(data: bytes) -> str:
    """Document ids derive from source bytes, so re-ingesting reproduces them."""
    return "d-" + hashlib.sha256(data).hexdigest()[:16]


def make_block(document_id: str, bbox: BoundingBox, block_type: BlockType,
               raw_payload: dict | None = None, *, needs_validation: bool = False) -> LayoutBlock:
    """Mint a block with its identity and, when a payload is given, its text."""
    payload = raw_payload or {}
    text = canonical_text_repr(block_type, payload) if payload else ""
    return LayoutBlock(
        block_id=block_identity(document_id, bbox.page_index, bbox, block_type),
        document_id=document_id,
        bbox=bbox,
        block_type=block_type,
        raw_payload=payload,
        text_repr=text,
        needs_validation=needs_validation,
    )


# --- block store serialization --------------------------------------------

def bbox_to_dict(bbox: BoundingBox) -> dict:
    return {"page_index": bbox.page_index, "x0": bbox.x0, "y0": bbox.y0,
            "x1": bbox.x1, "y1": bbox.y1}


def block_to_dict(block: LayoutBlock) -> dict:
    return {
        "block_id": block.block_id,
        "document_id": block.document_id,
        "bbox": bbox_to_dict(block.bbox),
        "block_type": block.block_type.value,
        "raw_payload": block.raw_payload,
        "text_repr": block.text_repr,
        "revision": block.revision,
        "needs_validation": block.needs_validation,
        "tombstoned": block.tombstoned,
    }


def document_to_dict(doc: Document) -> dict:
    """Block store record; field order is fixed so stores serialize bytewise."""
    return {
        "document_id": doc.document_id,
        "source_name": doc.source_name,
        "page_count": doc.page_count,
        "processing_state": doc.processing_state.value,
        "pages": [
            {
                "page_index": page.page_index,
                "width": page.width,
                "height": page.height,
                "native_text": page.native_text,
                "blocks": [block_to_dict(b) for b in page.blocks],
            }
            for page in doc.pages
        ],
    }


def document_from_dict(data: dict) -> Document:
    return Document.model_validate(data)
