"""Document ingestion pipeline.

Stages run in a fixed order: normalize (bytes to pages of native text),
detect_layout (pages to typed regions), extract_blocks (regions to payload
records), index (blocks to vectors). A stage failure moves the job to
Failed; a single block failing extraction only flags that block for human
validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import pdfio
from .adapters import AdapterSet, CropRef, DetectedRegion, PageRef
from .clock import Clock, SystemClock
from .errors import AdapterUnavailableError, EmptyDocumentError, EngineError, FormatError
from .model import (
    BlockType,
    BoundingBox,
    Document,
    LayoutBlock,
    Page,
    ProcessingState,
    block_identity,
    canonical_text_repr,
    document_identity,
    validate_payload,
)
from .vector_index import VectorIndex

SUPPORTED_SUFFIXES = (".pdf", ".txt", ".md")
TEXT_PAGE_WIDTH = 612.0
TEXT_PAGE_HEIGHT = 792.0
LINES_PER_PAGE = 60


@dataclass
class PipelineJob:
    """Progress record for one ingestion run."""

    document_id: str
    source_name: str
    state: ProcessingState
    stage_times: dict[str, str] = field(default_factory=dict)
    error: str | None = None
    flagged_blocks: int = 0

    def to_dict(self) -> dict:
        return {
            "document_id": self.document_id,
            "source_name": self.source_name,
            "state": self.state.value,
            "stage_times": dict(self.stage_times),
            "error": self.error,
            "flagged_blocks": self.flagged_blocks,
        }


def normalize(data: bytes, source_name: str) -> Document:
    """Turn raw file bytes into a paged document with native text."""
    suffix = Path(source_name).suffix.lower()
    if suffix not in SUPPORTED_SUFFIXES:
        raise FormatError(f"unsupported file type {suffix or '(none)'}",
                          detail={"source_name": source_name})
    if not data:
        raise EmptyDocumentError("document is empty", detail={"source_name": source_name})
    document_id = document_identity(data)
    if suffix == ".pdf":
        parsed = pdfio.parse_pdf(data)
        pages = [
            Page(page_index=i, width=p.width, height=p.height, native_text=p.text)
            for i, p in enumerate(parsed.pages)
        ]
    else:
        text = data.decode("utf-8", errors="replace")
        if not text.strip():
            raise EmptyDocumentError("document has no text content",
                                     detail={"source_name": source_name})
        pages = _paginate_text(text)
    if not pages:
        raise EmptyDocumentError("document has no pages", detail={"source_name": source_name})
    return Document(
        document_id=document_id,
        source_name=source_name,
        page_count=len(pages),
        processing_state=ProcessingState.NORMALIZED,
        pages=pages,
    )


def _paginate_text(text: str) -> list[Page]:
    """Split plain text into synthetic letter-size pages of fixed line count."""
    lines = text.splitlines()
    chunks = [lines[i:i + LINES_PER_PAGE] for i in range(0, len(lines), LINES_PER_PAGE)]
    if not chunks:
        chunks = [[""]]
    return [
        Page(page_index=i, width=TEXT_PAGE_WIDTH, height=TEXT_PAGE_HEIGHT,
             native_text="\n".join(chunk))
        for i, chunk in enumerate(chunks)
    ]


def detect_layout(document: Document,
                  adapters: AdapterSet) -> tuple[Document, dict[str, DetectedRegion]]:
    """Run the layout detector over every page, producing typed empty blocks.

    Regions are clipped to the page; degenerate clips are dropped. Block
    identity is minted here from detection-time geometry and type. Returns
    the document plus each block's source region for the extraction stage.
    """
    if not adapters.layout_detector.health():
        raise AdapterUnavailableError("layout detector is unavailable")
    pages = []
    regions_by_block: dict[str, DetectedRegion] = {}
    for page in document.pages:
        page_ref = PageRef(
            document_id=document.document_id, source_name=document.source_name,
            page_index=page.page_index, width=page.width, height=page.height,
            native_text=page.native_text,
        )
        try:
            regions = adapters.layout_detector.detect(page_ref)
        except EngineError:
            raise
        except Exception as exc:
            raise AdapterUnavailableError(
                f"layout detection failed on page {page.page_index}: {exc}") from exc
        blocks = []
        for region in regions:
            bbox = _clip_region(region.x0, region.y0, region.x1, region.y1,
                                page.page_index, page.width, page.height)
            if bbox is None:
                continue
            block_type = BlockType.from_label(region.label)
            block_id = block_identity(document.document_id, page.page_index, bbox, block_type)
            blocks.append(LayoutBlock(
                block_id=block_id, document_id=document.document_id, bbox=bbox,
                block_type=block_type, raw_payload={}, text_repr="",
            ))
            regions_by_block[block_id] = region
        pages.append(page.model_copy(update={"blocks": blocks}))
    document = document.model_copy(update={
        "pages": pages,
        "processing_state": ProcessingState.LAYOUT_DETECTED,
    })
    return document, regions_by_block


def _clip_region(x0: float, y0: float, x1: float, y1: float,
                 page_index: int, width: float, height: float) -> BoundingBox | None:
    cx0, cy0 = max(0.0, min(x0, x1)), max(0.0, min(y0, y1))
    cx1, cy1 = min(width, max(x0, x1)), min(height, max(y0, y1))
    if cx1 - cx0 <= 0 or cy1 - cy0 <= 0:
        return None
    return BoundingBox(page_index=page_index, x0=cx0, y0=cy0, x1=cx1, y1=cy1)


def extract_blocks(document: Document, adapters: AdapterSet,
                   regions_by_block: dict[str, DetectedRegion]) -> tuple[Document, int]:
    """Fill each block's payload via its type-specific adapter.

    A failing or empty extraction flags the block needs_validation with an
    empty payload; the job itself keeps going. Returns the document and the
    number of flagged blocks.
    """
    flagged = 0
    pages = []
    for page in document.pages:
        blocks = []
        for block in page.blocks:
            region = regions_by_block.get(block.block_id)
            crop = CropRef(
                document_id=document.document_id, page_index=page.page_index,
                x0=block.bbox.x0, y0=block.bbox.y0, x1=block.bbox.x1, y1=block.bbox.y1,
                block_type=block.block_type,
                native_text=region.native_text if region else None,
                fixture_payload=region.fixture_payload if region else None,
            )
            adapter = adapters.extractor_for(block.block_type)
            try:
                if not adapter.health():
                    raise AdapterUnavailableError("extraction adapter is unavailable")
                payload = adapter.invoke(crop)
                validate_payload(block.block_type, payload)
                text = canonical_text_repr(block.block_type, payload)
            except Exception:
                payload, text = None, ""
            if payload is None or not text.strip():
                flagged += 1
                blocks.append(block.model_copy(update={
                    "raw_payload": {}, "text_repr": "", "needs_validation": True,
                }))
            else:
                blocks.append(block.model_copy(update={
                    "raw_payload": payload, "text_repr": text, "needs_validation": False,
                }))
        pages.append(page.model_copy(update={"blocks": blocks}))
    document = document.model_copy(update={
        "pages": pages,
        "processing_state": ProcessingState.EXTRACTED,
    })
    return document, flagged


def index_document(document: Document, index: VectorIndex) -> Document:
    """Add every non-empty block to the vector index."""
    for block in document.iter_blocks():
        if block.tombstoned or not block.text_repr.strip():
            continue
        index.upsert(block)
    return document.model_copy(update={"processing_state": ProcessingState.INDEXED})


def run_pipeline(data: bytes, source_name: str, adapters: AdapterSet,
                 index: VectorIndex, clock: Clock | None = None) -> tuple[Document, PipelineJob]:
    """Run all stages; on failure raise PipelineFailure carrying the job."""
    clock = clock or SystemClock()

    def stamp(stage: str) -> None:
        job.stage_times[stage] = clock.now().isoformat().replace("+00:00", "Z")

    job = PipelineJob(document_id="", source_name=source_name,
                      state=ProcessingState.UPLOADED)
    stamp("uploaded")
    try:
        document = normalize(data, source_name)
        job.document_id = document.document_id
        job.state = ProcessingState.NORMALIZED
        stamp("normalized")

        document, regions = detect_layout(document, adapters)
        job.state = ProcessingState.LAYOUT_DETECTED
        stamp("layout_detected")

        document, job.flagged_blocks = extract_blocks(document, adapters, regions)
        job.state = ProcessingState.EXTRACTED
        stamp("extracted")

        document = index_document(document, index)
        job.state = ProcessingState.INDEXED
        stamp("indexed")
        return document, job
    except EngineError as exc:
        job.state = ProcessingState.FAILED
        job.error = f"{exc.code}: {exc.message}"
        stamp("failed")
        raise PipelineFailure(job, exc) from exc


class PipelineFailure(EngineError):
    """Wraps the stage error together with the failed job record."""

    def __init__(self, job: PipelineJob, cause: EngineError):
        super().__init__(cause.message, detail=cause.detail)
        self.code = cause.code
        self.job = job
        self.cause = cause
