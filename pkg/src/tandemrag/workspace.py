"""One data directory, one fully wired engine.

The workspace owns the block store, vector index, event and edit logs,
session and report managers, and the adapter set. Layout under data_dir:

    blocks/          one JSON document per ingested file
    index.json       persisted vector index
    events.jsonl     append-only interaction log (all sessions)
    edits.jsonl      append-only validation edit log
    sessions/        session snapshots
    reports/         report documents
    jobs/            ingestion job records
    pages/           optional pre-rendered page rasters
"""

from __future__ import annotations

from pathlib import Path

from .adapters import AdapterSet, LlmAdapter, build_llm
from .clock import Clock, SystemClock
from .embedding import EmbedderContract, HttpEmbedder, ReferenceEmbedder
from .errors import InvalidError
from .ingest import PipelineFailure, PipelineJob, run_pipeline
from .model import Document
from .report import ReportManager
from .session import DEFAULT_K, SessionManager
from .storage import AppendLog, BlockStore, atomic_write_text, canonical_json
from .validation import ValidationEdit, Validator
from .vector_index import VectorIndex


def build_embedder(config: dict | None = None) -> EmbedderContract:
    """Build the embedder from {mode: reference|http, endpoint?}."""
    config = config or {}
    mode = config.get("mode", "reference")
    if mode == "reference":
        return ReferenceEmbedder()
    if mode == "http":
        endpoint = config.get("endpoint")
        if not endpoint:
            raise InvalidError("embedder in http mode needs an endpoint")
        return HttpEmbedder(endpoint, dimension=config.get("dimension", 256))
    raise InvalidError(f"unknown embedder mode {mode!r}")


class Workspace:
    """Facade over every engine module, rooted at one data directory."""

    def __init__(self, data_dir: Path | str, adapters: AdapterSet | None = None,
                 llm: LlmAdapter | None = None, embedder: EmbedderContract | None = None,
                 clock: Clock | None = None, k: int = DEFAULT_K):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock or SystemClock()
        self.k = k
        self.adapters = adapters or AdapterSet.reference()
        self.llm = llm or build_llm({"mode": "mock"})
        self.embedder = embedder or ReferenceEmbedder()

        self.store = BlockStore(self.data_dir / "blocks")
        self.index_path = self.data_dir / "index.json"
        self.index = VectorIndex(self.embedder)
        if self.index_path.exists():
            self.index.load(self.index_path)
        self.event_log = AppendLog(self.data_dir / "events.jsonl")
        self.edit_log = AppendLog(self.data_dir / "edits.jsonl")
        self.validator = Validator(self.store, self.index, self.edit_log, self.clock)
        self.sessions = SessionManager(
            self.store, self.index, self.embedder, self.llm, self.event_log,
            self.data_dir / "sessions", clock=self.clock, k=self.k)
        self.reports = ReportManager(self.store, self.llm, self.data_dir / "reports",
                                     clock=self.clock)
        self.jobs_dir = self.data_dir / "jobs"
        self.jobs_dir.mkdir(parents=True, exist_ok=True)
        self.pages_dir = self.data_dir / "pages"

    # --- ingestion -----------------------------------------------------------

    def ingest_bytes(self, data: bytes, source_name: str) -> tuple[Document, PipelineJob]:
        """Run the full pipeline and persist document, index, and job record."""
        try:
            document, job = run_pipeline(data, source_name, self.adapters,
                                         self.index, clock=self.clock)
        except PipelineFailure as failure:
            self._save_job(failure.job)
            raise
        self.store.save(document)
        self.save_index()
        self._save_job(job)
        return document, job

    def ingest_path(self, path: Path | str) -> tuple[Document, PipelineJob]:
        path = Path(path)
        return self.ingest_bytes(path.read_bytes(), path.name)

    def _save_job(self, job: PipelineJob) -> None:
        name = job.document_id or "failed-" + job.source_name.replace("/", "_")
        atomic_write_text(self.jobs_dir / f"{name}.json", canonical_json(job.to_dict()))

    def save_index(self) -> None:
        self.index.save(self.index_path)

    # --- validation ----------------------------------------------------------

    def apply_edit(self, edit: ValidationEdit):
        """Apply a validation edit and persist the refreshed index."""
        block = self.validator.apply_edit(edit)
        self.save_index()
        return block

    def page_image_path(self, document_id: str, page_index: int) -> Path | None:
        """Pre-rendered raster for a page, when one exists in the data dir."""
        for suffix in ("png", "jpg", "jpeg", "webp"):
            path = self.pages_dir / document_id / f"{page_index}.{suffix}"
            if path.exists():
                return path
        return None
