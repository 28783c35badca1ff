"""HTTP/JSON service over the workspace.

Handlers are thin mappings onto module operations: the same state changes
happen whether a flow runs through this API or the in-process library.
All payloads are snake_case JSON, matching the persisted formats.
"""

from __future__ import annotations

import base64
import binascii
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse, Response

from .config import ServiceConfig
from .errors import EngineError, InvalidError, NotFoundError
from .evaluation import SessionScript, load_script, render_table, run_experiment
from .ingest import PipelineFailure
from .model import block_to_dict, document_to_dict
from .session import EventKind
from .validation import EditKind, Snapshot
from .workspace import Workspace, build_embedder
from .adapters import AdapterSet, build_llm

STATUS_BY_CODE = {
    "NotFound": 404,
    "Conflict": 409,
    "Invalid": 400,
    "AdapterUnavailable": 503,
    "Internal": 500,
}


def _error_response(exc: EngineError) -> JSONResponse:
    status = STATUS_BY_CODE.get(exc.code, 500)
    return JSONResponse(status_code=status, content={
        "code": exc.code, "message": exc.message, "detail": exc.detail,
    })


def create_app(workspace: Workspace) -> FastAPI:
    app = FastAPI(title="tandemrag", docs_url=None, redoc_url=None)
    # The web client is served statically from another origin.
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    uploads: dict[str, dict] = {}
    executor = ThreadPoolExecutor(max_workers=2)

    @app.exception_handler(EngineError)
    async def engine_error_handler(request: Request, exc: EngineError):
        return _error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={
            "code": "Invalid", "message": "request body failed validation",
            "detail": {"errors": [str(e.get("msg", "")) for e in exc.errors()]},
        })

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "documents": len(workspace.store.list_ids())}

    # --- documents -----------------------------------------------------------

    def _decode_upload(body: dict) -> tuple[bytes, str]:
        filename = body.get("filename", "")
        if not filename:
            raise InvalidError("upload needs a filename")
        encoded = body.get("content_base64")
        if not isinstance(encoded, str) or not encoded:
            raise InvalidError("upload needs content_base64")
        try:
            return base64.b64decode(encoded, validate=True), filename
        except (binascii.Error, ValueError) as exc:
            raise InvalidError(f"content_base64 is not valid base64: {exc}") from exc

    def _run_upload(upload_id: str, data: bytes, filename: str) -> None:
        try:
            document, job = workspace.ingest_bytes(data, filename)
            uploads[upload_id] = {"upload_id": upload_id, "job": job.to_dict()}
        except PipelineFailure as failure:
            uploads[upload_id] = {"upload_id": upload_id, "job": failure.job.to_dict(),
                                  "error": {"code": failure.code,
                                            "message": failure.message}}

    @app.post("/documents", status_code=201)
    async def upload_document(body: dict) -> Any:
        data, filename = _decode_upload(body)
        if body.get("wait") is False:
            upload_id = f"u-{len(uploads) + 1:04d}"
            uploads[upload_id] = {"upload_id": upload_id, "job": None}
            executor.submit(_run_upload, upload_id, data, filename)
            return JSONResponse(status_code=202, content={"upload_id": upload_id})
        try:
            document, job = workspace.ingest_bytes(data, filename)
        except PipelineFailure as failure:
            status = STATUS_BY_CODE.get(failure.code, 500)
            return JSONResponse(status_code=status, content={
                "code": failure.code, "message": failure.message,
                "detail": {"job": failure.job.to_dict()},
            })
        return {"document": document_to_dict(document), "job": job.to_dict()}

    @app.get("/uploads/{upload_id}")
    def upload_status(upload_id: str) -> dict:
        if upload_id not in uploads:
            raise NotFoundError(f"unknown upload {upload_id}")
        return uploads[upload_id]

    @app.get("/documents")
    def list_documents() -> dict:
        documents = []
        for document in workspace.store.documents():
            documents.append({
                "document_id": document.document_id,
                "source_name": document.source_name,
                "page_count": document.page_count,
                "processing_state": document.processing_state.value,
            })
        return {"documents": documents}

    @app.get("/documents/{document_id}")
    def get_document(document_id: str) -> dict:
        return document_to_dict(workspace.store.get(document_id))

    @app.get("/documents/{document_id}/pages/{page_index}/blocks")
    def page_blocks(document_id: str, page_index: int) -> dict:
        document = workspace.store.get(document_id)
        page = document.page(page_index)
        return {
            "document_id": document_id,
            "page_index": page_index,
            "width": page.width,
            "height": page.height,
            "blocks": [block_to_dict(b) for b in page.blocks],
        }

    @app.get("/documents/{document_id}/pages/{page_index}/image")
    def page_image(document_id: str, page_index: int):
        document = workspace.store.get(document_id)
        document.page(page_index)
        path = workspace.page_image_path(document_id, page_index)
        if path is None:
            raise NotFoundError("no raster available for this page",
                                detail={"document_id": document_id,
                                        "page_index": page_index})
        return FileResponse(path)

    # --- validation ----------------------------------------------------------

    @app.post("/blocks/{block_id}/edits")
    def post_edit(block_id: str, body: dict,
                  x_user_id: str = Header(default="anonymous")) -> dict:
        try:
            kind = EditKind(body.get("edit_kind", ""))
        except ValueError:
            raise InvalidError(f"unknown edit_kind {body.get('edit_kind')!r}")
        before = Snapshot.from_dict(body.get("before") or {"exists": False})
        after = Snapshot.from_dict(body.get("after") or {"exists": False})
        edit = workspace.validator.new_edit(
            block_id=block_id, editor_id=body.get("editor_id", x_user_id),
            edit_kind=kind, before=before, after=after)
        block = workspace.apply_edit(edit)
        return {"block": block_to_dict(block), "edit_id": edit.edit_id}

    @app.get("/validation/pending")
    def pending(document_id: str, filter: str = "needs_validation",
                cursor: int = 0, page_size: int | None = None) -> dict:
        blocks, next_cursor = workspace.validator.list_pending(
            document_id, flt=filter, cursor=cursor, page_size=page_size)
        return {"blocks": [block_to_dict(b) for b in blocks],
                "next_cursor": next_cursor}

    # --- sessions --------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: dict | None = None,
                       x_user_id: str = Header(default="anonymous")) -> dict:
        body = body or {}
        session = workspace.sessions.create_session(
            user_id=body.get("user_id", x_user_id),
            strategy_name=body.get("strategy", "symbiotic"),
            corpus=body.get("corpus"))
        return session.to_dict()

    @app.get("/sessions")
    def list_sessions() -> dict:
        return {"sessions": [
            {"session_id": s.session_id, "user_id": s.user_id,
             "strategy_name": s.strategy_name, "created_at": s.created_at}
            for s in workspace.sessions.list_sessions()
        ]}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return workspace.sessions.get_session(session_id).to_dict()

    @app.get("/sessions/{session_id}/staging")
    def get_staging(session_id: str) -> dict:
        session = workspace.sessions.get_session(session_id)
        blocks = []
        for block_id in sorted(session.staging):
            document, block = workspace.store.get_block(block_id)
            record = block_to_dict(block)
            record["source_name"] = document.source_name
            blocks.append(record)
        return {"session_id": session_id, "staging": sorted(session.staging),
                "blocks": blocks}

    @app.post("/sessions/{session_id}/query")
    def post_query(session_id: str, body: dict,
                   x_user_id: str = Header(default="anonymous")) -> dict:
        retrieval, assistant = workspace.sessions.post_query(
            session_id, x_user_id, body.get("query", ""))
        return {"retrieval": retrieval.to_dict(), "assistant": assistant.to_dict()}

    @app.post("/sessions/{session_id}/blocks/{block_id}/toggle")
    def toggle(session_id: str, block_id: str, body: dict,
               x_user_id: str = Header(default="anonymous")) -> dict:
        if "select" not in body or not isinstance(body["select"], bool):
            raise InvalidError("toggle body needs a boolean 'select'")
        staging = workspace.sessions.toggle_block(session_id, x_user_id,
                                                  block_id, body["select"])
        return {"session_id": session_id, "staging": sorted(staging)}

    @app.post("/sessions/{session_id}/messages/{message_id}/regenerate")
    def regenerate(session_id: str, message_id: str,
                   x_user_id: str = Header(default="anonymous")) -> dict:
        message = workspace.sessions.regenerate(session_id, x_user_id, message_id)
        return message.to_dict()

    @app.post("/sessions/{session_id}/messages/{message_id}/rate")
    def rate(session_id: str, message_id: str, body: dict,
             x_user_id: str = Header(default="anonymous")) -> dict:
        if "liked" not in body or not isinstance(body["liked"], bool):
            raise InvalidError("rate body needs a boolean 'liked'")
        workspace.sessions.rate(session_id, x_user_id, message_id, body["liked"])
        session = workspace.sessions.get_session(session_id)
        return {"message_id": message_id, "rating": session.ratings[message_id]}

    @app.post("/sessions/{session_id}/events", status_code=201)
    def record_event(session_id: str, body: dict,
                     x_user_id: str = Header(default="anonymous")) -> dict:
        try:
            kind = EventKind(body.get("kind", ""))
        except ValueError:
            raise InvalidError(f"unknown event kind {body.get('kind')!r}")
        event = workspace.sessions.record_gesture(
            session_id, x_user_id, kind, body.get("payload") or {})
        return event.to_dict()

    @app.post("/sessions/{session_id}/documents")
    def add_document(session_id: str, body: dict,
                     x_user_id: str = Header(default="anonymous")) -> dict:
        document_id = body.get("document_id", "")
        corpus = workspace.sessions.add_document(session_id, x_user_id, document_id)
        return {"session_id": session_id, "corpus": sorted(corpus)}

    # --- reports ---------------------------------------------------------------

    @app.post("/reports", status_code=201)
    def create_report(body: dict) -> dict:
        report = workspace.reports.create_report(
            session_id=body.get("session_id", ""), title=body.get("title", ""))
        return report.to_dict()

    @app.get("/reports")
    def list_reports() -> dict:
        return {"reports": [
            {"report_id": r.report_id, "session_id": r.session_id, "title": r.title}
            for r in workspace.reports.list_reports()
        ]}

    @app.get("/reports/{report_id}")
    def get_report(report_id: str) -> dict:
        return workspace.reports.get(report_id).to_dict()

    @app.post("/reports/{report_id}/sections", status_code=201)
    def add_section(report_id: str, body: dict) -> dict:
        report = workspace.reports.add_section(
            report_id, heading=body.get("heading", ""),
            instruction=body.get("instruction", ""))
        return report.to_dict()

    @app.post("/reports/{report_id}/sections/{section_id}/blocks")
    def assign_block(report_id: str, section_id: str, body: dict) -> dict:
        report = workspace.reports.assign_block(
            report_id, section_id, body.get("block_id", ""),
            int(body.get("position", 0)))
        return report.to_dict()

    @app.delete("/reports/{report_id}/sections/{section_id}/blocks/{block_id}")
    def unassign_block(report_id: str, section_id: str, block_id: str) -> dict:
        return workspace.reports.remove_block(report_id, section_id,
                                              block_id).to_dict()

    @app.put("/reports/{report_id}/sections/{section_id}/instruction")
    def set_instruction(report_id: str, section_id: str, body: dict) -> dict:
        return workspace.reports.set_instruction(
            report_id, section_id, body.get("text", "")).to_dict()

    @app.put("/reports/{report_id}/sections/{section_id}/draft")
    def edit_draft(report_id: str, section_id: str, body: dict) -> dict:
        return workspace.reports.edit_draft(
            report_id, section_id, body.get("text", "")).to_dict()

    @app.post("/reports/{report_id}/sections/{section_id}/generate")
    def generate_section(report_id: str, section_id: str) -> dict:
        return workspace.reports.generate_section(report_id, section_id).to_dict()

    @app.get("/reports/{report_id}/export")
    def export_report(report_id: str, format: str = "md") -> Response:
        data = workspace.reports.export_report(report_id, format)
        media = "text/html" if format == "html" else "text/markdown"
        return Response(content=data, media_type=f"{media}; charset=utf-8")

    # --- evaluation and log export ---------------------------------------------

    @app.post("/eval/run")
    def eval_run(body: dict) -> dict:
        strategies = body.get("strategies") or ["naive", "label", "symbiotic"]
        scripts: list[tuple[SessionScript, str, str]] = []
        for i, record in enumerate(body.get("scripts") or []):
            raw = json.dumps(record, indent=2)
            scripts.append((SessionScript.from_dict(record, name=f"inline-{i}"),
                            raw, f"inline-{i}"))
        if body.get("scripts_dir"):
            for path in sorted(Path(body["scripts_dir"]).glob("*.json")):
                script, raw = load_script(path)
                scripts.append((script, raw, str(path)))
        table = run_experiment(workspace.sessions, scripts, strategies)
        return {"table": table, "text": render_table(table)}

    @app.get("/events/export")
    def events_export() -> PlainTextResponse:
        log_path = workspace.event_log.path
        body = log_path.read_text(encoding="utf-8") if log_path.exists() else ""
        return PlainTextResponse(content=body, media_type="application/x-ndjson")

    return app


def build_workspace(config: ServiceConfig) -> Workspace:
    """Assemble a workspace from service configuration."""
    adapters = AdapterSet.from_config(config.adapters,
                                      base_dir=Path(config.data_dir))
    return Workspace(
        data_dir=config.data_dir,
        adapters=adapters,
        llm=build_llm(config.llm),
        embedder=build_embedder(config.embedder),
        k=config.k,
    )


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(build_workspace(config))
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
