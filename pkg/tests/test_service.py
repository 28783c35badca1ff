"""HTTP layer: endpoint contracts, error mapping, transport neutrality."""

import base64
import time
from dataclasses import replace

import pytest
from fastapi.testclient import TestClient

from conftest import CORPUS, corpus_workspace_at
from tandemrag.adapters import AdapterSet, MockLayoutDetector
from tandemrag.clock import LogicalClock
from tandemrag.service import create_app
from tandemrag.validation import Snapshot
from tandemrag.workspace import Workspace


@pytest.fixture
def ws(tmp_path):
    return corpus_workspace_at(tmp_path / "data")


@pytest.fixture
def client(ws):
    return TestClient(create_app(ws))


def encode(data):
    return base64.b64encode(data).decode("ascii")


def text_block_id(ws):
    for document in ws.store.documents():
        for block in document.iter_blocks():
            if block.block_type.value == "Text" and block.text_repr:
                return block.block_id
    raise AssertionError("corpus has no text block")


def make_session(client, strategy="naive"):
    response = client.post("/sessions", json={"strategy": strategy},
                           headers={"X-User-Id": "u-vera"})
    assert response.status_code == 201
    return response.json()["session_id"]


# --- health and error mapping ---------------------------------------------------

def test_health_reports_document_count(client):
    body = client.get("/health").json()
    assert body == {"status": "ok", "documents": 3}


def test_error_codes_map_to_statuses(client, ws):
    assert client.get("/documents/d-missing").status_code == 404
    assert client.get("/documents/d-missing").json()["code"] == "NotFound"

    response = client.post("/documents", json={"filename": "x.pdf"})
    assert response.status_code == 400
    assert response.json()["code"] == "Invalid"

    block_id = text_block_id(ws)
    _, block = ws.store.get_block(block_id)
    stale = Snapshot.of_block(block).to_dict()
    good = {
        "edit_kind": "CorrectText",
        "before": stale,
        "after": {"raw_payload": {"text": "edited once"}},
    }
    assert client.post(f"/blocks/{block_id}/edits", json=good).status_code == 200
    conflict = client.post(f"/blocks/{block_id}/edits", json=dict(
        good, after={"raw_payload": {"text": "edited twice"}}))
    assert conflict.status_code == 409
    assert conflict.json()["code"] == "Conflict"


def test_adapter_outage_maps_to_503(tmp_path):
    adapters = replace(AdapterSet.reference(),
                       layout_detector=MockLayoutDetector({}, healthy=False))
    workspace = Workspace(tmp_path / "data", adapters=adapters,
                          clock=LogicalClock())
    client = TestClient(create_app(workspace))
    response = client.post("/documents", json={
        "filename": "note.txt", "content_base64": encode(b"some text")})
    assert response.status_code == 503
    assert response.json()["code"] == "AdapterUnavailable"
    assert response.json()["detail"]["job"]["state"] == "Failed"


def test_request_validation_failures_are_invalid(client):
    response = client.get("/validation/pending")
    assert response.status_code == 400
    assert response.json()["code"] == "Invalid"


# --- documents --------------------------------------------------------------------

def test_upload_synchronous(client):
    response = client.post("/documents", json={
        "filename": "memo.txt",
        "content_base64": encode(b"First paragraph.\n\nSecond paragraph.\n"),
    })
    assert response.status_code == 201
    body = response.json()
    assert body["document"]["processing_state"] == "Indexed"
    assert body["job"]["state"] == "Indexed"
    assert set(body["job"]["stage_times"]) == {
        "uploaded", "normalized", "layout_detected", "extracted", "indexed"}
    document_id = body["document"]["document_id"]
    assert client.get(f"/documents/{document_id}").json()["source_name"] == "memo.txt"


def test_upload_rejects_bad_base64(client):
    response = client.post("/documents", json={
        "filename": "memo.txt", "content_base64": "@@not-base64@@"})
    assert response.status_code == 400
    assert "base64" in response.json()["message"]


def test_upload_failure_surfaces_job(client):
    response = client.post("/documents", json={
        "filename": "empty.txt", "content_base64": encode(b"   ")})
    assert response.status_code == 400
    body = response.json()
    assert body["code"] == "Invalid"
    assert body["detail"]["job"]["state"] == "Failed"
    assert "failed" in body["detail"]["job"]["stage_times"]


def test_async_upload_polls_to_completion(client):
    response = client.post("/documents", json={
        "filename": "memo.txt",
        "content_base64": encode(b"Async paragraph.\n"),
        "wait": False,
    })
    assert response.status_code == 202
    upload_id = response.json()["upload_id"]
    assert upload_id == "u-0001"
    for _ in range(100):
        status = client.get(f"/uploads/{upload_id}").json()
        if status["job"] is not None:
            break
        time.sleep(0.05)
    assert status["job"]["state"] == "Indexed"
    assert client.get("/uploads/u-9999").status_code == 404


def test_list_documents(client):
    body = client.get("/documents").json()
    names = sorted(d["source_name"] for d in body["documents"])
    assert names == ["field-notes.txt", "mixed-blocks.pdf", "survey-report.pdf"]
    assert all(d["processing_state"] == "Indexed" for d in body["documents"])


def test_page_blocks_payload(client, ws):
    document = next(d for d in ws.store.documents()
                    if d.source_name == "survey-report.pdf")
    response = client.get(f"/documents/{document.document_id}/pages/0/blocks")
    body = response.json()
    assert body["width"] == 612.0 and body["height"] == 792.0
    assert len(body["blocks"]) >= 1
    for block in body["blocks"]:
        assert list(block) == ["block_id", "document_id", "bbox", "block_type",
                               "raw_payload", "text_repr", "revision",
                               "needs_validation", "tombstoned"]
        assert block["bbox"]["page_index"] == 0
    missing = client.get(f"/documents/{document.document_id}/pages/9/blocks")
    assert missing.status_code == 404


def test_page_image_served_when_present(client, ws):
    document_id = ws.store.list_ids()[0]
    assert client.get(f"/documents/{document_id}/pages/0/image").status_code == 404
    raster_dir = ws.pages_dir / document_id
    raster_dir.mkdir(parents=True)
    fake_png = b"\x89PNG\r\n\x1a\n0000"
    (raster_dir / "0.png").write_bytes(fake_png)
    response = client.get(f"/documents/{document_id}/pages/0/image")
    assert response.status_code == 200
    assert response.content == fake_png
    assert response.headers["content-type"] == "image/png"


# --- validation -------------------------------------------------------------------

def test_post_edit_applies_and_reports_edit_id(client, ws):
    block_id = text_block_id(ws)
    _, block = ws.store.get_block(block_id)
    response = client.post(f"/blocks/{block_id}/edits", json={
        "edit_kind": "CorrectText",
        "editor_id": "u-vera",
        "before": Snapshot.of_block(block).to_dict(),
        "after": {"raw_payload": {"text": "corrected body"}},
    })
    assert response.status_code == 200
    body = response.json()
    assert body["edit_id"] == "edit-000001"
    assert body["block"]["revision"] == block.revision + 1
    assert body["block"]["text_repr"] == "corrected body"


def test_post_edit_unknown_kind(client, ws):
    response = client.post(f"/blocks/{text_block_id(ws)}/edits",
                           json={"edit_kind": "Repaint"})
    assert response.status_code == 400
    assert "unknown edit_kind" in response.json()["message"]


def test_pending_endpoint_paginates(client, ws):
    document = next(d for d in ws.store.documents()
                    if d.source_name == "mixed-blocks.pdf")
    body = client.get("/validation/pending", params={
        "document_id": document.document_id}).json()
    assert len(body["blocks"]) == 1
    assert body["blocks"][0]["needs_validation"] is True
    assert body["next_cursor"] is None
    paged = client.get("/validation/pending", params={
        "document_id": document.document_id, "filter": "all",
        "page_size": 3}).json()
    assert len(paged["blocks"]) == 3
    assert paged["next_cursor"] == 3


# --- sessions -----------------------------------------------------------------------

def test_session_round_trip(client):
    session_id = make_session(client, strategy="symbiotic")
    assert session_id == "s-0001"
    body = client.get(f"/sessions/{session_id}").json()
    assert body["strategy_name"] == "symbiotic"
    assert body["user_id"] == "u-vera"
    assert len(body["corpus"]) == 3
    listed = client.get("/sessions").json()["sessions"]
    assert [s["session_id"] for s in listed] == ["s-0001"]


def test_query_toggle_rate_flow(client):
    session_id = make_session(client)
    response = client.post(f"/sessions/{session_id}/query",
                           json={"query": "groundwater drawdown"},
                           headers={"X-User-Id": "u-vera"})
    assert response.status_code == 200
    body = response.json()
    items = body["retrieval"]["retrieval_result"]["items"]
    assert len(items) == 5
    assert body["assistant"]["role"] == "assistant"
    assert body["assistant"]["content"].startswith("Drawing on 5 source blocks")

    block_id = items[0]["block_id"]
    toggled = client.post(f"/sessions/{session_id}/blocks/{block_id}/toggle",
                          json={"select": True}, headers={"X-User-Id": "u-vera"})
    assert toggled.json()["staging"] == [block_id]
    bad = client.post(f"/sessions/{session_id}/blocks/{block_id}/toggle",
                      json={})
    assert bad.status_code == 400

    staging = client.get(f"/sessions/{session_id}/staging").json()
    assert staging["staging"] == [block_id]
    assert staging["blocks"][0]["block_id"] == block_id
    assert "source_name" in staging["blocks"][0]

    message_id = body["assistant"]["message_id"]
    rated = client.post(f"/sessions/{session_id}/messages/{message_id}/rate",
                        json={"liked": True}, headers={"X-User-Id": "u-vera"})
    assert rated.json() == {"message_id": message_id, "rating": "Like"}

    redo = client.post(f"/sessions/{session_id}/messages/{message_id}/regenerate",
                       headers={"X-User-Id": "u-vera"})
    assert redo.status_code == 200
    assert redo.json()["role"] == "assistant"
    assert len(redo.json()["cited_blocks"]) == 5


def test_record_event_endpoint(client):
    session_id = make_session(client)
    response = client.post(f"/sessions/{session_id}/events", json={
        "kind": "NavigatePage",
        "payload": {"document_id": "d-x", "page_index": 2},
    }, headers={"X-User-Id": "u-vera"})
    assert response.status_code == 201
    event = response.json()
    assert event["kind"] == "NavigatePage"
    assert event["payload"] == {"document_id": "d-x", "page_index": 2}
    bad = client.post(f"/sessions/{session_id}/events",
                      json={"kind": "Mystery", "payload": {}})
    assert bad.status_code == 400


def test_add_document_endpoint(client, ws):
    first = ws.store.list_ids()[0]
    response = client.post("/sessions", json={"corpus": [first]},
                           headers={"X-User-Id": "u-vera"})
    session_id = response.json()["session_id"]
    other = ws.store.list_ids()[1]
    widened = client.post(f"/sessions/{session_id}/documents",
                          json={"document_id": other},
                          headers={"X-User-Id": "u-vera"})
    assert widened.json()["corpus"] == sorted([first, other])
    missing = client.post(f"/sessions/{session_id}/documents",
                          json={"document_id": "d-missing"})
    assert missing.status_code == 404


# --- reports --------------------------------------------------------------------------

def test_report_flow_over_http(client, ws):
    session_id = make_session(client)
    created = client.post("/reports", json={
        "session_id": session_id, "title": "Basin Summary"})
    assert created.status_code == 201
    report_id = created.json()["report_id"]

    section = client.post(f"/reports/{report_id}/sections", json={
        "heading": "Levels", "instruction": "Summarize."})
    assert section.status_code == 201
    section_id = section.json()["sections"][0]["section_id"]

    block_id = text_block_id(ws)
    assigned = client.post(
        f"/reports/{report_id}/sections/{section_id}/blocks",
        json={"block_id": block_id, "position": 0})
    assert assigned.json()["sections"][0]["block_ids"] == [block_id]

    generated = client.post(f"/reports/{report_id}/sections/{section_id}/generate")
    assert generated.json()["sections"][0]["draft_text"] == \
        "Draft based on 1 curated blocks."

    edited = client.put(f"/reports/{report_id}/sections/{section_id}/draft",
                        json={"text": "Manual"})
    assert edited.json()["sections"][0]["draft_revision"] == 2

    instruction = client.put(
        f"/reports/{report_id}/sections/{section_id}/instruction",
        json={"text": "Be brief."})
    assert instruction.json()["sections"][0]["instruction"] == "Be brief."

    export = client.get(f"/reports/{report_id}/export")
    assert export.headers["content-type"].startswith("text/markdown")
    assert export.content == ws.reports.export_report(report_id, "md")
    html_export = client.get(f"/reports/{report_id}/export",
                             params={"format": "html"})
    assert html_export.headers["content-type"].startswith("text/html")
    assert html_export.content == ws.reports.export_report(report_id, "html")

    removed = client.delete(
        f"/reports/{report_id}/sections/{section_id}/blocks/{block_id}")
    assert removed.json()["sections"][0]["block_ids"] == []

    listed = client.get("/reports").json()["reports"]
    assert listed == [{"report_id": report_id, "session_id": session_id,
                       "title": "Basin Summary"}]


# --- evaluation and export --------------------------------------------------------------

def test_eval_run_inline_scripts(client):
    response = client.post("/eval/run", json={
        "strategies": ["naive", "label"],
        "scripts": [{
            "queries": ["groundwater drawdown"],
            "actions": [{"turn": 0, "op": "select_retrieved"}],
            "rating": 4,
        }],
    })
    assert response.status_code == 200
    body = response.json()
    rows = body["table"]["strategies"]
    assert [r["strategy"] for r in rows] == ["naive", "label"]
    assert all(r["mean_distance"] == 0.0 for r in rows)
    assert all(r["mean_satisfaction"] == 4.0 for r in rows)
    assert "Strategy" in body["text"]


def test_eval_run_scripts_dir(client, tmp_path):
    scripts_dir = tmp_path / "scripts"
    scripts_dir.mkdir()
    (scripts_dir / "a.json").write_text(
        '{"queries": ["recharge"], "rating": 5}', encoding="utf-8")
    response = client.post("/eval/run", json={
        "strategies": ["naive"], "scripts_dir": str(scripts_dir)})
    body = response.json()
    assert body["table"]["strategies"][0]["sessions"] == 1
    assert body["table"]["outcomes"][0]["satisfaction_rating"] == 5


def test_events_export_returns_raw_log(client, ws):
    session_id = make_session(client)
    client.post(f"/sessions/{session_id}/query", json={"query": "water"},
                headers={"X-User-Id": "u-vera"})
    response = client.get("/events/export")
    assert response.headers["content-type"].startswith("application/x-ndjson")
    assert response.text == ws.event_log.path.read_text(encoding="utf-8")
    assert response.text.count("\n") == ws.event_log.count()


# --- transport neutrality ------------------------------------------------------------------

def test_http_and_library_runs_persist_identically(tmp_path):
    http_ws = corpus_workspace_at(tmp_path / "http")
    lib_ws = corpus_workspace_at(tmp_path / "lib")
    client = TestClient(create_app(http_ws))

    session_id = make_session(client, strategy="symbiotic")
    client.post(f"/sessions/{session_id}/query",
                json={"query": "groundwater drawdown"},
                headers={"X-User-Id": "u-vera"})
    first = client.get(f"/sessions/{session_id}").json()
    block_id = first["messages"][1]["retrieval_result"]["items"][0]["block_id"]
    client.post(f"/sessions/{session_id}/blocks/{block_id}/toggle",
                json={"select": True}, headers={"X-User-Id": "u-vera"})
    client.post(f"/sessions/{session_id}/query", json={"query": "recharge"},
                headers={"X-User-Id": "u-vera"})

    session = lib_ws.sessions.create_session("u-vera", "symbiotic")
    lib_ws.sessions.post_query(session.session_id, "u-vera",
                               "groundwater drawdown")
    lib_ws.sessions.toggle_block(session.session_id, "u-vera", block_id, True)
    lib_ws.sessions.post_query(session.session_id, "u-vera", "recharge")

    http_events = http_ws.event_log.path.read_bytes()
    lib_events = lib_ws.event_log.path.read_bytes()
    assert http_events == lib_events
    http_session = client.get(f"/sessions/{session_id}").json()
    assert http_session == lib_ws.sessions.get_session(session.session_id).to_dict()
    http_snapshot = (tmp_path / "http" / "sessions" / f"{session_id}.json").read_bytes()
    lib_snapshot = (tmp_path / "lib" / "sessions" / f"{session_id}.json").read_bytes()
    assert http_snapshot == lib_snapshot
