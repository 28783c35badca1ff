/** Shared object builders for pane tests. */

import type {
  BBox,
  Block,
  Message,
  Report,
  ReportSection,
  RetrievalItem,
  RetrievalResult,
  StagedBlock,
} from "../src/types.js";

export function bbox(partial: Partial<BBox> = {}): BBox {
  return { page_index: 0, x0: 72, y0: 72, x1: 540, y1: 100, ...partial };
}

export function block(partial: Partial<Block> = {}): Block {
  return {
    block_id: "b-1",
    document_id: "d-1",
    bbox: bbox(),
    block_type: "Text",
    raw_payload: { text: "Pump test at N-7 ran six hours at 38 L/s." },
    text_repr: "Pump test at N-7 ran six hours at 38 L/s.",
    revision: 0,
    needs_validation: false,
    tombstoned: false,
    ...partial,
  };
}

export function stagedBlock(partial: Partial<StagedBlock> = {}): StagedBlock {
  return { ...block(), source_name: "field-notes.txt", ...partial };
}

export function retrievalItem(partial: Partial<RetrievalItem> = {}): RetrievalItem {
  return {
    block_id: "b-1",
    score: 0.8123,
    block_type: "Text",
    document_id: "d-1",
    ...partial,
  };
}

export function retrievalResult(partial: Partial<RetrievalResult> = {}): RetrievalResult {
  return {
    strategy_name: "symbiotic",
    query_as_issued: "pump test",
    augmented_query: null,
    items: [retrievalItem()],
    k_requested: 5,
    warning: null,
    ...partial,
  };
}

export function message(partial: Partial<Message> = {}): Message {
  return {
    message_id: "m-1",
    role: "user",
    content: "pump test",
    retrieval_result: null,
    cited_blocks: [],
    error: false,
    query_message_id: null,
    created_at: "2026-08-16T00:00:00Z",
    ...partial,
  };
}

export function section(partial: Partial<ReportSection> = {}): ReportSection {
  return {
    section_id: "s-1",
    heading: "Findings",
    instruction: "",
    block_ids: [],
    draft_text: "",
    draft_revision: 0,
    ...partial,
  };
}

export function report(partial: Partial<Report> = {}): Report {
  return {
    report_id: "r-1",
    session_id: "sess-1",
    title: "Survey summary",
    created_at: "2026-08-16T00:00:00Z",
    sections: [section()],
    ...partial,
  };
}
