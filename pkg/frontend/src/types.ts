/** Wire types for the document intelligence service (snake_case JSON). */

export type BlockType =
  | "Title"
  | "Text"
  | "Table"
  | "Figure"
  | "Formula"
  | "Caption"
  | "Other";

export interface BBox {
  page_index: number;
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface Block {
  block_id: string;
  document_id: string;
  bbox: BBox;
  block_type: BlockType;
  raw_payload: Record<string, unknown>;
  text_repr: string;
  revision: number;
  needs_validation: boolean;
  tombstoned: boolean;
}

/** Staging endpoint enriches blocks with the owning document's name. */
export interface StagedBlock extends Block {
  source_name: string;
}

export interface DocumentSummary {
  document_id: string;
  source_name: string;
  page_count: number;
  processing_state: string;
}

export interface PageDetail {
  page_index: number;
  width: number;
  height: number;
}

export interface DocumentDetail extends DocumentSummary {
  pages: PageDetail[];
}

export interface PageBlocks {
  document_id: string;
  page_index: number;
  width: number;
  height: number;
  blocks: Block[];
}

export interface RetrievalItem {
  block_id: string;
  score: number;
  block_type: BlockType;
  document_id: string;
}

export interface RetrievalResult {
  strategy_name: string;
  query_as_issued: string;
  augmented_query: string | null;
  items: RetrievalItem[];
  k_requested: number;
  warning: string | null;
}

export interface CitedBlock {
  block_id: string;
  revision: number;
}

/** role is user | retrieval | assistant; retrieval messages carry the result. */
export interface Message {
  message_id: string;
  role: string;
  content: string;
  retrieval_result: RetrievalResult | null;
  cited_blocks: CitedBlock[];
  error: boolean;
  query_message_id: string | null;
  created_at: string;
}

export interface Session {
  session_id: string;
  user_id: string;
  strategy_name: string;
  created_at: string;
  corpus: string[];
  staging: string[];
  ratings: Record<string, string>;
  event_seq: number;
  message_seq: number;
  messages: Message[];
}

export type EventKind =
  | "SendQuery"
  | "ClickResult"
  | "SelectBlock"
  | "DeselectBlock"
  | "NavigatePage"
  | "AddDocument"
  | "Like"
  | "Dislike"
  | "Regenerate";

export interface InteractionEvent {
  event_id: string;
  session_id: string;
  user_id: string;
  kind: EventKind;
  payload: Record<string, unknown>;
  timestamp: string;
}

export type EditKind =
  | "Reclassify"
  | "AdjustBounds"
  | "AddBlock"
  | "RemoveBlock"
  | "CorrectText"
  | "CorrectTable"
  | "CorrectFigure"
  | "CorrectFormula";

/** Point-in-time block state sent as the before/after of an edit. */
export interface Snapshot {
  exists: boolean;
  document_id?: string | null;
  block_type?: BlockType | null;
  bbox?: BBox | null;
  raw_payload?: Record<string, unknown> | null;
  tombstoned?: boolean;
}

export interface PendingBlocks {
  blocks: Block[];
  next_cursor: number | null;
}

export interface ReportSection {
  section_id: string;
  heading: string;
  instruction: string;
  block_ids: string[];
  draft_text: string;
  draft_revision: number;
}

export interface Report {
  report_id: string;
  session_id: string;
  title: string;
  created_at: string;
  sections: ReportSection[];
}

export interface ReportSummary {
  report_id: string;
  session_id: string;
  title: string;
}

export interface UploadJob {
  document_id: string | null;
  state: string;
  [key: string]: unknown;
}
