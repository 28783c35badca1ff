/** Single app state object behind a plain subscribe/notify store.
 *
 * Everything here is rebuilt from server snapshots; a refresh loses nothing
 * but scroll position and unapplied validation drafts.
 */

import type { OverlayKind } from "./geometry.js";
import type {
  BBox,
  Block,
  DocumentSummary,
  Report,
  Session,
  StagedBlock,
} from "./types.js";

export interface OverlayBox {
  block_id: string;
  bbox: BBox;
  kind: OverlayKind;
}

export interface ViewerState {
  documentId: string | null;
  sourceName: string;
  pageIndex: number;
  pageCount: number;
  pageWidthPt: number;
  pageHeightPt: number;
  rasterWidthPx: number | null;
  zoom: number;
  overlays: OverlayBox[];
  focusedBlockId: string | null;
  scrollTop: number;
}

export type ValidationFilter = "needs_validation" | "all";

export interface ValidationState {
  documentId: string | null;
  filter: ValidationFilter;
  cursor: number;
  blocks: Block[];
  nextCursor: number | null;
  conflict: { blockId: string; message: string } | null;
  /** Unsaved editor values keyed by block id, kept across re-renders. */
  drafts: Record<string, Record<string, string>>;
}

export type TabName = "conversation" | "report" | "validation" | "documents";

export interface AppState {
  documents: DocumentSummary[];
  session: Session | null;
  staging: StagedBlock[];
  viewer: ViewerState;
  report: Report | null;
  validation: ValidationState;
  sectionErrors: Record<string, string>;
  banner: string | null;
  activeTab: TabName;
}

export function initialViewer(): ViewerState {
  return {
    documentId: null,
    sourceName: "",
    pageIndex: 0,
    pageCount: 0,
    pageWidthPt: 612,
    pageHeightPt: 792,
    rasterWidthPx: null,
    zoom: 1,
    overlays: [],
    focusedBlockId: null,
    scrollTop: 0,
  };
}

export function initialState(): AppState {
  return {
    documents: [],
    session: null,
    staging: [],
    viewer: initialViewer(),
    report: null,
    validation: {
      documentId: null,
      filter: "needs_validation",
      cursor: 0,
      blocks: [],
      nextCursor: null,
      conflict: null,
      drafts: {},
    },
    sectionErrors: {},
    banner: null,
    activeTab: "conversation",
  };
}

export type Listener = (state: AppState) => void;

export class Store {
  state: AppState;
  private listeners: Listener[] = [];

  constructor(state: AppState = initialState()) {
    this.state = state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  set(patch: Partial<AppState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of [...this.listeners]) listener(this.state);
  }
}
