/** Typed HTTP client; the UI talks to the service through this and nothing else. */

import type {
  Block,
  DocumentDetail,
  DocumentSummary,
  EditKind,
  EventKind,
  InteractionEvent,
  Message,
  PageBlocks,
  PendingBlocks,
  Report,
  ReportSummary,
  Session,
  Snapshot,
  StagedBlock,
  UploadJob,
} from "./types.js";

export interface ApiErrorBody {
  code: string;
  message: string;
  detail: unknown;
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: unknown;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.status = status;
    this.code = body.code;
    this.detail = body.detail;
  }
}

export function describeError(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  if (err instanceof Error) return err.message;
  return String(err);
}

async function toApiError(res: Response): Promise<ApiError> {
  let body: ApiErrorBody = {
    code: "Internal",
    message: `request failed with status ${res.status}`,
    detail: null,
  };
  try {
    const parsed = await res.json();
    if (parsed && typeof parsed.message === "string") {
      body = {
        code: typeof parsed.code === "string" ? parsed.code : "Internal",
        message: parsed.message,
        detail: parsed.detail ?? null,
      };
    }
  } catch {
    // non-JSON error body, keep the generic message
  }
  return new ApiError(res.status, body);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    readonly userId: string = "anonymous",
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json", "X-User-Id": this.userId },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) throw await toApiError(res);
    return (await res.json()) as T;
  }

  private async requestText(path: string): Promise<string> {
    const res = await fetch(this.baseUrl + path, {
      headers: { "X-User-Id": this.userId },
    });
    if (!res.ok) throw await toApiError(res);
    return res.text();
  }

  health(): Promise<{ status: string; documents: number }> {
    return this.request("GET", "/health");
  }

  // --- documents -------------------------------------------------------------

  listDocuments(): Promise<{ documents: DocumentSummary[] }> {
    return this.request("GET", "/documents");
  }

  getDocument(documentId: string): Promise<DocumentDetail> {
    return this.request("GET", `/documents/${documentId}`);
  }

  pageBlocks(documentId: string, pageIndex: number): Promise<PageBlocks> {
    return this.request("GET", `/documents/${documentId}/pages/${pageIndex}/blocks`);
  }

  pageImageUrl(documentId: string, pageIndex: number): string {
    return `${this.baseUrl}/documents/${documentId}/pages/${pageIndex}/image`;
  }

  uploadDocument(
    filename: string,
    contentBase64: string,
  ): Promise<{ document: DocumentDetail; job: UploadJob }> {
    return this.request("POST", "/documents", {
      filename,
      content_base64: contentBase64,
    });
  }

  // --- validation ------------------------------------------------------------

  postEdit(
    blockId: string,
    editKind: EditKind,
    before: Snapshot,
    after: Snapshot,
  ): Promise<{ block: Block; edit_id: string }> {
    return this.request("POST", `/blocks/${blockId}/edits`, {
      edit_kind: editKind,
      before,
      after,
    });
  }

  pendingValidation(
    documentId: string,
    filter: string = "needs_validation",
    cursor: number = 0,
    pageSize?: number,
  ): Promise<PendingBlocks> {
    const params = new URLSearchParams({
      document_id: documentId,
      filter,
      cursor: String(cursor),
    });
    if (pageSize !== undefined) params.set("page_size", String(pageSize));
    return this.request("GET", `/validation/pending?${params.toString()}`);
  }

  // --- sessions ----------------------------------------------------------------

  createSession(opts: { strategy?: string; corpus?: string[] } = {}): Promise<Session> {
    return this.request("POST", "/sessions", opts);
  }

  getSession(sessionId: string): Promise<Session> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  getStaging(
    sessionId: string,
  ): Promise<{ session_id: string; staging: string[]; blocks: StagedBlock[] }> {
    return this.request("GET", `/sessions/${sessionId}/staging`);
  }

  postQuery(
    sessionId: string,
    query: string,
  ): Promise<{ retrieval: Message; assistant: Message }> {
    return this.request("POST", `/sessions/${sessionId}/query`, { query });
  }

  toggleBlock(
    sessionId: string,
    blockId: string,
    select: boolean,
  ): Promise<{ session_id: string; staging: string[] }> {
    return this.request("POST", `/sessions/${sessionId}/blocks/${blockId}/toggle`, {
      select,
    });
  }

  regenerate(sessionId: string, messageId: string): Promise<Message> {
    return this.request("POST", `/sessions/${sessionId}/messages/${messageId}/regenerate`);
  }

  rateMessage(
    sessionId: string,
    messageId: string,
    liked: boolean,
  ): Promise<{ message_id: string; rating: string }> {
    return this.request("POST", `/sessions/${sessionId}/messages/${messageId}/rate`, {
      liked,
    });
  }

  recordEvent(
    sessionId: string,
    kind: EventKind,
    payload: Record<string, unknown>,
  ): Promise<InteractionEvent> {
    return this.request("POST", `/sessions/${sessionId}/events`, { kind, payload });
  }

  addDocumentToSession(
    sessionId: string,
    documentId: string,
  ): Promise<{ session_id: string; corpus: string[] }> {
    return this.request("POST", `/sessions/${sessionId}/documents`, {
      document_id: documentId,
    });
  }

  // --- reports -----------------------------------------------------------------

  createReport(sessionId: string, title: string): Promise<Report> {
    return this.request("POST", "/reports", { session_id: sessionId, title });
  }

  listReports(): Promise<{ reports: ReportSummary[] }> {
    return this.request("GET", "/reports");
  }

  getReport(reportId: string): Promise<Report> {
    return this.request("GET", `/reports/${reportId}`);
  }

  addSection(reportId: string, heading: string, instruction: string = ""): Promise<Report> {
    return this.request("POST", `/reports/${reportId}/sections`, {
      heading,
      instruction,
    });
  }

  assignBlock(
    reportId: string,
    sectionId: string,
    blockId: string,
    position: number,
  ): Promise<Report> {
    return this.request("POST", `/reports/${reportId}/sections/${sectionId}/blocks`, {
      block_id: blockId,
      position,
    });
  }

  removeBlock(reportId: string, sectionId: string, blockId: string): Promise<Report> {
    return this.request(
      "DELETE",
      `/reports/${reportId}/sections/${sectionId}/blocks/${blockId}`,
    );
  }

  setInstruction(reportId: string, sectionId: string, text: string): Promise<Report> {
    return this.request("PUT", `/reports/${reportId}/sections/${sectionId}/instruction`, {
      text,
    });
  }

  editDraft(reportId: string, sectionId: string, text: string): Promise<Report> {
    return this.request("PUT", `/reports/${reportId}/sections/${sectionId}/draft`, {
      text,
    });
  }

  generateSection(reportId: string, sectionId: string): Promise<Report> {
    return this.request("POST", `/reports/${reportId}/sections/${sectionId}/generate`);
  }

  exportReport(reportId: string, format: "md" | "html"): Promise<string> {
    return this.requestText(`/reports/${reportId}/export?format=${format}`);
  }

  // --- evaluation and log export -------------------------------------------------

  exportEvents(): Promise<string> {
    return this.requestText("/events/export");
  }
}

/** Lazily maps block ids to full records by scanning the owning document's pages. */
export class BlockResolver {
  private cache = new Map<string, Block>();
  private scanned = new Set<string>();

  constructor(private client: ApiClient) {}

  prime(blocks: Iterable<Block>): void {
    for (const block of blocks) this.cache.set(block.block_id, block);
  }

  get(blockId: string): Block | undefined {
    return this.cache.get(blockId);
  }

  async resolve(blockId: string, documentId: string): Promise<Block | null> {
    const hit = this.cache.get(blockId);
    if (hit) return hit;
    if (!this.scanned.has(documentId)) {
      const doc = await this.client.getDocument(documentId);
      for (let page = 0; page < doc.page_count; page++) {
        const pageBlocks = await this.client.pageBlocks(documentId, page);
        this.prime(pageBlocks.blocks);
      }
      this.scanned.add(documentId);
    }
    return this.cache.get(blockId) ?? null;
  }
}
