/** Wires the store, API client, gestures, and panes into one page. */

import { ApiClient, ApiError, BlockResolver, describeError } from "./api.js";
import { renderChat, type ResultRow } from "./chat.js";
import { renderDocuments } from "./documents.js";
import { el, button, snippet } from "./dom.js";
import { GestureDispatcher } from "./gestures.js";
import { renderReportBuilder } from "./reportBuilder.js";
import { initialState, Store, type AppState, type TabName } from "./state.js";
import { renderStaging } from "./staging.js";
import { renderValidation, snapshotOf } from "./validation.js";
import { renderViewer } from "./viewer.js";
import type { Block, EditKind, Report, RetrievalItem, Snapshot } from "./types.js";

export interface AppConfig {
  baseUrl?: string;
  userId?: string;
  strategy?: string;
}

const TABS: Array<{ name: TabName; label: string }> = [
  { name: "conversation", label: "Conversation" },
  { name: "report", label: "Report" },
  { name: "validation", label: "Validation" },
  { name: "documents", label: "All" },
];

export class App {
  readonly client: ApiClient;
  readonly store: Store;
  readonly resolver: BlockResolver;
  readonly gestures: GestureDispatcher;
  /** Last export bytes per format, kept for download retry and tests. */
  readonly exports: Record<string, string> = {};

  private pending = 0;
  private idleResolvers: Array<() => void> = [];
  private paneArea: HTMLElement;
  private bannerArea: HTMLElement;
  private sessionLabel: HTMLElement;
  private tabButtons = new Map<TabName, HTMLButtonElement>();

  constructor(root: HTMLElement, config: AppConfig = {}) {
    this.client = new ApiClient(config.baseUrl ?? "", config.userId ?? "anonymous");
    this.store = new Store(initialState());
    this.resolver = new BlockResolver(this.client);
    this.gestures = new GestureDispatcher(this.client, this.store, this.resolver);
    if (config.strategy) this.defaultStrategy = config.strategy;

    root.textContent = "";
    const header = el("header", "app-header");
    header.appendChild(el("h1", "app-title", "TandemRAG"));
    const nav = el("nav", "tabs");
    for (const tab of TABS) {
      const node = button(`tab tab-${tab.name}`, tab.label, () => this.openTab(tab.name));
      node.dataset.tab = tab.name;
      this.tabButtons.set(tab.name, node);
      nav.appendChild(node);
    }
    header.appendChild(nav);
    this.sessionLabel = el("span", "session-label");
    header.appendChild(this.sessionLabel);
    root.appendChild(header);

    this.bannerArea = el("div", "banner-area");
    root.appendChild(this.bannerArea);
    this.paneArea = el("main", "pane-area");
    root.appendChild(this.paneArea);

    this.store.subscribe(() => this.render());
  }

  private defaultStrategy = "symbiotic";

  /** Loads documents, opens a session over the whole corpus, shows page one. */
  async init(): Promise<void> {
    const { documents } = await this.client.listDocuments();
    const session = await this.client.createSession({ strategy: this.defaultStrategy });
    this.store.set({ documents, session });
    if (documents.length > 0) {
      await this.gestures.syncViewer(documents[0].document_id, 0, null);
    }
  }

  /** Resolves once every tracked handler has settled. */
  whenIdle(): Promise<void> {
    if (this.pending === 0) return Promise.resolve();
    return new Promise((resolve) => this.idleResolvers.push(resolve));
  }

  private track(work: () => Promise<void>): void {
    this.pending += 1;
    void (async () => {
      try {
        await work();
      } catch (err) {
        this.store.set({ banner: describeError(err) });
      } finally {
        this.pending -= 1;
        if (this.pending === 0) {
          const resolvers = this.idleResolvers;
          this.idleResolvers = [];
          for (const resolve of resolvers) resolve();
        }
      }
    })();
  }

  private openTab(tab: TabName): void {
    this.store.set({ activeTab: tab });
    if (tab === "report" && !this.store.state.report) this.loadReport();
  }

  // --- rendering ---------------------------------------------------------------

  private render(): void {
    const state = this.store.state;
    for (const [name, node] of this.tabButtons) {
      node.classList.toggle("tab-active", name === state.activeTab);
    }
    const session = state.session;
    this.sessionLabel.textContent = session
      ? `${session.strategy_name} session ${session.session_id}`
      : "connecting";

    this.bannerArea.textContent = "";
    if (state.banner) {
      const banner = el("div", "error-banner");
      banner.appendChild(el("span", "banner-text", state.banner));
      banner.appendChild(
        button("banner-dismiss", "dismiss", () => this.store.set({ banner: null })),
      );
      this.bannerArea.appendChild(banner);
    }

    this.paneArea.textContent = "";
    if (state.activeTab === "conversation") this.renderConversation(state);
    else if (state.activeTab === "report") this.renderReport(state);
    else if (state.activeTab === "validation") this.renderValidationTab(state);
    else this.renderDocumentsTab(state);
  }

  private renderConversation(state: AppState): void {
    const layout = el("div", "layout-three");
    const viewerPane = el("section", "pane viewer-pane");
    const chatPane = el("section", "pane chat-pane");
    const stagingPane = el("section", "pane staging-pane");
    layout.appendChild(viewerPane);
    layout.appendChild(chatPane);
    layout.appendChild(stagingPane);
    this.paneArea.appendChild(layout);

    renderViewer(viewerPane, state.viewer, {
      onNavigate: (page) => this.track(() => this.gestures.navigatePage(page)),
      onZoom: (zoom) => this.gestures.setZoom(zoom),
      onToggleBlock: (id, select) => this.track(() => this.gestures.toggleBlock(id, select)),
      onRasterSize: (width) => this.gestures.setRasterSize(width),
      imageUrl: (doc, page) => this.client.pageImageUrl(doc, page),
      isSelected: (id) => this.isSelected(id),
    });

    renderChat(chatPane, state.session?.messages ?? [], {
      onQuery: (text) => this.track(() => this.runQuery(text)),
      onResultClick: (item) => this.track(() => this.gestures.clickResult(item)),
      onToggleBlock: (id, select) => this.track(() => this.gestures.toggleBlock(id, select)),
      onRate: (id, liked) => this.track(() => this.gestures.rateMessage(id, liked)),
      onRegenerate: (id) => this.track(() => this.gestures.regenerate(id)),
      isSelected: (id) => this.isSelected(id),
      resultRow: (item) => this.resultRow(item),
      ratingFor: (id) => state.session?.ratings[id] ?? null,
    });

    renderStaging(stagingPane, state.staging, {
      onToggleBlock: (id, select) => this.track(() => this.gestures.toggleBlock(id, select)),
      onOpenBlock: (block) => this.track(() => this.gestures.showBlock(block)),
    });
  }

  private renderReport(state: AppState): void {
    const pane = el("section", "pane report-pane");
    this.paneArea.appendChild(pane);
    renderReportBuilder(pane, state.report, state.staging, {
      onCreateReport: (title) => this.track(() => this.createReport(title)),
      onAddSection: (heading) => this.track(() => this.addSection(heading)),
      onAssign: (sectionId, blockId, position) =>
        this.track(() => this.assignBlock(sectionId, blockId, position)),
      onRemove: (sectionId, blockId) =>
        this.track(() => this.mutateReport((r) =>
          this.client.removeBlock(r.report_id, sectionId, blockId), sectionId)),
      onInstruction: (sectionId, text) =>
        this.track(() => this.mutateReport((r) =>
          this.client.setInstruction(r.report_id, sectionId, text), sectionId)),
      onDraftEdit: (sectionId, text) =>
        this.track(() => this.mutateReport((r) =>
          this.client.editDraft(r.report_id, sectionId, text), sectionId)),
      onGenerate: (sectionId) =>
        this.track(() => this.mutateReport((r) =>
          this.client.generateSection(r.report_id, sectionId), sectionId)),
      onExport: (format) => this.track(() => this.exportReport(format)),
      blockLabel: (blockId) => this.blockLabel(blockId),
      sectionError: (sectionId) => state.sectionErrors[sectionId] ?? null,
    });
  }

  private renderValidationTab(state: AppState): void {
    const pane = el("section", "pane validation-pane");
    this.paneArea.appendChild(pane);
    renderValidation(pane, state.validation, state.documents, {
      onPickDocument: (id) => this.loadValidation(id, state.validation.filter, 0),
      onFilter: (filter) => {
        const id = state.validation.documentId;
        if (id) this.loadValidation(id, filter, 0);
      },
      onNextBatch: () => {
        const { documentId, filter, nextCursor } = state.validation;
        if (documentId && nextCursor !== null) {
          this.loadValidation(documentId, filter, nextCursor);
        }
      },
      onEdit: (block, kind, after) => this.editBlock(block, kind, after),
      onReloadBlock: () => {
        const { documentId, filter, cursor } = state.validation;
        if (documentId) this.loadValidation(documentId, filter, cursor);
      },
      onDismissConflict: () =>
        this.store.set({ validation: { ...state.validation, conflict: null } }),
    });
  }

  private renderDocumentsTab(state: AppState): void {
    const pane = el("section", "pane documents-pane");
    this.paneArea.appendChild(pane);
    renderDocuments(pane, state.documents, {
      onOpen: (id) =>
        this.track(async () => {
          await this.gestures.syncViewer(id, 0, null);
          this.store.set({ activeTab: "conversation" });
        }),
      onAddToSession: (id) => this.track(() => this.gestures.addDocument(id)),
      onUpload: (filename, contentBase64) =>
        this.track(async () => {
          await this.client.uploadDocument(filename, contentBase64);
          const { documents } = await this.client.listDocuments();
          this.store.set({ documents });
        }),
      inCorpus: (id) => !!state.session?.corpus.includes(id),
    });
  }

  // --- conversation helpers -----------------------------------------------------

  private isSelected(blockId: string): boolean {
    return !!this.store.state.session?.staging.includes(blockId);
  }

  private async runQuery(text: string): Promise<void> {
    await this.gestures.sendQuery(text);
    await this.resolveLatestRetrieval();
  }

  /** Fill the resolver cache so the result table shows page and snippet. */
  private async resolveLatestRetrieval(): Promise<void> {
    const session = this.store.state.session;
    if (!session) return;
    for (let i = session.messages.length - 1; i >= 0; i--) {
      const result = session.messages[i].retrieval_result;
      if (!result) continue;
      for (const item of result.items) {
        await this.resolver.resolve(item.block_id, item.document_id);
      }
      break;
    }
    this.store.set({});
  }

  private resultRow(item: RetrievalItem): ResultRow {
    const block = this.resolver.get(item.block_id);
    const doc = this.store.state.documents.find(
      (d) => d.document_id === item.document_id,
    );
    return {
      item,
      source_name: doc?.source_name ?? item.document_id,
      page_index: block ? block.bbox.page_index : null,
      snippet: block ? snippet(block.text_repr) : "",
    };
  }

  private blockLabel(blockId: string): string {
    const block = this.resolver.get(blockId);
    if (!block) return blockId;
    return `${block.block_type} p. ${block.bbox.page_index + 1} ${snippet(block.text_repr, 60)}`;
  }

  // --- report helpers -------------------------------------------------------------

  private loadReport(): void {
    this.track(async () => {
      const session = this.store.state.session;
      const { reports } = await this.client.listReports();
      const mine = session
        ? reports.filter((r) => r.session_id === session.session_id)
        : reports;
      if (mine.length > 0) {
        this.store.set({ report: await this.client.getReport(mine[0].report_id) });
      }
    });
  }

  private async createReport(title: string): Promise<void> {
    const session = this.store.state.session;
    if (!session) return;
    const report = await this.client.createReport(session.session_id, title);
    this.store.set({ report });
  }

  private async addSection(heading: string): Promise<void> {
    await this.mutateReport((r) => this.client.addSection(r.report_id, heading), null);
  }

  private async assignBlock(
    sectionId: string,
    blockId: string,
    position: number,
  ): Promise<void> {
    await this.mutateReport(
      (report) => this.client.assignBlock(report.report_id, sectionId, blockId, position),
      sectionId,
    );
  }

  /** Applies one report mutation; backend rejections surface on the section. */
  private async mutateReport(
    operation: (report: Report) => Promise<Report>,
    sectionId: string | null,
  ): Promise<void> {
    const report = this.store.state.report;
    if (!report) return;
    try {
      const updated = await operation(report);
      const sectionErrors = { ...this.store.state.sectionErrors };
      if (sectionId) delete sectionErrors[sectionId];
      this.store.set({ report: updated, sectionErrors });
    } catch (err) {
      if (sectionId && err instanceof ApiError) {
        this.store.set({
          sectionErrors: { ...this.store.state.sectionErrors, [sectionId]: err.message },
        });
        return;
      }
      throw err;
    }
  }

  private async exportReport(format: "md" | "html"): Promise<void> {
    const report = this.store.state.report;
    if (!report) return;
    const text = await this.client.exportReport(report.report_id, format);
    this.exports[format] = text;
    const extension = format === "md" ? "md" : "html";
    const mime = format === "md" ? "text/markdown" : "text/html";
    triggerDownload(`${report.title || "report"}.${extension}`, text, mime);
  }

  // --- validation helpers ------------------------------------------------------------

  private loadValidation(
    documentId: string,
    filter: "needs_validation" | "all",
    cursor: number,
  ): void {
    this.track(async () => {
      const res = await this.client.pendingValidation(documentId, filter, cursor);
      this.resolver.prime(res.blocks);
      this.store.set({
        validation: {
          ...this.store.state.validation,
          documentId,
          filter,
          cursor,
          blocks: res.blocks,
          nextCursor: res.next_cursor,
          conflict: null,
        },
      });
    });
  }

  private editBlock(block: Block, kind: EditKind, after: Snapshot): void {
    this.track(async () => {
      try {
        const res = await this.client.postEdit(block.block_id, kind, snapshotOf(block), after);
        this.resolver.prime([res.block]);
        const validation = this.store.state.validation;
        const drafts = { ...validation.drafts };
        delete drafts[block.block_id];
        this.store.set({
          validation: {
            ...validation,
            blocks: validation.blocks.map((b) =>
              b.block_id === res.block.block_id ? res.block : b,
            ),
            drafts,
            conflict: null,
          },
        });
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          const validation = this.store.state.validation;
          this.store.set({
            validation: {
              ...validation,
              conflict: { blockId: block.block_id, message: err.message },
            },
          });
          return;
        }
        throw err;
      }
    });
  }
}

function triggerDownload(filename: string, text: string, mime: string): void {
  try {
    const blob = new Blob([text], { type: mime });
    const url = URL.createObjectURL(blob);
    const link = document.createElement("a");
    link.href = url;
    link.download = filename;
    link.click();
    URL.revokeObjectURL(url);
  } catch {
    // headless environments have no downloads; the bytes stay in exports
  }
}

export function createApp(root: HTMLElement, config: AppConfig = {}): App {
  return new App(root, config);
}
