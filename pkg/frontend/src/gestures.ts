/** Maps user gestures onto backend calls: one gesture, one logged event.
 *
 * Toggles update staging optimistically and reconcile against the server
 * response; every other view change is rebuilt from a fresh snapshot.
 */

import { ApiClient, BlockResolver } from "./api.js";
import type { OverlayKind } from "./geometry.js";
import type { OverlayBox, Store, ViewerState } from "./state.js";
import type { Block, RetrievalItem, Session } from "./types.js";

export class GestureDispatcher {
  constructor(
    private client: ApiClient,
    private store: Store,
    private resolver: BlockResolver,
  ) {}

  private requireSession(): Session {
    const session = this.store.state.session;
    if (!session) throw new Error("no active session");
    return session;
  }

  async sendQuery(text: string): Promise<void> {
    const session = this.requireSession();
    await this.client.postQuery(session.session_id, text);
    await this.refreshSession();
  }

  /** Log the click, then jump the viewer to the block's page and focus it. */
  async clickResult(item: RetrievalItem): Promise<void> {
    const session = this.requireSession();
    await this.client.recordEvent(session.session_id, "ClickResult", {
      block_id: item.block_id,
    });
    const block = await this.resolver.resolve(item.block_id, item.document_id);
    if (block) await this.showBlock(block);
  }

  async toggleBlock(blockId: string, select: boolean): Promise<void> {
    const session = this.requireSession();
    const staging = select
      ? [...new Set([...session.staging, blockId])].sort()
      : session.staging.filter((id) => id !== blockId);
    this.store.set({ session: { ...session, staging } });
    try {
      await this.client.toggleBlock(session.session_id, blockId, select);
      await this.refreshStaging();
    } catch (err) {
      this.store.set({ session });
      throw err;
    }
  }

  async navigatePage(pageIndex: number): Promise<void> {
    const session = this.requireSession();
    const viewer = this.store.state.viewer;
    if (!viewer.documentId) return;
    await this.client.recordEvent(session.session_id, "NavigatePage", {
      document_id: viewer.documentId,
      page_index: pageIndex,
    });
    await this.syncViewer(viewer.documentId, pageIndex, null);
  }

  async rateMessage(messageId: string, liked: boolean): Promise<void> {
    const session = this.requireSession();
    await this.client.rateMessage(session.session_id, messageId, liked);
    await this.refreshSession();
  }

  async regenerate(messageId: string): Promise<void> {
    const session = this.requireSession();
    await this.client.regenerate(session.session_id, messageId);
    await this.refreshSession();
  }

  async addDocument(documentId: string): Promise<void> {
    const session = this.requireSession();
    await this.client.addDocumentToSession(session.session_id, documentId);
    await this.refreshSession();
  }

  // --- snapshot refresh and viewer sync --------------------------------------

  async refreshSession(): Promise<void> {
    const sessionId = this.requireSession().session_id;
    const session = await this.client.getSession(sessionId);
    this.store.set({ session });
    await this.refreshStaging();
  }

  async refreshStaging(): Promise<void> {
    const sessionId = this.requireSession().session_id;
    const res = await this.client.getStaging(sessionId);
    this.resolver.prime(res.blocks);
    const session = this.store.state.session;
    this.store.set({
      staging: res.blocks,
      session: session ? { ...session, staging: res.staging } : session,
      viewer: this.withOverlayKinds(this.store.state.viewer, res.staging),
    });
  }

  /** Point the viewer at a document page and rebuild its overlays. */
  async syncViewer(
    documentId: string,
    pageIndex: number,
    focusedBlockId: string | null,
  ): Promise<void> {
    const page = await this.client.pageBlocks(documentId, pageIndex);
    this.resolver.prime(page.blocks);
    const doc = this.store.state.documents.find((d) => d.document_id === documentId);
    const staged = new Set(this.store.state.session?.staging ?? []);
    const retrieved = this.latestRetrievedIds();
    const overlays: OverlayBox[] = page.blocks
      .filter((block) => !block.tombstoned)
      .map((block) => ({
        block_id: block.block_id,
        bbox: block.bbox,
        kind: overlayKind(block.block_id, staged, retrieved),
      }));
    const current = this.store.state.viewer;
    const samePage =
      current.documentId === documentId && current.pageIndex === pageIndex;
    this.store.set({
      viewer: {
        ...current,
        documentId,
        sourceName: doc?.source_name ?? documentId,
        pageIndex,
        pageCount: doc?.page_count ?? pageIndex + 1,
        pageWidthPt: page.width,
        pageHeightPt: page.height,
        rasterWidthPx: samePage ? current.rasterWidthPx : null,
        overlays,
        focusedBlockId,
        scrollTop: samePage ? current.scrollTop : 0,
      },
    });
  }

  async showBlock(block: Block): Promise<void> {
    await this.syncViewer(block.document_id, block.bbox.page_index, block.block_id);
  }

  setZoom(zoom: number): void {
    this.store.set({ viewer: { ...this.store.state.viewer, zoom } });
  }

  setRasterSize(widthPx: number): void {
    const viewer = this.store.state.viewer;
    if (viewer.rasterWidthPx === widthPx) return;
    this.store.set({ viewer: { ...viewer, rasterWidthPx: widthPx } });
  }

  latestRetrievedIds(): Set<string> {
    const session = this.store.state.session;
    if (!session) return new Set();
    for (let i = session.messages.length - 1; i >= 0; i--) {
      const result = session.messages[i].retrieval_result;
      if (result) return new Set(result.items.map((item) => item.block_id));
    }
    return new Set();
  }

  private withOverlayKinds(viewer: ViewerState, stagedIds: string[]): ViewerState {
    const staged = new Set(stagedIds);
    const retrieved = this.latestRetrievedIds();
    return {
      ...viewer,
      overlays: viewer.overlays.map((box) => ({
        ...box,
        kind: overlayKind(box.block_id, staged, retrieved),
      })),
    };
  }
}

export function overlayKind(
  blockId: string,
  staged: Set<string>,
  retrieved: Set<string>,
): OverlayKind {
  if (staged.has(blockId)) return "selected";
  if (retrieved.has(blockId)) return "retrieved";
  return "plain";
}
