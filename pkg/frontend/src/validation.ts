/** Validation tab: per-kind review editors over a document's blocks.
 *
 * Each save sends one edit with before/after snapshots; a 409 conflict opens
 * a reload-and-retry dialog and never discards the local draft.
 */

import { el, button } from "./dom.js";
import type { ValidationState } from "./state.js";
import type { Block, BlockType, DocumentSummary, EditKind, Snapshot } from "./types.js";

const BLOCK_TYPES: BlockType[] = [
  "Title", "Text", "Table", "Figure", "Formula", "Caption", "Other",
];

export function snapshotOf(block: Block): Snapshot {
  return {
    exists: true,
    block_type: block.block_type,
    bbox: block.bbox,
    raw_payload: block.raw_payload,
    tombstoned: block.tombstoned,
  };
}

export interface ValidationHandlers {
  onPickDocument(documentId: string): void;
  onFilter(filter: "needs_validation" | "all"): void;
  onNextBatch(): void;
  onEdit(block: Block, kind: EditKind, after: Snapshot): void;
  onReloadBlock(blockId: string): void;
  onDismissConflict(): void;
}

function draftValue(
  state: ValidationState,
  blockId: string,
  field: string,
  fallback: string,
): string {
  return state.drafts[blockId]?.[field] ?? fallback;
}

function setDraft(state: ValidationState, blockId: string, field: string, value: string): void {
  const drafts = state.drafts[blockId] ?? (state.drafts[blockId] = {});
  drafts[field] = value;
}

function draftInput(
  state: ValidationState,
  blockId: string,
  field: string,
  fallback: string,
  className: string,
): HTMLInputElement {
  const input = el("input", className);
  input.type = "text";
  input.value = draftValue(state, blockId, field, fallback);
  input.addEventListener("input", () => setDraft(state, blockId, field, input.value));
  return input;
}

function draftTextarea(
  state: ValidationState,
  blockId: string,
  field: string,
  fallback: string,
  className: string,
): HTMLTextAreaElement {
  const area = el("textarea", className);
  area.value = draftValue(state, blockId, field, fallback);
  area.addEventListener("input", () => setDraft(state, blockId, field, area.value));
  return area;
}

export function parseTableCells(text: string): string[][] {
  return text
    .split("\n")
    .filter((line) => line.length > 0)
    .map((line) => line.split("|").map((cell) => cell.trim()));
}

export function formatTableCells(cells: unknown): string {
  if (!Array.isArray(cells)) return "";
  return cells
    .map((row) => (Array.isArray(row) ? row.join(" | ") : String(row)))
    .join("\n");
}

export function renderValidation(
  root: HTMLElement,
  state: ValidationState,
  documents: DocumentSummary[],
  handlers: ValidationHandlers,
): void {
  root.textContent = "";

  const bar = el("div", "validation-bar");
  const picker = el("select", "validation-doc");
  const placeholder = el("option", "", "Pick a document");
  placeholder.value = "";
  picker.appendChild(placeholder);
  for (const doc of documents) {
    const option = el("option", "", doc.source_name);
    option.value = doc.document_id;
    option.selected = doc.document_id === state.documentId;
    picker.appendChild(option);
  }
  picker.addEventListener("change", () => {
    if (picker.value) handlers.onPickDocument(picker.value);
  });
  bar.appendChild(picker);

  bar.appendChild(
    button(
      state.filter === "needs_validation" ? "btn-filter-pending tab-active" : "btn-filter-pending",
      "Needs review",
      () => handlers.onFilter("needs_validation"),
    ),
  );
  bar.appendChild(
    button(
      state.filter === "all" ? "btn-filter-all tab-active" : "btn-filter-all",
      "All blocks",
      () => handlers.onFilter("all"),
    ),
  );
  root.appendChild(bar);

  if (state.conflict) {
    const dialog = el("div", "conflict-dialog");
    dialog.appendChild(
      el("div", "conflict-message",
         `Edit conflict: ${state.conflict.message}. Reload the block and retry; your draft is kept.`),
    );
    const conflictBlockId = state.conflict.blockId;
    dialog.appendChild(
      button("btn-reload-retry", "Reload block", () => handlers.onReloadBlock(conflictBlockId)),
    );
    dialog.appendChild(button("btn-dismiss", "Dismiss", () => handlers.onDismissConflict()));
    root.appendChild(dialog);
  }

  if (!state.documentId) {
    root.appendChild(el("div", "validation-empty", "Pick a document to review."));
    return;
  }

  const list = el("div", "validation-list");
  for (const block of state.blocks) {
    list.appendChild(renderCard(block, state, handlers));
  }
  if (state.blocks.length === 0) {
    list.appendChild(el("div", "validation-empty", "No blocks match this filter."));
  }
  root.appendChild(list);

  root.appendChild(
    button("btn-next-batch", "Next batch", () => handlers.onNextBatch(),
           state.nextCursor === null),
  );
}

function renderCard(
  block: Block,
  state: ValidationState,
  handlers: ValidationHandlers,
): HTMLElement {
  const card = el("div", "validation-card");
  card.dataset.blockId = block.block_id;

  const head = el("div", "card-head");
  head.appendChild(el("span", "block-type", block.block_type));
  head.appendChild(el("span", "revision-badge", `rev ${block.revision}`));
  if (block.needs_validation) head.appendChild(el("span", "flag", "needs review"));
  if (block.tombstoned) head.appendChild(el("span", "flag flag-removed", "removed"));
  head.appendChild(el("span", "block-id", block.block_id));
  card.appendChild(head);

  if (block.tombstoned) return card;

  card.appendChild(renderBoundsEditor(block, state, handlers));
  card.appendChild(renderTypeEditor(block, state, handlers));
  card.appendChild(renderPayloadEditor(block, state, handlers));
  card.appendChild(
    button("btn-remove-block", "Remove block", () =>
      handlers.onEdit(block, "RemoveBlock", { ...snapshotOf(block), tombstoned: true }),
    ),
  );
  return card;
}

function renderBoundsEditor(
  block: Block,
  state: ValidationState,
  handlers: ValidationHandlers,
): HTMLElement {
  const row = el("div", "editor editor-bounds");
  const fields = ["x0", "y0", "x1", "y1"] as const;
  const inputs: Record<string, HTMLInputElement> = {};
  for (const field of fields) {
    const input = draftInput(state, block.block_id, field,
                             String(block.bbox[field]), `bbox-${field}`);
    inputs[field] = input;
    row.appendChild(el("label", "bbox-label", field));
    row.appendChild(input);
  }
  row.appendChild(
    button("btn-save-bounds", "Save bounds", () => {
      const bbox = {
        page_index: block.bbox.page_index,
        x0: Number(inputs.x0.value),
        y0: Number(inputs.y0.value),
        x1: Number(inputs.x1.value),
        y1: Number(inputs.y1.value),
      };
      handlers.onEdit(block, "AdjustBounds", { ...snapshotOf(block), bbox });
    }),
  );
  return row;
}

function renderTypeEditor(
  block: Block,
  state: ValidationState,
  handlers: ValidationHandlers,
): HTMLElement {
  const row = el("div", "editor editor-type");
  const select = el("select", "type-select");
  for (const type of BLOCK_TYPES) {
    const option = el("option", "", type);
    option.value = type;
    option.selected = type === draftValue(state, block.block_id, "block_type", block.block_type);
    select.appendChild(option);
  }
  select.addEventListener("change", () =>
    setDraft(state, block.block_id, "block_type", select.value),
  );
  row.appendChild(select);
  row.appendChild(
    button("btn-save-type", "Save type", () =>
      handlers.onEdit(block, "Reclassify", {
        ...snapshotOf(block),
        block_type: select.value as BlockType,
      }),
    ),
  );
  return row;
}

function renderPayloadEditor(
  block: Block,
  state: ValidationState,
  handlers: ValidationHandlers,
): HTMLElement {
  const row = el("div", "editor editor-payload");
  const payload = block.raw_payload;

  if (block.block_type === "Table") {
    const cells = draftTextarea(state, block.block_id, "cells",
                                formatTableCells(payload.cells), "table-cells");
    const caption = draftInput(state, block.block_id, "caption",
                               String(payload.caption ?? ""), "table-caption");
    row.appendChild(caption);
    row.appendChild(cells);
    row.appendChild(
      button("btn-save-table", "Save table", () =>
        handlers.onEdit(block, "CorrectTable", {
          ...snapshotOf(block),
          raw_payload: { caption: caption.value, cells: parseTableCells(cells.value) },
        }),
      ),
    );
    return row;
  }

  if (block.block_type === "Figure") {
    const description = draftTextarea(state, block.block_id, "description",
                                      String(payload.description ?? ""), "figure-desc");
    row.appendChild(description);
    row.appendChild(
      button("btn-save-figure", "Save description", () =>
        handlers.onEdit(block, "CorrectFigure", {
          ...snapshotOf(block),
          raw_payload: { description: description.value },
        }),
      ),
    );
    return row;
  }

  if (block.block_type === "Formula") {
    const latex = draftInput(state, block.block_id, "latex",
                             String(payload.latex ?? ""), "formula-latex");
    const description = draftTextarea(state, block.block_id, "description",
                                      String(payload.description ?? ""), "formula-desc");
    row.appendChild(latex);
    row.appendChild(description);
    row.appendChild(
      button("btn-save-formula", "Save formula", () =>
        handlers.onEdit(block, "CorrectFormula", {
          ...snapshotOf(block),
          raw_payload: { latex: latex.value, description: description.value },
        }),
      ),
    );
    return row;
  }

  const text = draftTextarea(state, block.block_id, "text",
                             String(payload.text ?? block.text_repr), "text-edit");
  row.appendChild(text);
  row.appendChild(
    button("btn-save-text", "Save text", () =>
      handlers.onEdit(block, "CorrectText", {
        ...snapshotOf(block),
        raw_payload: { text: text.value },
      }),
    ),
  );
  return row;
}
