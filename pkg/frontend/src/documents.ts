/** All tab: every indexed document, plus upload and add-to-session controls. */

import { el, button } from "./dom.js";
import type { DocumentSummary } from "./types.js";

export interface DocumentsHandlers {
  onOpen(documentId: string): void;
  onAddToSession(documentId: string): void;
  onUpload(filename: string, contentBase64: string): void;
  inCorpus(documentId: string): boolean;
}

export function renderDocuments(
  root: HTMLElement,
  documents: DocumentSummary[],
  handlers: DocumentsHandlers,
): void {
  root.textContent = "";
  root.appendChild(el("h2", "documents-title", `All documents (${documents.length})`));

  const table = el("table", "documents-table");
  const head = el("tr");
  for (const header of ["Document", "Pages", "State", ""]) {
    head.appendChild(el("th", "", header));
  }
  const thead = el("thead");
  thead.appendChild(head);
  table.appendChild(thead);

  const tbody = el("tbody");
  for (const doc of documents) {
    const tr = el("tr", "document-row");
    tr.dataset.documentId = doc.document_id;
    tr.appendChild(el("td", "cell-name", doc.source_name));
    tr.appendChild(el("td", "cell-pages", String(doc.page_count)));
    tr.appendChild(el("td", "cell-state", doc.processing_state));
    const actions = el("td", "cell-actions");
    actions.appendChild(button("btn-open-doc", "open", () => handlers.onOpen(doc.document_id)));
    actions.appendChild(
      button(
        "btn-add-doc",
        handlers.inCorpus(doc.document_id) ? "in session" : "add to session",
        () => handlers.onAddToSession(doc.document_id),
        handlers.inCorpus(doc.document_id),
      ),
    );
    tr.appendChild(actions);
    tbody.appendChild(tr);
  }
  table.appendChild(tbody);
  root.appendChild(table);

  const form = el("form", "upload-form");
  const file = el("input", "upload-input");
  file.type = "file";
  const send = el("button", "upload-send", "Upload");
  send.type = "submit";
  form.appendChild(file);
  form.appendChild(send);
  form.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const picked = file.files && file.files[0];
    if (!picked) return;
    const buffer = await picked.arrayBuffer();
    handlers.onUpload(picked.name, bytesToBase64(new Uint8Array(buffer)));
  });
  root.appendChild(form);
}

export function bytesToBase64(bytes: Uint8Array): string {
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}
