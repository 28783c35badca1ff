/** Middle pane: query box plus the transcript.
 *
 * The three message roles render visually distinct: user queries, retrieval
 * result tables, and generated answers.
 */

import { el, button } from "./dom.js";
import type { Message, RetrievalItem } from "./types.js";

export interface ResultRow {
  item: RetrievalItem;
  source_name: string;
  page_index: number | null;
  snippet: string;
}

export interface ChatHandlers {
  onQuery(text: string): void;
  onResultClick(item: RetrievalItem): void;
  onToggleBlock(blockId: string, select: boolean): void;
  onRate(messageId: string, liked: boolean): void;
  onRegenerate(messageId: string): void;
  isSelected(blockId: string): boolean;
  resultRow(item: RetrievalItem): ResultRow;
  ratingFor(messageId: string): string | null;
}

const TABLE_HEADERS = ["Score", "Type", "Document", "Page", "Snippet", ""];

export function renderChat(
  root: HTMLElement,
  messages: Message[],
  handlers: ChatHandlers,
): void {
  root.textContent = "";

  const form = el("form", "query-form");
  const input = el("input", "query-input");
  input.type = "text";
  input.placeholder = "Ask about the corpus";
  const send = el("button", "query-send", "Send");
  send.type = "submit";
  form.appendChild(input);
  form.appendChild(send);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const text = input.value.trim();
    if (!text) return;
    input.value = "";
    handlers.onQuery(text);
  });
  root.appendChild(form);

  const log = el("div", "chat-log");
  for (const message of messages) log.appendChild(renderMessage(message, handlers));
  root.appendChild(log);
}

function renderMessage(message: Message, handlers: ChatHandlers): HTMLElement {
  if (message.role === "user") {
    const node = el("div", "msg msg-user");
    node.dataset.messageId = message.message_id;
    node.appendChild(el("div", "msg-content", message.content));
    return node;
  }
  if (message.role === "retrieval") return renderRetrieval(message, handlers);
  return renderAssistant(message, handlers);
}

function renderRetrieval(message: Message, handlers: ChatHandlers): HTMLElement {
  const node = el("div", "msg msg-retrieval");
  node.dataset.messageId = message.message_id;
  const result = message.retrieval_result;
  if (!result) {
    node.appendChild(el("div", "msg-content", message.content));
    return node;
  }

  node.appendChild(
    el("div", "retrieval-meta",
       `${result.strategy_name} retrieval, ${result.items.length} of ${result.k_requested}`),
  );
  if (result.warning) {
    node.appendChild(el("div", "retrieval-warning", result.warning));
  }

  const table = el("table", "retrieval-table");
  const thead = el("thead");
  const headRow = el("tr");
  for (const header of TABLE_HEADERS) headRow.appendChild(el("th", "", header));
  thead.appendChild(headRow);
  table.appendChild(thead);

  const tbody = el("tbody");
  for (const item of result.items) {
    const row = handlers.resultRow(item);
    const tr = el("tr", "result-row");
    tr.dataset.blockId = item.block_id;
    tr.appendChild(el("td", "cell-score", item.score.toFixed(4)));
    tr.appendChild(el("td", "cell-type", item.block_type));
    tr.appendChild(el("td", "cell-document", row.source_name));
    tr.appendChild(
      el("td", "cell-page", row.page_index === null ? "?" : String(row.page_index + 1)),
    );
    tr.appendChild(el("td", "cell-snippet", row.snippet));

    const selected = handlers.isSelected(item.block_id);
    const actions = el("td", "cell-actions");
    const toggle = button("btn-toggle", selected ? "unstage" : "stage", (ev) => {
      ev.stopPropagation();
      handlers.onToggleBlock(item.block_id, !selected);
    });
    actions.appendChild(toggle);
    tr.appendChild(actions);

    tr.addEventListener("click", () => handlers.onResultClick(item));
    tbody.appendChild(tr);
  }
  table.appendChild(tbody);
  node.appendChild(table);
  return node;
}

function renderAssistant(message: Message, handlers: ChatHandlers): HTMLElement {
  const node = el("div", message.error ? "msg msg-assistant msg-error" : "msg msg-assistant");
  node.dataset.messageId = message.message_id;
  node.appendChild(el("div", "msg-content", message.content));

  const footer = el("div", "msg-footer");
  footer.appendChild(
    el("span", "cited-count", `${message.cited_blocks.length} cited`),
  );
  const rating = handlers.ratingFor(message.message_id);
  if (rating) footer.appendChild(el("span", "rating-badge", rating));
  footer.appendChild(
    button("btn-like", "Like", () => handlers.onRate(message.message_id, true)),
  );
  footer.appendChild(
    button("btn-dislike", "Dislike", () => handlers.onRate(message.message_id, false)),
  );
  footer.appendChild(
    button("btn-regenerate", "Regenerate", () => handlers.onRegenerate(message.message_id)),
  );
  node.appendChild(footer);
  return node;
}
