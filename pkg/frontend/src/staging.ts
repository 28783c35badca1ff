/** Right pane: human-selected blocks grouped by source document. */

import { el, button, snippet } from "./dom.js";
import type { StagedBlock } from "./types.js";

export interface StagingGroup {
  source: string;
  blocks: StagedBlock[];
}

export function groupBySource(blocks: StagedBlock[]): StagingGroup[] {
  const bySource = new Map<string, StagedBlock[]>();
  for (const block of blocks) {
    const group = bySource.get(block.source_name) ?? [];
    group.push(block);
    bySource.set(block.source_name, group);
  }
  return [...bySource.keys()].sort().map((source) => ({
    source,
    blocks: bySource
      .get(source)!
      .slice()
      .sort((a, b) => (a.block_id < b.block_id ? -1 : 1)),
  }));
}

export interface StagingHandlers {
  onToggleBlock(blockId: string, select: boolean): void;
  onOpenBlock(block: StagedBlock): void;
}

export function renderStaging(
  root: HTMLElement,
  blocks: StagedBlock[],
  handlers: StagingHandlers,
): void {
  root.textContent = "";
  root.appendChild(el("h2", "staging-title", `Staging (${blocks.length})`));

  if (blocks.length === 0) {
    root.appendChild(el("div", "staging-empty", "Nothing staged yet."));
    return;
  }

  for (const group of groupBySource(blocks)) {
    const section = el("div", "staging-group");
    section.appendChild(el("h3", "staging-source", group.source));
    const list = el("ul", "staging-list");
    for (const block of group.blocks) {
      const item = el("li", "staging-item");
      item.dataset.blockId = block.block_id;
      item.appendChild(el("span", "block-type", block.block_type));
      item.appendChild(el("span", "block-page", `p. ${block.bbox.page_index + 1}`));
      item.appendChild(el("span", "block-snippet", snippet(block.text_repr)));
      item.appendChild(button("btn-open", "open", () => handlers.onOpenBlock(block)));
      item.appendChild(
        button("btn-unstage", "remove", () =>
          handlers.onToggleBlock(block.block_id, false),
        ),
      );
      list.appendChild(item);
    }
    section.appendChild(list);
    root.appendChild(section);
  }
}
