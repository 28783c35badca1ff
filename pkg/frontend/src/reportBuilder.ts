/** Report tab: outline sections, drag staged blocks in, generate per section. */

import { el, button, snippet } from "./dom.js";
import type { Report, ReportSection, StagedBlock } from "./types.js";

export interface ReportHandlers {
  onCreateReport(title: string): void;
  onAddSection(heading: string): void;
  onAssign(sectionId: string, blockId: string, position: number): void;
  onRemove(sectionId: string, blockId: string): void;
  onInstruction(sectionId: string, text: string): void;
  onDraftEdit(sectionId: string, text: string): void;
  onGenerate(sectionId: string): void;
  onExport(format: "md" | "html"): void;
  blockLabel(blockId: string): string;
  sectionError(sectionId: string): string | null;
}

export function renderReportBuilder(
  root: HTMLElement,
  report: Report | null,
  staging: StagedBlock[],
  handlers: ReportHandlers,
): void {
  root.textContent = "";

  if (!report) {
    const form = el("form", "report-create");
    const title = el("input", "report-title");
    title.type = "text";
    title.placeholder = "Report title";
    const create = el("button", "report-create-send", "Create report");
    create.type = "submit";
    form.appendChild(title);
    form.appendChild(create);
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      if (title.value.trim()) handlers.onCreateReport(title.value.trim());
    });
    root.appendChild(form);
    return;
  }

  const header = el("div", "report-header");
  header.appendChild(el("h2", "report-title-label", report.title));
  header.appendChild(button("btn-export-md", "Export MD", () => handlers.onExport("md")));
  header.appendChild(button("btn-export-html", "Export HTML", () => handlers.onExport("html")));
  root.appendChild(header);

  const body = el("div", "report-body");
  const sections = el("div", "report-sections");
  for (const section of report.sections) {
    sections.appendChild(renderSection(section, handlers));
  }

  const addForm = el("form", "section-add");
  const heading = el("input", "section-heading");
  heading.type = "text";
  heading.placeholder = "New section heading";
  const add = el("button", "btn-add-section", "Add section");
  add.type = "submit";
  addForm.appendChild(heading);
  addForm.appendChild(add);
  addForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    if (heading.value.trim()) handlers.onAddSection(heading.value.trim());
  });
  sections.appendChild(addForm);
  body.appendChild(sections);

  body.appendChild(renderPalette(staging, handlers));
  root.appendChild(body);
}

function renderSection(section: ReportSection, handlers: ReportHandlers): HTMLElement {
  const node = el("div", "report-section");
  node.dataset.sectionId = section.section_id;

  const head = el("div", "section-head");
  head.appendChild(el("h3", "section-heading-label", section.heading));
  head.appendChild(el("span", "draft-revision", `rev ${section.draft_revision}`));
  node.appendChild(head);

  const error = handlers.sectionError(section.section_id);
  if (error) node.appendChild(el("div", "section-error", error));

  const list = el("ol", "section-blocks");
  section.block_ids.forEach((blockId, index) => {
    const item = el("li", "section-block");
    item.dataset.blockId = blockId;
    item.dataset.position = String(index);
    item.appendChild(el("span", "section-block-label", handlers.blockLabel(blockId)));
    item.appendChild(
      button("btn-remove-block", "remove", () =>
        handlers.onRemove(section.section_id, blockId),
      ),
    );
    list.appendChild(item);
  });
  wireDropTarget(list, section, handlers);
  node.appendChild(list);

  const instruction = el("input", "instruction-input");
  instruction.type = "text";
  instruction.placeholder = "Optional instruction for generation";
  instruction.value = section.instruction;
  instruction.addEventListener("change", () =>
    handlers.onInstruction(section.section_id, instruction.value),
  );
  node.appendChild(instruction);

  const draft = el("textarea", "draft-text");
  draft.value = section.draft_text;
  draft.addEventListener("change", () =>
    handlers.onDraftEdit(section.section_id, draft.value),
  );
  node.appendChild(draft);

  node.appendChild(
    button("btn-generate", "Generate", () => handlers.onGenerate(section.section_id)),
  );
  return node;
}

/** Dropping onto an assigned item inserts before it; anywhere else appends. */
function wireDropTarget(
  list: HTMLOListElement,
  section: ReportSection,
  handlers: ReportHandlers,
): void {
  list.addEventListener("dragover", (ev) => ev.preventDefault());
  list.addEventListener("drop", (ev) => {
    ev.preventDefault();
    const blockId = ev.dataTransfer?.getData("text/plain");
    if (!blockId) return;
    let position = section.block_ids.length;
    const target = (ev.target as HTMLElement).closest?.(".section-block");
    if (target instanceof HTMLElement && target.dataset.position !== undefined) {
      position = Number(target.dataset.position);
    }
    handlers.onAssign(section.section_id, blockId, position);
  });
}

function renderPalette(staging: StagedBlock[], handlers: ReportHandlers): HTMLElement {
  const palette = el("div", "report-palette");
  palette.appendChild(el("h3", "palette-title", "Staged blocks"));
  if (staging.length === 0) {
    palette.appendChild(el("div", "palette-empty", "Stage blocks in a conversation first."));
    return palette;
  }
  for (const block of staging) {
    const item = el("div", "palette-block");
    item.dataset.blockId = block.block_id;
    item.draggable = true;
    item.appendChild(el("span", "block-type", block.block_type));
    item.appendChild(el("span", "block-snippet", snippet(block.text_repr, 60)));
    item.addEventListener("dragstart", (ev) => {
      ev.dataTransfer?.setData("text/plain", block.block_id);
    });
    palette.appendChild(item);
  }
  return palette;
}
