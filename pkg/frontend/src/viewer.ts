/** Left pane: the page with block overlays, page navigation, and zoom. */

import { el, button } from "./dom.js";
import { overlayBorder, overlayRect, rasterScale, toCss } from "./geometry.js";
import type { ViewerState } from "./state.js";

export const ZOOM_LEVELS = [0.5, 0.75, 1, 1.5, 2];

export interface ViewerHandlers {
  onNavigate(pageIndex: number): void;
  onZoom(zoom: number): void;
  onToggleBlock(blockId: string, select: boolean): void;
  onRasterSize(widthPx: number): void;
  imageUrl(documentId: string, pageIndex: number): string;
  isSelected(blockId: string): boolean;
}

export function renderViewer(
  root: HTMLElement,
  viewer: ViewerState,
  handlers: ViewerHandlers,
): void {
  root.textContent = "";
  if (!viewer.documentId) {
    root.appendChild(el("div", "viewer-empty", "No document open."));
    return;
  }
  const documentId = viewer.documentId;

  const bar = el("div", "viewer-bar");
  bar.appendChild(
    button("page-prev", "‹", () => handlers.onNavigate(viewer.pageIndex - 1),
           viewer.pageIndex <= 0),
  );
  bar.appendChild(
    el("span", "page-label",
       `${viewer.sourceName} p. ${viewer.pageIndex + 1}/${viewer.pageCount}`),
  );
  bar.appendChild(
    button("page-next", "›", () => handlers.onNavigate(viewer.pageIndex + 1),
           viewer.pageIndex >= viewer.pageCount - 1),
  );

  const zoom = el("select", "zoom-select");
  for (const level of ZOOM_LEVELS) {
    const option = el("option", "", `${Math.round(level * 100)}%`);
    option.value = String(level);
    option.selected = level === viewer.zoom;
    zoom.appendChild(option);
  }
  zoom.addEventListener("change", () => handlers.onZoom(Number(zoom.value)));
  bar.appendChild(zoom);
  root.appendChild(bar);

  const scale = rasterScale(viewer.pageWidthPt, viewer.rasterWidthPx);
  const stageCss = toCss({
    left: 0,
    top: 0,
    width: viewer.pageWidthPt * scale * viewer.zoom,
    height: viewer.pageHeightPt * scale * viewer.zoom,
  });

  const scroller = el("div", "viewer-scroll");
  scroller.addEventListener("scroll", () => {
    viewer.scrollTop = scroller.scrollTop;
  });

  const stage = el("div", "page-stage");
  stage.style.position = "relative";
  stage.style.width = stageCss.width;
  stage.style.height = stageCss.height;

  if (viewer.rasterWidthPx !== null) {
    const image = el("img", "page-image");
    image.src = handlers.imageUrl(documentId, viewer.pageIndex);
    image.style.width = "100%";
    image.style.height = "100%";
    stage.appendChild(image);
  } else {
    // Probe for a raster; on load the stage re-renders at the measured scale.
    const probe = el("img", "page-image page-image-probe");
    probe.src = handlers.imageUrl(documentId, viewer.pageIndex);
    probe.style.width = "100%";
    probe.style.height = "100%";
    probe.addEventListener("load", () => {
      if (probe.naturalWidth > 0) handlers.onRasterSize(probe.naturalWidth);
    });
    probe.addEventListener("error", () => {
      probe.remove();
    });
    stage.appendChild(probe);
  }

  for (const box of viewer.overlays) {
    const rect = toCss(overlayRect(box.bbox, scale, viewer.zoom));
    const overlay = el("div", "overlay");
    overlay.dataset.blockId = box.block_id;
    overlay.dataset.kind = box.kind;
    overlay.style.position = "absolute";
    overlay.style.left = rect.left;
    overlay.style.top = rect.top;
    overlay.style.width = rect.width;
    overlay.style.height = rect.height;
    overlay.style.border = overlayBorder(box.kind);
    if (box.block_id === viewer.focusedBlockId) overlay.classList.add("overlay-focus");
    overlay.title = box.block_id;
    overlay.addEventListener("click", () => {
      handlers.onToggleBlock(box.block_id, !handlers.isSelected(box.block_id));
    });
    stage.appendChild(overlay);
  }

  scroller.appendChild(stage);
  root.appendChild(scroller);
  scroller.scrollTop = viewer.scrollTop;
}
