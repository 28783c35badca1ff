/** Converts PDF-point bboxes into rendered-page pixel rectangles. */

import type { BBox } from "./types.js";

export interface OverlayRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

/** Pixels per PDF point for a page whose raster is rasterWidthPx wide.
 * Without a raster the page renders at its point dimensions (1 pt = 1 px). */
export function rasterScale(pageWidthPt: number, rasterWidthPx: number | null): number {
  if (!rasterWidthPx || pageWidthPt <= 0) return 1;
  return rasterWidthPx / pageWidthPt;
}

export function overlayRect(bbox: BBox, scale: number, zoom: number = 1): OverlayRect {
  const f = scale * zoom;
  return {
    left: bbox.x0 * f,
    top: bbox.y0 * f,
    width: (bbox.x1 - bbox.x0) * f,
    height: (bbox.y1 - bbox.y0) * f,
  };
}

export interface CssRect {
  left: string;
  top: string;
  width: string;
  height: string;
}

export function toCss(rect: OverlayRect): CssRect {
  const px = (v: number) => `${Math.round(v * 100) / 100}px`;
  return {
    left: px(rect.left),
    top: px(rect.top),
    width: px(rect.width),
    height: px(rect.height),
  };
}

export type OverlayKind = "retrieved" | "selected" | "plain";

/** Retrieved hits get a dashed border, human-selected blocks a double line. */
export function overlayBorder(kind: OverlayKind): string {
  if (kind === "selected") return "3px double #d4a800";
  if (kind === "retrieved") return "2px dashed #7c3aed";
  return "1px solid rgba(100, 116, 139, 0.35)";
}
