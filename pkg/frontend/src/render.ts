/** Layout rendering: colored, labeled rectangles on a scaled canvas.
 *
 * The only math here is the affine map from normalized coordinates to
 * pixels; relations and consistency always come from the service.
 */

import type { LayoutJson } from "./types.js";

/** Deterministic category -> HSL color so candidates are comparable. */
export function categoryColor(name: string): string {
  let hash = 0;
  for (const ch of name) hash = (hash * 31 + ch.charCodeAt(0)) >>> 0;
  const hue = hash % 360;
  return `hsl(${hue}, 65%, 70%)`;
}

export interface RenderOptions {
  width: number;
  document?: Document;
}

export function renderLayout(layout: LayoutJson, options: RenderOptions): HTMLElement {
  const doc = options.document ?? document;
  const [canvasW, canvasH] = layout.canvas_px;
  const scale = options.width / canvasW;
  const root = doc.createElement("div");
  root.className = "layout-canvas";
  root.style.position = "relative";
  root.style.width = `${canvasW * scale}px`;
  root.style.height = `${canvasH * scale}px`;
  root.style.background = "#ffffff";
  root.style.border = "1px solid #ccc";
  for (const [index, component] of layout.components.entries()) {
    const [x, y, w, h] = component.bbox;
    const el = doc.createElement("div");
    el.className = "layout-box";
    el.dataset.category = component.category;
    el.dataset.index = String(index);
    el.style.position = "absolute";
    el.style.left = `${x * canvasW * scale}px`;
    el.style.top = `${y * canvasH * scale}px`;
    el.style.width = `${w * canvasW * scale}px`;
    el.style.height = `${h * canvasH * scale}px`;
    el.style.background = categoryColor(component.category);
    el.style.border = "1px solid rgba(0,0,0,0.35)";
    el.style.overflow = "hidden";
    el.style.fontSize = "10px";
    el.textContent = component.category;
    root.appendChild(el);
  }
  return root;
}

/** A translucent suggestion box the user can accept or discard. */
export function renderGhost(
  box: [number, number, number, number],
  category: string,
  canvasPx: [number, number],
  scale: number,
  doc: Document = document,
): HTMLElement {
  const [x, y, w, h] = box;
  const [canvasW, canvasH] = canvasPx;
  const el = doc.createElement("div");
  el.className = "ghost-box";
  el.dataset.category = category;
  el.style.position = "absolute";
  el.style.left = `${x * canvasW * scale}px`;
  el.style.top = `${y * canvasH * scale}px`;
  el.style.width = `${w * canvasW * scale}px`;
  el.style.height = `${h * canvasH * scale}px`;
  el.style.background = categoryColor(category);
  el.style.opacity = "0.5";
  el.style.border = "2px dashed #333";
  el.textContent = category;
  return el;
}
