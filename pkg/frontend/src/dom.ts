/** Tiny DOM builder helpers shared by the panes. */

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string = "",
  text: string = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function button(
  className: string,
  label: string,
  onClick: (ev: MouseEvent) => void,
  disabled: boolean = false,
): HTMLButtonElement {
  const node = el("button", className, label);
  node.type = "button";
  node.disabled = disabled;
  node.addEventListener("click", onClick);
  return node;
}

/** Single-line preview of a block's text for tables and lists. */
export function snippet(text: string, limit: number = 90): string {
  const flat = text.replace(/\s+/g, " ").trim();
  return flat.length <= limit ? flat : flat.slice(0, limit - 1) + "…";
}
