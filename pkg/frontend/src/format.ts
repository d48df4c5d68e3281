// The single rendering rule for server numbers: the parsed JSON value,
// stringified, nothing else. Keeping one path makes "displayed number ===
// API number" checkable byte for byte.

export function fmtNumber(value: number | null | undefined): string {
  return value === null || value === undefined ? "n/a" : String(value);
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function numSpan(value: number | null | undefined, label = ""): string {
  const cls = label ? ` class="${escapeHtml(label)}"` : "";
  return `<span data-num${cls}>${fmtNumber(value)}</span>`;
}
