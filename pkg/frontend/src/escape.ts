/** Inert-text helpers. All repository content (snippets, PoCs, reasoning)
 * renders through textContent or this escaper; nothing from the report is
 * ever interpreted as HTML. */

const REPLACEMENTS: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => REPLACEMENTS[ch] ?? ch);
}

/** True when the escaped form can no longer open a tag or break out of an
 * attribute — the property the snippet panels rely on. */
export function isInert(escaped: string): boolean {
  return !/[<>]/.test(escaped) && !escaped.includes('"') && !escaped.includes("'");
}
