/** Small rendering helpers shared by every view module. */

/** Escape a string for safe interpolation into an HTML template. */
export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Render an API value exactly as received — numbers via String(), never
 * reformatted, so every digit on screen traces back to a response body. */
export function formatApiValue(value: number | string): string {
  return typeof value === "number" ? String(value) : value;
}
