/** Response capture for the display-provenance check.
 *
 * The console's core invariant is that every number it shows came out of an
 * API response.  ResponseCapture keeps the parsed bodies; the extractors
 * below turn bodies and rendered views into comparable sets of numbers.
 */

const NUMBER_TOKEN = /-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?/g;

function walk(node: unknown, onNumber: (n: number) => void, onText: (s: string) => void): void {
  if (typeof node === "number") {
    onNumber(node);
    return;
  }
  if (typeof node === "string") {
    onText(node);
    return;
  }
  if (Array.isArray(node)) {
    for (const item of node) walk(item, onNumber, onText);
    return;
  }
  if (node !== null && typeof node === "object") {
    for (const value of Object.values(node)) walk(value, onNumber, onText);
  }
}

/** Numeric tokens embedded in a piece of text, as numbers. */
export function numericTokens(text: string): Set<number> {
  const out = new Set<number>();
  for (const match of text.matchAll(NUMBER_TOKEN)) {
    out.add(Number(match[0]));
  }
  return out;
}

export class ResponseCapture {
  readonly bodies: unknown[] = [];

  /** Bound so it can be handed directly to ApiClient's onResponse hook. */
  record = (body: unknown): void => {
    this.bodies.push(body);
  };

  /** Every number the service has sent: JSON numbers plus numeric tokens
   * inside JSON strings (dates, rendered sentences, prompts). */
  numbers(): Set<number> {
    const out = new Set<number>();
    for (const body of this.bodies) {
      walk(
        body,
        (n) => out.add(n),
        (s) => {
          for (const token of numericTokens(s)) out.add(token);
        },
      );
    }
    return out;
  }
}

/** Numbers visible in a rendered HTML fragment.  Tag markup and character
 * entities are stripped first so attributes and escapes don't count. */
export function displayedNumbers(html: string): Set<number> {
  const textOnly = html
    .replace(/<[^>]*>/g, " ")
    .replace(/&#?[a-zA-Z0-9]+;/g, " ");
  return numericTokens(textOnly);
}
