import { escapeHtml, formatApiValue } from "./render.js";
import type { SummaryResponse } from "./types.js";

export interface SummaryView {
  recordId: string;
  keyFields: { fieldId: string; rendered: string; highlight: boolean }[];
  chronology: {
    entries: {
      kind: string;
      date: string;
      attributes: Record<string, unknown>;
      flags: string[];
    }[];
    excluded: { kind: string; dateText: string; flag: string }[];
  };
  possibleErrors: { ruleId: string; message: string; note: string | null }[];
  /** Reviewer acknowledgment of the possible-error list.  Purely advisory:
   * nothing is gated on it. */
  acknowledged: boolean;
}

/** Shape a summary response into the three review sections. */
export function summaryView(resp: SummaryResponse): SummaryView {
  return {
    recordId: resp.record_id,
    keyFields: resp.key_fields.map((k) => ({
      fieldId: k.field_id,
      rendered: k.rendered,
      highlight: k.emphasis === "highlight",
    })),
    chronology: {
      entries: resp.chronology.entries.map((e) => ({
        kind: e.kind,
        date: e.date,
        attributes: e.attributes,
        flags: [...e.flags],
      })),
      excluded: resp.chronology.excluded.map((e) => ({
        kind: e.kind,
        dateText: e.date_text,
        flag: e.flag,
      })),
    },
    possibleErrors: resp.possible_errors.map((p) => ({
      ruleId: p.rule_id,
      message: p.message,
      note: p.likelihood_note,
    })),
    acknowledged: false,
  };
}

/** Mark the possible-error section as reviewed.  Never blocks saving or
 * any other action — it only flips the advisory flag. */
export function acknowledge(view: SummaryView): SummaryView {
  return { ...view, acknowledged: true };
}

function renderAttributes(attributes: Record<string, unknown>): string {
  const parts = Object.entries(attributes).map(
    ([key, value]) =>
      `${escapeHtml(key)}: ${escapeHtml(
        typeof value === "number" || typeof value === "string"
          ? formatApiValue(value)
          : String(value),
      )}`,
  );
  return parts.join("; ");
}

/** Render the three sections.  Possible errors appear as an inline notice
 * list — informational, non-modal, and save stays enabled throughout. */
export function renderSummary(view: SummaryView): string {
  const keyFields = view.keyFields
    .map((k) => {
      const rendered = escapeHtml(k.rendered);
      const body = k.highlight
        ? `<mark class="highlight">${rendered}</mark>`
        : rendered;
      return `<li data-field="${escapeHtml(k.fieldId)}">${body}</li>`;
    })
    .join("");

  const entries = view.chronology.entries
    .map((e) => {
      const flags = e.flags
        .map((f) => `<span class="flag">${escapeHtml(f)}</span>`)
        .join("");
      const attrs = renderAttributes(e.attributes);
      return (
        `<li class="event" data-kind="${escapeHtml(e.kind)}">` +
        `<time>${escapeHtml(e.date)}</time> ${escapeHtml(e.kind)}` +
        (attrs.length > 0 ? ` — ${attrs}` : "") +
        flags +
        `</li>`
      );
    })
    .join("");
  const excluded = view.chronology.excluded
    .map(
      (e) =>
        `<li class="excluded">${escapeHtml(e.kind)} (${escapeHtml(
          e.dateText,
        )}) <span class="flag">${escapeHtml(e.flag)}</span></li>`,
    )
    .join("");

  const errors = view.possibleErrors
    .map(
      (p) =>
        `<li class="notice" role="note" data-rule="${escapeHtml(p.ruleId)}">` +
        `${escapeHtml(p.message)}` +
        (p.note !== null ? ` <em>${escapeHtml(p.note)}</em>` : "") +
        `</li>`,
    )
    .join("");

  return (
    `<section class="key-fields"><h3>Key fields</h3><ul>${keyFields}</ul></section>` +
    `<section class="chronology"><h3>Chronology</h3><ol>${entries}</ol>` +
    (excluded.length > 0 ? `<ul class="excluded-events">${excluded}</ul>` : "") +
    `</section>` +
    `<section class="possible-errors"><h3>Possible errors</h3>` +
    `<ul>${errors.length > 0 ? errors : `<li class="notice none">none flagged</li>`}</ul>` +
    `<button data-action="acknowledge"${view.acknowledged ? " disabled" : ""}>` +
    `${view.acknowledged ? "Reviewed" : "Mark reviewed"}</button>` +
    `</section>` +
    `<button data-action="save">Save</button>`
  );
}
