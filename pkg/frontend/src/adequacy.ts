import { escapeHtml, formatApiValue } from "./render.js";

/** Inputs for the treatment-adequacy side panel.  Everything numeric comes
 * from API responses: the trend from the attention payload, the prognosis
 * count from the prognosis endpoint's acknowledgment. */
export interface AdequacyInputs {
  /** Severity trend slope from the attention payload. */
  severityTrend: number;
  /** Syndrome labels the active model can decide between. */
  syndromes: string[];
  /** Predicted directions of prognoses recorded this session. */
  prognosisDirections: string[];
  /** Service-confirmed number of prognoses on file, if any were recorded. */
  prognosisCount: number | null;
}

export interface AdequacyPanel {
  stem: { trend: number; glyph: "▲" | "▼" | "—" };
  leaves: string[];
  branches: { directions: string[]; count: number | null };
}

/** Condense the adequacy picture: a stem for where severity is heading,
 * leaves for candidate syndromes, branches for outstanding prognoses. */
export function adequacyPanel(inputs: AdequacyInputs): AdequacyPanel {
  const glyph = inputs.severityTrend > 0 ? "▲" : inputs.severityTrend < 0 ? "▼" : "—";
  return {
    stem: { trend: inputs.severityTrend, glyph },
    leaves: [...inputs.syndromes],
    branches: {
      directions: [...inputs.prognosisDirections],
      count: inputs.prognosisCount,
    },
  };
}

export function renderAdequacy(panel: AdequacyPanel): string {
  const leaves = panel.leaves
    .map((s) => `<span class="chip">${escapeHtml(s)}</span>`)
    .join("");
  const branches = panel.branches.directions
    .map((d) => `<li class="prognosis">${escapeHtml(d)}</li>`)
    .join("");
  return (
    `<aside class="adequacy">` +
    `<p class="stem" data-direction="${panel.stem.glyph}">` +
    `${panel.stem.glyph} trend ${formatApiValue(panel.stem.trend)}</p>` +
    `<div class="leaves">${leaves}</div>` +
    `<ul class="branches">${branches}</ul>` +
    (panel.branches.count !== null
      ? `<p class="branch-count">${formatApiValue(panel.branches.count)} on file</p>`
      : "") +
    `</aside>`
  );
}
