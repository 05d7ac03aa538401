import { ApiClient } from "./api.js";
import { escapeHtml, formatApiValue } from "./render.js";
import type { LeaderboardResponse } from "./types.js";

export interface WardRow {
  patientId: string;
  composite: number;
  n1: number;
  n2: number;
  n3: number;
  severity: number;
  /** True for the patient currently needing the most attention. */
  leader: boolean;
}

export interface WardBoardView {
  rows: WardRow[];
  skipped: string[];
  empty: boolean;
}

/** Shape a leaderboard response for the bed grid.  The first entry is the
 * leader — the ordering is the service's, untouched. */
export function wardBoardView(resp: LeaderboardResponse): WardBoardView {
  return {
    rows: resp.board.map((row, i) => ({
      patientId: row.patient_id,
      composite: row.composite,
      n1: row.n1,
      n2: row.n2,
      n3: row.n3,
      severity: row.severity,
      leader: i === 0,
    })),
    skipped: [...resp.skipped],
    empty: resp.board.length === 0,
  };
}

/** Render the board as a grid of bed cards; the leader is visually set
 * apart by class and an explicit badge. */
export function renderWardBoard(view: WardBoardView): string {
  if (view.empty) {
    return `<p class="ward-empty">No patients have enough checkpoints yet.</p>`;
  }
  const cards = view.rows
    .map(
      (row) =>
        `<article class="bed${row.leader ? " leader" : ""}" data-patient="${escapeHtml(row.patientId)}">` +
        (row.leader ? `<span class="leader-badge">most attention</span>` : "") +
        `<h4>${escapeHtml(row.patientId)}</h4>` +
        `<dl>` +
        `<dt>composite</dt><dd>${formatApiValue(row.composite)}</dd>` +
        `<dt>dynamics</dt><dd>${formatApiValue(row.n2)}</dd>` +
        `<dt>prognosis</dt><dd>${formatApiValue(row.n1)}</dd>` +
        `<dt>treatment</dt><dd>${formatApiValue(row.n3)}</dd>` +
        `<dt>severity</dt><dd>${formatApiValue(row.severity)}</dd>` +
        `</dl>` +
        `</article>`,
    )
    .join("");
  const skipped =
    view.skipped.length > 0
      ? `<p class="ward-skipped">Awaiting data: ${view.skipped
          .map(escapeHtml)
          .join(", ")}</p>`
      : "";
  return `<div class="ward-grid">${cards}</div>${skipped}`;
}

/** Periodic board refresh.  Failures keep the previous view on screen and
 * surface through lastError instead of interrupting the poll loop. */
export class WardBoardPoller {
  lastError: string | null = null;

  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly onUpdate: (view: WardBoardView) => void,
    private readonly intervalMs = 15_000,
  ) {}

  async refresh(): Promise<void> {
    try {
      const view = wardBoardView(await this.api.leaderboard());
      this.lastError = null;
      this.onUpdate(view);
    } catch (err) {
      this.lastError = String(err instanceof Error ? err.message : err);
    }
  }

  start(): void {
    if (this.timer !== null) return;
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
