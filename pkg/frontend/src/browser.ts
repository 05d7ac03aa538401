import { escapeHtml } from "./render.js";
import type { AttentionResponse, ParameterSpecPayload } from "./types.js";

/** The six fixed browse actions.  Each resolves to a parameter list drawn
 * from the attention payload — membership is decided by the service's
 * group assignments, never recomputed here. */
export interface BrowserButton {
  index: 1 | 2 | 3 | 4 | 5 | 6;
  label: string;
  parameterIds: string[];
}

const LABELS: Record<BrowserButton["index"], string> = {
  1: "Trends over period",
  2: "Vital-organ key parameters",
  3: "Unusual patterns",
  4: "Extreme dynamics",
  5: "Threatening dynamics",
  6: "Previously viewed in similar context",
};

function schemaOrder(parameters: ParameterSpecPayload[]): Map<string, number> {
  return new Map(parameters.map((p, i) => [p.id, i]));
}

function membersOf(attention: AttentionResponse, group: number): string[] {
  return Object.entries(attention.groups)
    .filter(([, groups]) => groups.includes(group))
    .map(([pid]) => pid);
}

/** Build all six buttons from one attention payload.  Buttons degrade
 * gracefully: with sparse data some lists are simply empty. */
export function browserButtons(
  parameters: ParameterSpecPayload[],
  attention: AttentionResponse,
): BrowserButton[] {
  const order = schemaOrder(parameters);
  const bySchema = (ids: Iterable<string>): string[] =>
    [...new Set(ids)].sort(
      (a, b) => (order.get(a) ?? Number.MAX_SAFE_INTEGER) - (order.get(b) ?? Number.MAX_SAFE_INTEGER),
    );

  // Button 1: everything with a rank, most attention-worthy first.
  const ranked = Object.entries(attention.ranks)
    .sort(([pidA, rankA], [pidB, rankB]) => {
      if (rankA !== rankB) return rankB - rankA;
      return (order.get(pidA) ?? 0) - (order.get(pidB) ?? 0);
    })
    .map(([pid]) => pid);

  // Button 3: counter-trend parameters plus both halves of each unusual pair.
  const unusual = new Set(membersOf(attention, 2));
  for (const pair of attention.unusual_pairs) {
    unusual.add(pair.parameter_id);
    unusual.add(pair.other_id);
  }

  return [
    { index: 1, label: LABELS[1], parameterIds: ranked },
    { index: 2, label: LABELS[2], parameterIds: bySchema(membersOf(attention, 1)) },
    { index: 3, label: LABELS[3], parameterIds: bySchema(unusual) },
    { index: 4, label: LABELS[4], parameterIds: bySchema(membersOf(attention, 3)) },
    { index: 5, label: LABELS[5], parameterIds: bySchema(membersOf(attention, 4)) },
    { index: 6, label: LABELS[6], parameterIds: bySchema(membersOf(attention, 5)) },
  ];
}

export interface PanelCaps {
  quantitative: number;
  qualitative: number;
}

export const DEFAULT_CAPS: PanelCaps = { quantitative: 4, qualitative: 2 };

/** The shown-parameter panel: capped at four quantitative and two
 * qualitative slots.  Adding beyond a cap evicts the least important shown
 * parameter of the same kind (lowest service rank). */
export class ParameterPanel {
  readonly shown: string[] = [];

  constructor(
    private readonly parameters: ParameterSpecPayload[],
    private readonly ranks: Record<string, number>,
    private readonly caps: PanelCaps = DEFAULT_CAPS,
  ) {}

  /** Seed the panel with the service's own display selection. */
  static fromDisplay(
    parameters: ParameterSpecPayload[],
    attention: AttentionResponse,
    caps: PanelCaps = DEFAULT_CAPS,
  ): ParameterPanel {
    const panel = new ParameterPanel(parameters, attention.ranks, caps);
    for (const pid of attention.display.quantitative) panel.add(pid);
    for (const pid of attention.display.qualitative) panel.add(pid);
    return panel;
  }

  private kindOf(parameterId: string): "quantitative" | "qualitative" {
    const spec = this.parameters.find((p) => p.id === parameterId);
    return spec?.kind ?? "quantitative";
  }

  private shownOfKind(kind: "quantitative" | "qualitative"): string[] {
    return this.shown.filter((pid) => this.kindOf(pid) === kind);
  }

  /** Add a parameter, evicting the least important of its kind if the cap
   * is already reached.  Returns the evicted id, if any. */
  add(parameterId: string): { evicted: string | null } {
    if (this.shown.includes(parameterId)) return { evicted: null };
    const kind = this.kindOf(parameterId);
    const siblings = this.shownOfKind(kind);
    let evicted: string | null = null;
    if (siblings.length >= this.caps[kind]) {
      evicted = siblings.reduce((worst, pid) =>
        (this.ranks[pid] ?? 0) < (this.ranks[worst] ?? 0) ? pid : worst,
      );
      this.shown.splice(this.shown.indexOf(evicted), 1);
    }
    this.shown.push(parameterId);
    return { evicted };
  }

  remove(parameterId: string): void {
    const at = this.shown.indexOf(parameterId);
    if (at >= 0) this.shown.splice(at, 1);
  }
}

/** Render the button row plus the current panel contents. */
export function renderBrowser(
  buttons: BrowserButton[],
  panel: ParameterPanel,
): string {
  const buttonRow = buttons
    .map(
      (b) =>
        `<button class="browse" data-browse="${b.index}">` +
        `${escapeHtml(b.label)}</button>`,
    )
    .join("");
  const slots = panel.shown
    .map((pid) => `<li class="panel-slot" data-parameter="${escapeHtml(pid)}">${escapeHtml(pid)}</li>`)
    .join("");
  return (
    `<nav class="browse-row">${buttonRow}</nav>` +
    `<ul class="parameter-panel">${slots}</ul>`
  );
}
