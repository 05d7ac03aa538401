import { BAND_COLORS, MISSING_HATCH, UNBANDED_FILL } from "./bands.js";
import { escapeHtml, formatApiValue } from "./render.js";
import type {
  AttentionResponse,
  Band,
  ParameterSpecPayload,
} from "./types.js";

/** Display mode for sector labels: conventional units or the service's
 * normalized scale.  Both values come straight from the API. */
export type ValueMode = "raw" | "normalized";

export interface Sector {
  parameterId: string;
  name: string;
  /** Fill from the five-step band table, a neutral fill for qualitative
   * values, or null when the sector is hatched out as missing. */
  color: string | null;
  hatched: boolean;
  band: Band | null;
  label: string;
}

export interface OrganCircle {
  organ: string;
  sectors: Sector[];
}

function sectorLabel(
  spec: ParameterSpecPayload,
  value: number | string | null | undefined,
  normalized: number | null | undefined,
  mode: ValueMode,
): string {
  if (value === null || value === undefined) return "—";
  if (mode === "normalized" && normalized !== null && normalized !== undefined) {
    return formatApiValue(normalized);
  }
  const text = formatApiValue(value);
  return spec.unit !== undefined ? `${text} ${spec.unit}` : text;
}

/** Assemble one circle per organ system, one sector per parameter.  Every
 * color, value, and band is read from the attention payload; the client
 * adds nothing. */
export function buildOrganCircles(
  parameters: ParameterSpecPayload[],
  attention: AttentionResponse,
  mode: ValueMode = "raw",
): OrganCircle[] {
  const byOrgan = new Map<string, Sector[]>();
  for (const spec of parameters) {
    const organ = spec.organ_system ?? "general";
    const value = attention.values[spec.id];
    const band = attention.bands[spec.id] ?? null;
    const missing = value === null || value === undefined;
    const sector: Sector = {
      parameterId: spec.id,
      name: spec.name,
      color: missing ? null : band !== null ? BAND_COLORS[band] : UNBANDED_FILL,
      hatched: missing,
      band,
      label: sectorLabel(spec, value, attention.normalized[spec.id], mode),
    };
    const bucket = byOrgan.get(organ);
    if (bucket === undefined) byOrgan.set(organ, [sector]);
    else bucket.push(sector);
  }
  return [...byOrgan.entries()].map(([organ, sectors]) => ({ organ, sectors }));
}

/** Render circles as nested flex rows; each sector carries its band as a
 * data attribute and its fill inline so tests can assert the mapping. */
export function renderOrganCircles(circles: OrganCircle[]): string {
  const rows = circles.map((circle) => {
    const sectors = circle.sectors
      .map((s) => {
        const fill = s.hatched
          ? MISSING_HATCH
          : s.color ?? UNBANDED_FILL;
        return (
          `<div class="sector${s.hatched ? " missing" : ""}"` +
          ` data-parameter="${escapeHtml(s.parameterId)}"` +
          ` data-band="${s.band ?? "none"}"` +
          ` style="background: ${fill}">` +
          `<span class="sector-name">${escapeHtml(s.name)}</span>` +
          `<span class="sector-value">${escapeHtml(s.label)}</span>` +
          `</div>`
        );
      })
      .join("");
    return (
      `<section class="organ-circle" data-organ="${escapeHtml(circle.organ)}">` +
      `<h3>${escapeHtml(circle.organ)}</h3>` +
      `<div class="sectors">${sectors}</div>` +
      `</section>`
    );
  });
  return rows.join("\n");
}
