import type { Band } from "./types.js";

/** Fixed five-step color table — the single stylesheet constant every view
 * reads band colors from.  One distinct color per band; intensity peaks at
 * the strong ends and fades toward normal. */
export const BAND_COLORS: Readonly<Record<Band, string>> = {
  strong_low: "#1e3a8a",
  abnormal_low: "#93c5fd",
  normal: "#e5e7eb",
  abnormal_high: "#fca5a5",
  strong_high: "#7f1d1d",
};

/** Bands in ascending severity order, low side to high side. */
export const BAND_ORDER: readonly Band[] = [
  "strong_low",
  "abnormal_low",
  "normal",
  "abnormal_high",
  "strong_high",
];

/** Background used for a sector whose parameter has no recorded value. */
export const MISSING_HATCH =
  "repeating-linear-gradient(45deg, #9ca3af 0 4px, #ffffff 4px 8px)";

/** Neutral fill for qualitative sectors, which carry no numeric band. */
export const UNBANDED_FILL = "#f8fafc";
