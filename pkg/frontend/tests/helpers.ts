import type {
  AttentionResponse,
  ConsultOutput,
  ConsultStepResponse,
} from "../src/types.js";

/** Build a Response carrying a JSON body, as the service would send it. */
export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** A fetch stub that serves queued responses (or throws queued errors) in
 * order, regardless of URL. */
export function queueFetch(queue: (Response | Error)[]): typeof fetch {
  return async () => {
    const next = queue.shift();
    if (next === undefined) throw new Error("stub fetch queue exhausted");
    if (next instanceof Error) throw next;
    return next;
  };
}

/** Consult step response with sensible defaults. */
export function step(
  output: ConsultOutput,
  overrides: Partial<ConsultStepResponse> = {},
): ConsultStepResponse {
  return {
    schema_version: "1",
    session_id: "c-1",
    state: output.kind === "silent" ? "agreement" : "question_pending",
    questions_asked: 0,
    output,
    ...overrides,
  };
}

export function question(
  parameterId: string,
  overrides: Partial<ConsultStepResponse> = {},
): ConsultStepResponse {
  return step(
    {
      kind: "question",
      parameter_id: parameterId,
      prompt: `Are you expecting ${parameterId} to stay where it is?`,
      mismatching_parameter_ids: [parameterId],
    },
    overrides,
  );
}

/** Attention payload with every field present and overridable. */
export function attentionFixture(
  overrides: Partial<AttentionResponse> = {},
): AttentionResponse {
  return {
    schema_version: "1",
    patient_id: "p-a",
    groups: {},
    ranks: {},
    display: { quantitative: [], qualitative: [] },
    unusual_pairs: [],
    values: {},
    normalized: {},
    bands: {},
    severity_trend: 0,
    ...overrides,
  };
}

/** Small deterministic RNG for property-style tests. */
export function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}
