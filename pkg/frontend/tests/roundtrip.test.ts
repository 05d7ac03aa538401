/** Live round trip against a real service process.
 *
 * Boots the backend, drives the console's view modules through the full
 * clinical flow over actual HTTP, and checks the release-level display
 * invariants: silence/question rendering, the two-dialog cap, band-color
 * fidelity, and numeric display provenance (every number shown traces to a
 * captured response body).
 */
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { BAND_COLORS } from "../src/bands.js";
import { browserButtons, ParameterPanel, renderBrowser } from "../src/browser.js";
import { displayedNumbers, ResponseCapture } from "../src/capture.js";
import { buildOrganCircles, renderOrganCircles } from "../src/circles.js";
import { adequacyPanel, renderAdequacy } from "../src/adequacy.js";
import { ConsultController, renderConsult } from "../src/consult.js";
import { renderSummary, summaryView } from "../src/summary.js";
import { renderWardBoard, wardBoardView } from "../src/ward.js";
import type {
  AttentionResponse,
  Band,
  ParameterSpecPayload,
} from "../src/types.js";

const PORT = 8100 + (process.pid % 800);
const BASE = `http://127.0.0.1:${PORT}`;

const SCHEMA = {
  parameters: [
    {
      id: "f1",
      name: "F one",
      kind: "qualitative" as const,
      categories: ["a", "b"],
    },
    {
      id: "f2",
      name: "F two",
      kind: "quantitative" as const,
      unit: "u",
      thresholds: { a1: 1, a2: 2, a3: 3, a4: 4 },
      organ_system: "cardio",
    },
  ],
};
const ROWS = [
  { f1: "a", f2: 1.5 },
  { f1: "a", f2: 2.5 },
  { f1: "b", f2: 1.5 },
  { f1: "b", f2: 2.5 },
];
const LABELS = ["x", "x", "y", "y"];

let server: ChildProcess;
let workDir: string;
let serverLog = "";

const capture = new ResponseCapture();
const api = new ApiClient(BASE, { onResponse: capture.record });

/** Every HTML fragment the suite "puts on screen", for the provenance check. */
const renderedViews: string[] = [];
function show(html: string): string {
  renderedViews.push(html);
  return html;
}

let modelId = "";
let decisionSet: string[] = [];
let parameters: ParameterSpecPayload[] = [];

async function waitForHealth(): Promise<void> {
  const deadline = Date.now() + 45_000;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/health`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error(`service did not come up on ${BASE}\n${serverLog}`);
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "console-rt-"));
  const configPath = join(workDir, "service.json");
  writeFileSync(
    configPath,
    JSON.stringify({
      engine: {
        sampler_exhaustive: true,
        archive_path: ":memory:",
        intervention_weights: { vent: 2.0 },
      },
      host: "127.0.0.1",
      port: PORT,
    }),
  );
  server = spawn("sidekick", ["serve", "--service-config", configPath], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  server.stdout?.on("data", (chunk: Buffer) => (serverLog += chunk.toString()));
  server.stderr?.on("data", (chunk: Buffer) => (serverLog += chunk.toString()));
  await waitForHealth();

  const dataset = await api.ingestDataset({
    kind: "labeled",
    schema_def: SCHEMA,
    rows: ROWS,
    labels: LABELS,
  });
  const trained = await api.trainModel(dataset.dataset_id);
  modelId = trained.model_id;
  decisionSet = trained.decision_set;
  const model = await api.getModel(modelId);
  parameters = model.parameter_schema.parameters;
});

afterAll(() => {
  server?.kill("SIGTERM");
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

describe("console round trip against a live service", () => {
  it("renders decision -> question -> answer -> silence", async () => {
    const consult = new ConsultController(api);
    await consult.enterDecision({
      model_id: modelId,
      patient_id: "p1",
      observations: { f1: "b" },
      decision: "x",
    });
    expect(consult.phase.kind).toBe("question");
    const dialog = show(renderConsult(consult.phase, consult.banner));
    expect(dialog).toContain("question-dialog");
    expect(dialog).toContain("Question 1 of 2");

    await consult.answer("a"); // corrected entry: engine falls silent
    expect(consult.phase.kind).toBe("silent");
    const silent = show(renderConsult(consult.phase, consult.banner));
    expect(silent).toContain("consult-silent");
    expect(silent).not.toContain("question-dialog");
  });

  it("renders straight silence for an agreeing decision", async () => {
    const consult = new ConsultController(api);
    await consult.enterDecision({
      model_id: modelId,
      patient_id: "p1",
      observations: { f1: "a" },
      decision: "x",
    });
    expect(consult.phase.kind).toBe("silent");
    show(renderConsult(consult.phase, consult.banner));
  });

  it("never renders a third question, even when the user stays stubborn", async () => {
    const consult = new ConsultController(api);
    let dialogsSeen = 0;
    const note = (): void => {
      if (consult.phase.kind === "question") dialogsSeen += 1;
      show(renderConsult(consult.phase, consult.banner));
    };

    await consult.enterDecision({
      model_id: modelId,
      patient_id: "p1",
      observations: { f1: "b" },
      decision: "x",
    });
    note();
    while (consult.phase.kind === "question" && dialogsSeen <= 5) {
      await consult.answer("b"); // stubborn: repeat the disputed value
      note();
    }
    expect(dialogsSeen).toBe(2);
    expect(consult.phase.kind).toBe("final_note");
    expect(consult.questionsShown).toBe(2);
    const finalHtml = renderedViews[renderedViews.length - 1]!;
    expect(finalHtml).toContain("final-note");
    expect(finalHtml).not.toContain("question-dialog");

    await consult.close("dr-a");
    expect(consult.phase.kind).toBe("closed");
    show(renderConsult(consult.phase, consult.banner));
  });

  it("colors sectors one-to-one with the bands the API reports", async () => {
    const plan: [string, number, Band][] = [
      ["p-low", 0.5, "strong_low"],
      ["p-alow", 1.5, "abnormal_low"],
      ["p-norm", 2.5, "normal"],
      ["p-ahigh", 3.5, "abnormal_high"],
      ["p-high", 4.5, "strong_high"],
    ];
    const seenColors = new Map<Band, string>();
    for (const [patientId, value, expectedBand] of plan) {
      await api.recordObservation(patientId, {
        parameter_id: "f2",
        value,
        timestamp: 0,
      });
      const attention = await api.attention(patientId);
      expect(attention.bands["f2"]).toBe(expectedBand);

      const circles = buildOrganCircles(parameters, attention);
      show(renderOrganCircles(circles));
      const sector = circles
        .flatMap((c) => c.sectors)
        .find((s) => s.parameterId === "f2")!;
      expect(sector.band).toBe(expectedBand);
      expect(sector.color).toBe(BAND_COLORS[expectedBand]);
      seenColors.set(expectedBand, sector.color!);

      // f1 was never observed for these patients: hatched, not colored.
      const qual = circles
        .flatMap((c) => c.sectors)
        .find((s) => s.parameterId === "f1")!;
      expect(qual.hatched).toBe(true);
    }
    expect(seenColors.size).toBe(5);
    expect(new Set(seenColors.values()).size).toBe(5);
  });

  it("switches sector labels to the service-normalized scale", async () => {
    const attention = await api.attention("p-high");
    const raw = buildOrganCircles(parameters, attention, "raw");
    const normalized = buildOrganCircles(parameters, attention, "normalized");
    show(renderOrganCircles(raw));
    show(renderOrganCircles(normalized));
    const rawLabel = raw.flatMap((c) => c.sectors).find((s) => s.parameterId === "f2")!.label;
    const normLabel = normalized
      .flatMap((c) => c.sectors)
      .find((s) => s.parameterId === "f2")!.label;
    expect(rawLabel).toBe("4.5 u");
    expect(normLabel).toBe(String(attention.normalized["f2"]));
  });

  it("drives the six-button browser and panel from attention data", async () => {
    const attention = await api.attention("p-high", { caseId: "rounds" });
    const buttons = browserButtons(parameters, attention);
    expect(buttons).toHaveLength(6);
    const panel = ParameterPanel.fromDisplay(parameters, attention);
    show(renderBrowser(buttons, panel));
    // The service marked f2 as display-worthy; the panel honors it.
    expect(panel.shown).toContain("f2");
  });

  it("shows the ward board with the leader set apart", async () => {
    for (const [t, value] of [
      [0, 2.5],
      [10, 4.5],
    ] as const) {
      await api.recordObservation("p-ward", {
        parameter_id: "f2",
        value,
        timestamp: t,
      });
    }
    await api.recordPrognosis("p-ward", {
      author: "dr-a",
      made_at: 0,
      horizon: 20,
      predicted: "worsen",
    });
    const board = await api.leaderboard();
    const view = wardBoardView(board);
    expect(view.empty).toBe(false);
    expect(view.rows[0]!.leader).toBe(true);
    const html = show(renderWardBoard(view));
    expect(html).toContain("leader-badge");
  });

  it("renders the adequacy panel from service numbers only", async () => {
    const attention = await api.attention("p-ward");
    const prognosis = await api.recordPrognosis("p-ward", {
      author: "dr-a",
      made_at: 5,
      horizon: 30,
      predicted: "improve",
    });
    const panel = adequacyPanel({
      severityTrend: attention.severity_trend,
      syndromes: decisionSet,
      prognosisDirections: ["worsen", "improve"],
      prognosisCount: prognosis.prognoses,
    });
    show(renderAdequacy(panel));
    expect(panel.stem.trend).toBe(attention.severity_trend);
  });

  it("renders the record summary sections from the live service", async () => {
    await api.ingestDataset({
      kind: "registry",
      registry_schema: {
        registry_id: "onco",
        fields: [
          { id: "tumor_size_cm", name: "Tumor size", kind: "number", unit: "cm" },
          {
            id: "margin",
            name: "Margin",
            kind: "category",
            categories: ["negative", "positive"],
          },
        ],
        event_kinds: ["excision", "relapse"],
      },
      records: [
        {
          record_id: "r-7",
          fields: { tumor_size_cm: 2.2, margin: "positive" },
          events: [{ kind: "excision", date: "2009-03-04" }],
        },
      ],
      layout: ["tumor_size_cm", "margin"],
      rules: [
        {
          id: "size-gt-2",
          conditions: [
            { kind: "field", field: "tumor_size_cm", op: "gt", value: 2.0 },
          ],
          message: "size {tumor_size_cm} cm exceeds the threshold",
        },
      ],
    });
    const view = summaryView(await api.recordSummary("r-7"));
    const html = show(renderSummary(view));
    expect(html).toContain("mark");
    expect(html).toContain("size 2.2 cm exceeds the threshold");
    expect(html).toContain('<button data-action="save">Save</button>');
  });

  it("only ever displayed numbers that appear in captured responses", () => {
    expect(renderedViews.length).toBeGreaterThan(10);
    const allowed = capture.numbers();
    expect(allowed.size).toBeGreaterThan(0);
    for (const html of renderedViews) {
      for (const shown of displayedNumbers(html)) {
        expect(
          allowed.has(shown),
          `displayed ${shown} does not occur in any captured response`,
        ).toBe(true);
      }
    }
  });
});
