import { ApiClient } from "./api.js";
import { ConsultController, renderConsult } from "./consult.js";
import { buildOrganCircles, renderOrganCircles, type ValueMode } from "./circles.js";
import { browserButtons, ParameterPanel, renderBrowser } from "./browser.js";
import { renderWardBoard, WardBoardPoller } from "./ward.js";
import { summaryView, acknowledge, renderSummary, type SummaryView } from "./summary.js";
import type { AttentionResponse, ParameterSpecPayload } from "./types.js";

/** DOM bootstrap: wires the view modules to mount points on index.html.
 * One consult session is active per tab at a time — the controller holds
 * exactly one, and a new decision replaces it. */

function mount(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing mount point #${id}`);
  return el;
}

function main(): void {
  const base = document.body.dataset["service"] ?? "";
  const api = new ApiClient(base);
  const consult = new ConsultController(api);

  const consultEl = mount("consult");
  const circlesEl = mount("circles");
  const browserEl = mount("browser");
  const wardEl = mount("ward");
  const summaryEl = mount("summary");

  let parameters: ParameterSpecPayload[] = [];
  let lastAttention: AttentionResponse | null = null;
  let mode: ValueMode = "raw";
  let panel: ParameterPanel | null = null;
  let summary: SummaryView | null = null;

  const drawConsult = (): void => {
    consultEl.innerHTML = renderConsult(consult.phase, consult.banner);
  };

  const drawPatient = (): void => {
    if (lastAttention === null) return;
    const circles = buildOrganCircles(parameters, lastAttention, mode);
    circlesEl.innerHTML =
      `<label><input type="checkbox" id="mode-toggle"${
        mode === "normalized" ? " checked" : ""
      }> normalized</label>` + renderOrganCircles(circles);
    if (panel === null) {
      panel = ParameterPanel.fromDisplay(parameters, lastAttention);
    }
    browserEl.innerHTML = renderBrowser(
      browserButtons(parameters, lastAttention),
      panel,
    );
  };

  const drawSummary = (): void => {
    if (summary !== null) summaryEl.innerHTML = renderSummary(summary);
  };

  const poller = new WardBoardPoller(
    api,
    (view) => {
      wardEl.innerHTML = renderWardBoard(view);
    },
    Number(document.body.dataset["pollMs"] ?? "15000"),
  );

  consultEl.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset["action"] === "retry") {
      void consult.retry().then(drawConsult);
    }
    if (target.dataset["action"] === "answer") {
      const input = consultEl.querySelector<HTMLInputElement>("input[name=answer]");
      if (input !== null) {
        const raw = input.value;
        const numeric = Number(raw);
        void consult
          .answer(raw !== "" && Number.isFinite(numeric) ? numeric : raw)
          .then(drawConsult);
      }
    }
  });

  circlesEl.addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.id === "mode-toggle") {
      mode = target.checked ? "normalized" : "raw";
      drawPatient();
    }
  });

  summaryEl.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset["action"] === "acknowledge" && summary !== null) {
      summary = acknowledge(summary);
      drawSummary();
    }
  });

  // Exposed so the page (or a console user) can load data and start flows.
  const console_api = {
    api,
    consult,
    poller,
    setParameters(specs: ParameterSpecPayload[]): void {
      parameters = specs;
      panel = null;
    },
    async showPatient(patientId: string, caseId?: string): Promise<void> {
      lastAttention = await api.attention(patientId, { caseId });
      drawPatient();
    },
    async showSummary(recordId: string): Promise<void> {
      summary = summaryView(await api.recordSummary(recordId));
      drawSummary();
    },
    drawConsult,
  };
  (window as unknown as { sidekick: typeof console_api }).sidekick = console_api;

  drawConsult();
  poller.start();
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", main);
}
