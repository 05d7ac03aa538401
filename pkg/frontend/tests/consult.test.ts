import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import {
  ConsultController,
  MAX_QUESTION_DIALOGS,
  renderConsult,
} from "../src/consult.js";
import { jsonResponse, lcg, queueFetch, question, step } from "./helpers.js";

const FORM = {
  model_id: "m-1",
  patient_id: "p-1",
  observations: { f1: "b" },
  decision: "x",
};

function controller(queue: (Response | Error)[]): ConsultController {
  return new ConsultController(
    new ApiClient("http://service", { fetchFn: queueFetch(queue) }),
  );
}

describe("consult flow", () => {
  it("renders silence as a status line, not a dialog", async () => {
    const c = controller([jsonResponse(step({ kind: "silent" }))]);
    await c.enterDecision(FORM);
    expect(c.phase.kind).toBe("silent");
    const html = renderConsult(c.phase);
    expect(html).toContain("consult-silent");
    expect(html).not.toContain("question-dialog");
  });

  it("walks decision -> question -> corrective answer -> silence", async () => {
    const c = controller([
      jsonResponse(question("f1", { questions_asked: 1 }), 201),
      jsonResponse(step({ kind: "silent" }, { questions_asked: 1 })),
    ]);
    await c.enterDecision(FORM);
    expect(c.phase.kind).toBe("question");
    expect(c.questionsShown).toBe(1);
    const html = renderConsult(c.phase);
    expect(html).toContain("question-dialog");
    expect(html).toContain("Question 1 of 2");

    await c.answer("a");
    expect(c.phase.kind).toBe("silent");
  });

  it("shows the final note after two stubborn answers", async () => {
    const c = controller([
      jsonResponse(question("f1", { questions_asked: 1 }), 201),
      jsonResponse(question("f2", { questions_asked: 2 })),
      jsonResponse(
        step(
          {
            kind: "final_note",
            session_id: "c-1",
            alpha_holmes: "x",
            alpha_engine: "y",
            mismatching_parameter_ids: ["f1"],
            text: "After 2 clarifying questions the disagreement stands.",
          },
          { questions_asked: 2, state: "exhausted" },
        ),
      ),
    ]);
    await c.enterDecision(FORM);
    await c.answer("b");
    expect(c.questionsShown).toBe(2);
    await c.answer("b");
    expect(c.phase.kind).toBe("final_note");
    expect(c.questionsShown).toBe(2);
    expect(renderConsult(c.phase)).toContain("final-note");
  });

  it("never renders a third dialog even if the server keeps asking", async () => {
    const c = controller([
      jsonResponse(question("f1", { questions_asked: 1 }), 201),
      jsonResponse(question("f2", { questions_asked: 2 })),
      jsonResponse(question("f1", { questions_asked: 3 })),
    ]);
    await c.enterDecision(FORM);
    await c.answer("b");
    expect(c.phase.kind).toBe("question");
    await c.answer("b"); // server misbehaves: sends question number three
    expect(c.questionsShown).toBe(MAX_QUESTION_DIALOGS);
    expect(c.phase.kind).toBe("final_note");
    expect(renderConsult(c.phase)).not.toContain("question-dialog");
  });

  it("caps dialogs at two across any server output sequence", async () => {
    const rand = lcg(7);
    for (let trial = 0; trial < 50; trial += 1) {
      const outputs: Response[] = [jsonResponse(question("f1"), 201)];
      for (let i = 0; i < 6; i += 1) {
        outputs.push(
          rand() < 0.7
            ? jsonResponse(question(rand() < 0.5 ? "f1" : "f2"))
            : jsonResponse(step({ kind: "silent" })),
        );
      }
      const c = controller(outputs);
      await c.enterDecision(FORM);
      let dialogs = c.phase.kind === "question" ? 1 : 0;
      while (c.phase.kind === "question") {
        await c.answer("b");
        if (c.phase.kind === "question") dialogs += 1;
      }
      expect(dialogs).toBeLessThanOrEqual(MAX_QUESTION_DIALOGS);
      expect(c.questionsShown).toBeLessThanOrEqual(MAX_QUESTION_DIALOGS);
    }
  });

  it("keeps session state and offers retry on transport failure", async () => {
    const c = controller([
      jsonResponse(question("f1", { questions_asked: 1 }), 201),
      new TypeError("fetch failed"),
      jsonResponse(step({ kind: "silent" }, { questions_asked: 1 })),
    ]);
    await c.enterDecision(FORM);
    const before = c.phase;

    await c.answer("a"); // transport drops
    expect(c.banner).not.toBeNull();
    expect(c.phase).toBe(before); // nothing lost
    expect(renderConsult(c.phase, c.banner)).toContain("retry-banner");

    await c.retry();
    expect(c.banner).toBeNull();
    expect(c.phase.kind).toBe("silent");
  });

  it("starting a new decision resets the dialog budget", async () => {
    const c = controller([
      jsonResponse(question("f1", { questions_asked: 1 }), 201),
      jsonResponse(question("f2", { questions_asked: 2 })),
      jsonResponse(
        step(
          {
            kind: "final_note",
            session_id: "c-1",
            alpha_holmes: "x",
            alpha_engine: "y",
            mismatching_parameter_ids: [],
            text: "note",
          },
          { questions_asked: 2, state: "exhausted" },
        ),
      ),
      jsonResponse(question("f1", { session_id: "c-2", questions_asked: 1 }), 201),
    ]);
    await c.enterDecision(FORM);
    await c.answer("b");
    await c.answer("b");
    expect(c.phase.kind).toBe("final_note");

    await c.enterDecision(FORM);
    expect(c.questionsShown).toBe(1);
    expect(c.phase.kind).toBe("question");
  });
});
