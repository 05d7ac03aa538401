import { ApiClient, NetworkError } from "./api.js";
import type { ConsultOpenRequest, ConsultStepResponse } from "./types.js";
import { escapeHtml, formatApiValue } from "./render.js";

/** Hard client-side cap on question dialogs per session.  The server
 * enforces the same budget; the console applies its own guard so a
 * misbehaving server still cannot surface a third prompt. */
export const MAX_QUESTION_DIALOGS = 2;

export type ConsultPhase =
  | { kind: "idle" }
  | { kind: "silent"; sessionId: string }
  | {
      kind: "question";
      sessionId: string;
      dialogNumber: number;
      parameterId: string;
      prompt: string;
      mismatching: string[];
    }
  | {
      kind: "final_note";
      sessionId: string;
      text: string;
      mismatching: string[];
    }
  | { kind: "closed"; sessionId: string; disagreement: boolean };

export interface RetryBanner {
  message: string;
}

/** Drives one consult session at a time: decision entry, at most two
 * question dialogs, then silence or a final note.  Transport failures set
 * a retry banner and leave all session state untouched. */
export class ConsultController {
  phase: ConsultPhase = { kind: "idle" };
  banner: RetryBanner | null = null;
  questionsShown = 0;

  private pendingAction: (() => Promise<void>) | null = null;

  constructor(private readonly api: ApiClient) {}

  /** True while the session budget still allows another question dialog. */
  get canPrompt(): boolean {
    return this.questionsShown < MAX_QUESTION_DIALOGS;
  }

  /** Submit the decision form, opening a fresh session. */
  async enterDecision(form: ConsultOpenRequest): Promise<void> {
    await this.guarded(async () => {
      const resp = await this.api.openConsult(form);
      this.questionsShown = 0;
      this.applyStep(resp);
    });
  }

  /** Answer the currently displayed question. */
  async answer(value: number | string): Promise<void> {
    if (this.phase.kind !== "question") {
      throw new Error("no question dialog is open");
    }
    const sessionId = this.phase.sessionId;
    await this.guarded(async () => {
      const resp = await this.api.answerConsult(sessionId, value);
      this.applyStep(resp);
    });
  }

  /** Close the active session explicitly. */
  async close(userId?: string): Promise<void> {
    const sessionId = this.activeSessionId();
    if (sessionId === null) return;
    await this.guarded(async () => {
      const resp = await this.api.closeConsult(sessionId, userId);
      this.phase = {
        kind: "closed",
        sessionId: resp.session_id,
        disagreement: resp.disagreement,
      };
    });
  }

  /** Re-run the action that last failed with a transport error. */
  async retry(): Promise<void> {
    const action = this.pendingAction;
    if (action === null) return;
    this.banner = null;
    await this.guarded(action);
  }

  private activeSessionId(): string | null {
    return this.phase.kind === "idle" || this.phase.kind === "closed"
      ? null
      : this.phase.sessionId;
  }

  private async guarded(action: () => Promise<void>): Promise<void> {
    this.pendingAction = action;
    try {
      await action();
    } catch (err) {
      if (err instanceof NetworkError) {
        this.banner = { message: `${err.message} — nothing was lost; retry when ready.` };
        return;
      }
      this.pendingAction = null;
      throw err;
    }
    this.pendingAction = null;
    this.banner = null;
  }

  private applyStep(resp: ConsultStepResponse): void {
    const output = resp.output;
    if (output.kind === "silent") {
      this.phase = { kind: "silent", sessionId: resp.session_id };
      return;
    }
    if (output.kind === "question") {
      if (!this.canPrompt) {
        // Guard rail: the dialog budget is spent, so even a question from a
        // misbehaving server renders as a terminal notice, never a prompt.
        this.phase = {
          kind: "final_note",
          sessionId: resp.session_id,
          text: "Clarification limit reached; the session is complete.",
          mismatching: output.mismatching_parameter_ids,
        };
        return;
      }
      this.questionsShown += 1;
      this.phase = {
        kind: "question",
        sessionId: resp.session_id,
        dialogNumber: this.questionsShown,
        parameterId: output.parameter_id,
        prompt: output.prompt,
        mismatching: output.mismatching_parameter_ids,
      };
      return;
    }
    this.phase = {
      kind: "final_note",
      sessionId: resp.session_id,
      text: output.text,
      mismatching: output.mismatching_parameter_ids,
    };
  }
}

/** Render the current consult phase.  Silence stays unobtrusive (a status
 * line, not a dialog); questions render as the only modal element. */
export function renderConsult(
  phase: ConsultPhase,
  banner: RetryBanner | null = null,
): string {
  const parts: string[] = [];
  if (banner !== null) {
    parts.push(
      `<div class="retry-banner" role="alert">` +
        `${escapeHtml(banner.message)} <button data-action="retry">Retry</button></div>`,
    );
  }
  switch (phase.kind) {
    case "idle":
      parts.push(`<p class="consult-status">Enter a decision to begin.</p>`);
      break;
    case "silent":
      parts.push(
        `<p class="consult-status consult-silent">Entry recorded.</p>`,
      );
      break;
    case "question":
      parts.push(
        `<div class="question-dialog" role="dialog" aria-modal="true">` +
          `<p class="question-count">Question ${phase.dialogNumber} of ${MAX_QUESTION_DIALOGS}</p>` +
          `<p class="question-prompt">${escapeHtml(phase.prompt)}</p>` +
          (phase.mismatching.length > 0
            ? `<ul class="mismatching">` +
              phase.mismatching
                .map((pid) => `<li>${escapeHtml(pid)}</li>`)
                .join("") +
              `</ul>`
            : "") +
          `<input name="answer" data-parameter="${escapeHtml(phase.parameterId)}">` +
          `<button data-action="answer">Answer</button>` +
          `</div>`,
      );
      break;
    case "final_note":
      parts.push(
        `<div class="final-note" role="note">` +
          `<p>${escapeHtml(phase.text)}</p>` +
          (phase.mismatching.length > 0
            ? `<ul class="mismatching">` +
              phase.mismatching
                .map((pid) => `<li>${escapeHtml(pid)}</li>`)
                .join("") +
              `</ul>`
            : "") +
          `</div>`,
      );
      break;
    case "closed":
      parts.push(
        `<p class="consult-status">Session closed${
          phase.disagreement ? " with a recorded disagreement" : ""
        }.</p>`,
      );
      break;
  }
  return parts.join("\n");
}

/** Format a transcript-friendly label for an answer value. */
export function formatAnswer(value: number | string): string {
  return formatApiValue(value);
}
