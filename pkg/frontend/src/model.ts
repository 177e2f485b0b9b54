/** Pure view-model logic: which screen a session view maps to, and the
 * structural rules that gate the feedback form. */

import type { FeedbackPayload, SessionView } from "./api.js";

export type ScreenKind =
  | "intake"
  | "clarification"
  | "feedback"
  | "annotated"
  | "failed"
  | "working";

export interface Screen {
  kind: ScreenKind;
  banner: string | null;
}

/** Maps the server phase onto the screen the operator should see. */
export function screenFor(view: SessionView | null): Screen {
  if (view === null) {
    return { kind: "intake", banner: null };
  }
  switch (view.phase) {
    case "Clarifying":
      return { kind: "clarification", banner: "More details needed" };
    case "AwaitingFeedback":
      return { kind: "feedback", banner: "Run the code, then report what happened" };
    case "Done":
      return {
        kind: "annotated",
        banner: view.exhausted ? "iteration limit reached" : "Session complete",
      };
    case "Failed":
      return {
        kind: "failed",
        banner: view.failure ? `${view.failure.error}: ${view.failure.message}` : "Session failed",
      };
    default:
      return { kind: "working", banner: `Working (${view.phase})` };
  }
}

/** Tri-state toggles start unset so the form can refuse to submit. */
export interface FeedbackForm {
  executable: boolean | null;
  correct: boolean | null;
  error_text: string;
  observed_output: string;
}

export function emptyFeedbackForm(): FeedbackForm {
  return { executable: null, correct: null, error_text: "", observed_output: "" };
}

/** The correctness toggle only means something for code that ran. */
export function correctEnabled(form: FeedbackForm): boolean {
  return form.executable === true;
}

export function errorTextRequired(form: FeedbackForm): boolean {
  return form.executable === false;
}

export function observedOutputRequired(form: FeedbackForm): boolean {
  return form.executable === true && form.correct === false;
}

export interface FeedbackValidation {
  ok: boolean;
  problems: string[];
  payload: FeedbackPayload | null;
}

/** Structural enforcement: a payload is produced only when the debug
 * feedback invariants are satisfiable from the form's state. */
export function validateFeedback(form: FeedbackForm): FeedbackValidation {
  const problems: string[] = [];
  if (form.executable === null) {
    problems.push("Say whether the script ran");
  } else if (form.executable === false) {
    if (!form.error_text.trim()) {
      problems.push("Paste the console error text");
    }
  } else {
    if (form.correct === null) {
      problems.push("Say whether the result is correct");
    } else if (form.correct === false && !form.observed_output.trim()) {
      problems.push("Describe the observed output");
    }
  }
  if (problems.length > 0) {
    return { ok: false, problems, payload: null };
  }
  if (form.executable === false) {
    return {
      ok: true,
      problems: [],
      payload: { executable: false, correct: false, error_text: form.error_text.trim() },
    };
  }
  if (form.correct === false) {
    return {
      ok: true,
      problems: [],
      payload: {
        executable: true,
        correct: false,
        observed_output: form.observed_output.trim(),
      },
    };
  }
  return { ok: true, problems: [], payload: { executable: true, correct: true } };
}

/** Clarification answers may be submitted only when every listed field
 * is filled in. */
export function validateAnswers(
  missing: string[],
  values: Record<string, string>,
): { ok: boolean; blank: string[] } {
  const blank = missing.filter((name) => !(values[name] ?? "").trim());
  return { ok: blank.length === 0, blank };
}
