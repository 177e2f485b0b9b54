/** Session controller: owns the view state and drives the API. The DOM
 * layer only forwards events here and repaints with html(). */

import { ApiError, CopClient, type SessionView } from "./api.js";
import {
  emptyFeedbackForm,
  screenFor,
  validateAnswers,
  validateFeedback,
  type FeedbackForm,
  type Screen,
} from "./model.js";
import { renderApp } from "./render.js";

export class SessionController {
  view: SessionView | null = null;
  form: FeedbackForm = emptyFeedbackForm();
  notice: string | null = null;

  constructor(private readonly client: CopClient) {}

  screen(): Screen {
    return screenFor(this.view);
  }

  html(): string {
    const body = renderApp(this.view, this.form);
    if (!this.notice) return body;
    return `<div class="notice">${this.notice}</div>\n${body}`;
  }

  private adopt(view: SessionView): void {
    this.view = view;
    this.form = emptyFeedbackForm();
    this.notice = null;
  }

  private fail(error: unknown): void {
    // Stale-tab 409s and validation 400s surface inline; the screen is
    // rebuilt from the server on the next refresh.
    if (error instanceof ApiError) {
      this.notice = `request rejected (${error.status}): ${error.message}`;
    } else {
      this.notice = `request failed: ${String(error)}`;
    }
  }

  async create(requirementText: string): Promise<void> {
    try {
      this.adopt(await this.client.createTask(requirementText));
    } catch (error) {
      this.fail(error);
    }
  }

  /** Refresh reconstructs the whole screen from the artifacts view. */
  async refresh(): Promise<void> {
    if (!this.view) return;
    try {
      this.adopt(await this.client.getArtifacts(this.view.session_id));
    } catch (error) {
      this.fail(error);
    }
  }

  async submitAnswers(values: Record<string, string>): Promise<boolean> {
    if (!this.view?.clarification) return false;
    const check = validateAnswers(this.view.clarification.missing, values);
    if (!check.ok) {
      this.notice = `fill in: ${check.blank.join(", ")}`;
      return false; // blocked client-side, no request sent
    }
    try {
      this.adopt(await this.client.postAnswers(this.view.session_id, values));
      return true;
    } catch (error) {
      this.fail(error);
      return false;
    }
  }

  setExecutable(value: boolean): void {
    this.form.executable = value;
    if (!value) this.form.correct = null;
  }

  setCorrect(value: boolean): void {
    if (this.form.executable === true) this.form.correct = value;
  }

  setErrorText(text: string): void {
    this.form.error_text = text;
  }

  setObservedOutput(text: string): void {
    this.form.observed_output = text;
  }

  canSubmitFeedback(): boolean {
    return validateFeedback(this.form).ok;
  }

  async submitFeedback(): Promise<boolean> {
    if (!this.view) return false;
    const validation = validateFeedback(this.form);
    if (!validation.ok || validation.payload === null) {
      this.notice = validation.problems.join("; ");
      return false; // blocked client-side, no request sent
    }
    try {
      this.adopt(
        await this.client.postFeedback(this.view.session_id, validation.payload),
      );
      return true;
    } catch (error) {
      this.fail(error);
      return false;
    }
  }
}
