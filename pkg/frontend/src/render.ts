/** HTML renderers: pure string builders so the screens are testable
 * without a DOM. */

import type { SessionView } from "./api.js";
import { diffLines } from "./diff.js";
import {
  correctEnabled,
  errorTextRequired,
  observedOutputRequired,
  screenFor,
  validateFeedback,
  type FeedbackForm,
} from "./model.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function codeBlock(source: string): string {
  return `<pre class="code">${escapeHtml(source)}</pre>`;
}

export function renderBanner(view: SessionView | null): string {
  const screen = screenFor(view);
  if (!screen.banner) return "";
  return `<div class="banner banner-${screen.kind}">${escapeHtml(screen.banner)}</div>`;
}

export function renderIntake(): string {
  return [
    '<section class="intake">',
    "<h2>New task</h2>",
    '<textarea id="requirement-text" rows="5" placeholder="Describe the geospatial script you need"></textarea>',
    '<button id="create-task">Start</button>',
    "</section>",
  ].join("\n");
}

export function renderClarification(view: SessionView): string {
  const clar = view.clarification;
  if (!clar) return "";
  const fields = clar.missing
    .map(
      (name) =>
        `<label class="clar-field">${escapeHtml(name)}` +
        `<input type="text" data-element="${escapeHtml(name)}"></label>`,
    )
    .join("\n");
  return [
    '<section class="clarification">',
    `<pre class="prompt">${escapeHtml(clar.prompt_text)}</pre>`,
    fields,
    '<button id="submit-answers">Send answers</button>',
    '<p class="form-problems" id="answer-problems"></p>',
    "</section>",
  ].join("\n");
}

export function renderRequirements(view: SessionView): string {
  if (!view.requirements) return "";
  const rows = Object.entries(view.requirements.requirements)
    .map(
      ([key, value]) =>
        `<tr><th>${escapeHtml(key)}</th><td>${escapeHtml(value)}</td></tr>`,
    )
    .join("");
  return `<section class="requirements"><h3>Requirements</h3><table>${rows}</table></section>`;
}

export function renderDesign(view: SessionView): string {
  if (!view.design) return "";
  const items = view.design.Algorithm.map(
    (module) =>
      `<li><strong>${escapeHtml(module.Module_Name)}</strong>: ` +
      `${escapeHtml(module.Module_Description)} ` +
      `<em>(${escapeHtml(module.Input)} → ${escapeHtml(module.Output)})</em></li>`,
  ).join("");
  return `<section class="design"><h3>Algorithm design</h3><ol>${items}</ol></section>`;
}

export function renderRevisions(view: SessionView): string {
  const revisions = view.code_revisions;
  if (revisions.length === 0) return "";
  const latest = revisions[revisions.length - 1]!;
  const parts = [
    '<section class="code-view">',
    `<h3>Code revision ${latest.revision} <em>(${escapeHtml(latest.provenance)})</em></h3>`,
    codeBlock(latest.source),
  ];
  if (revisions.length >= 2) {
    const previous = revisions[revisions.length - 2]!;
    const rows = diffLines(previous.source, latest.source)
      .map(
        (line) =>
          `<div class="diff-${line.op}">` +
          `${line.op === "add" ? "+" : line.op === "del" ? "-" : " "} ` +
          `${escapeHtml(line.text)}</div>`,
      )
      .join("");
    parts.push(
      `<details open><summary>Diff rev ${previous.revision} → rev ${latest.revision}</summary>` +
        `<div class="diff">${rows}</div></details>`,
    );
  }
  parts.push("</section>");
  return parts.join("\n");
}

export function renderFeedbackForm(form: FeedbackForm): string {
  const validation = validateFeedback(form);
  const problems = validation.problems
    .map((p) => `<li>${escapeHtml(p)}</li>`)
    .join("");
  const check = (flag: boolean | null, wanted: boolean) =>
    flag === wanted ? "checked" : "";
  return [
    '<section class="feedback-form">',
    "<h3>Execution feedback</h3>",
    '<fieldset id="executable-toggle"><legend>Did the script run?</legend>',
    `<label><input type="radio" name="executable" value="yes" ${check(form.executable, true)}> Y</label>`,
    `<label><input type="radio" name="executable" value="no" ${check(form.executable, false)}> N</label>`,
    "</fieldset>",
    `<fieldset id="correct-toggle" ${correctEnabled(form) ? "" : "disabled"}>`,
    "<legend>Is the result correct?</legend>",
    `<label><input type="radio" name="correct" value="yes" ${check(form.correct, true)}> Y</label>`,
    `<label><input type="radio" name="correct" value="no" ${check(form.correct, false)}> N</label>`,
    "</fieldset>",
    `<label class="${errorTextRequired(form) ? "required" : "hidden"}">Console error` +
      `<textarea id="error-text" rows="3">${escapeHtml(form.error_text)}</textarea></label>`,
    `<label class="${observedOutputRequired(form) ? "required" : "hidden"}">Observed output` +
      `<textarea id="observed-output" rows="3">${escapeHtml(form.observed_output)}</textarea></label>`,
    `<button id="submit-feedback" ${validation.ok ? "" : "disabled"}>Submit feedback</button>`,
    `<ul class="form-problems">${problems}</ul>`,
    "</section>",
  ].join("\n");
}

export function renderAnnotated(view: SessionView): string {
  if (!view.annotated) return "";
  return [
    '<section class="annotated">',
    "<h3>Annotated code</h3>",
    codeBlock(view.annotated),
    "</section>",
  ].join("\n");
}

export function renderFailed(view: SessionView): string {
  const failure = view.failure;
  const detail = failure
    ? `${failure.error}: ${failure.message}`
    : "unknown failure";
  return `<section class="failed"><p>${escapeHtml(detail)}</p></section>`;
}

/** Whole-page render for the current session state. */
export function renderApp(view: SessionView | null, form: FeedbackForm): string {
  const screen = screenFor(view);
  const parts = [renderBanner(view)];
  if (view === null) {
    parts.push(renderIntake());
    return parts.join("\n");
  }
  parts.push(`<p class="session-line">session <code>${escapeHtml(view.session_id)}</code> — phase ${escapeHtml(view.phase)}</p>`);
  switch (screen.kind) {
    case "clarification":
      parts.push(renderClarification(view));
      break;
    case "feedback":
      parts.push(
        renderRequirements(view),
        renderDesign(view),
        renderRevisions(view),
        renderFeedbackForm(form),
      );
      break;
    case "annotated":
      parts.push(renderAnnotated(view), renderDesign(view), renderRevisions(view));
      break;
    case "failed":
      parts.push(renderFailed(view));
      break;
    default:
      break;
  }
  return parts.join("\n");
}
