/** DOM bootstrap: event delegation into the controller, repaint after
 * every action. */

import { CopClient } from "./api.js";
import { SessionController } from "./controller.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");
const app: HTMLElement = root;
const controller = new SessionController(new CopClient(""));

function repaint(): void {
  app.innerHTML = controller.html();
}

function collectAnswers(): Record<string, string> {
  const values: Record<string, string> = {};
  app.querySelectorAll<HTMLInputElement>("input[data-element]").forEach((input) => {
    values[input.dataset.element ?? ""] = input.value;
  });
  return values;
}

app.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  if (target.id === "create-task") {
    const text =
      app.querySelector<HTMLTextAreaElement>("#requirement-text")?.value ?? "";
    if (!text.trim()) return;
    void controller.create(text).then(repaint);
  } else if (target.id === "submit-answers") {
    void controller.submitAnswers(collectAnswers()).then(repaint);
  } else if (target.id === "submit-feedback") {
    void controller.submitFeedback().then(repaint);
  }
});

app.addEventListener("change", (event) => {
  const target = event.target as HTMLInputElement;
  if (target.name === "executable") {
    controller.setExecutable(target.value === "yes");
    repaint();
  } else if (target.name === "correct") {
    controller.setCorrect(target.value === "yes");
    repaint();
  }
});

app.addEventListener("input", (event) => {
  const target = event.target as HTMLTextAreaElement;
  if (target.id === "error-text") controller.setErrorText(target.value);
  if (target.id === "observed-output") controller.setObservedOutput(target.value);
  // Keep the gate live while typing without stealing textarea focus.
  const button = app.querySelector<HTMLButtonElement>("#submit-feedback");
  if (button) button.disabled = !controller.canSubmitFeedback();
});

repaint();
