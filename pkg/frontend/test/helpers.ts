// Shared DOM-driving helpers for the UI tests.

import { ReviewApi } from "../src/api.js";
import { ReviewApp } from "../src/app.js";

export const SYSTEMS = ["model-aurora", "model-borealis", "model-cascade"];
export const QUERIES = [
  { id: "q1", text: "Compare the two drafts of the policy." },
  { id: "q2", text: "Assess the financial risk disclosures." },
];

export function reportsFor(
  systems: string[],
  queries: { id: string }[],
): Record<string, Record<string, string>> {
  const reports: Record<string, Record<string, string>> = {};
  systems.forEach((s, i) => {
    reports[s] = {};
    for (const q of queries) {
      reports[s][q.id] =
        `# Findings for ${q.id}\n\nParagraph of analysis number ${i}.\n\n` +
        `| metric | value |\n|---|---|\n| depth | ${i + 1} |\n`;
    }
  });
  return reports;
}

export function mountApp(reviewer = "rev-1"): ReviewApp {
  document.body.innerHTML = '<div id="app"></div>';
  const api = new ReviewApi({ baseUrl: "http://fake.test", sessionId: "s1", reviewerId: reviewer });
  return new ReviewApp(api, reviewer, { root: document.getElementById("app")!, doc: document });
}

export function fillAndSubmitForm(verdict = "left_better"): void {
  const form = document.getElementById("verdict-form")!;
  const radio = form.querySelector<HTMLInputElement>(`input[name=verdict][value=${verdict}]`)!;
  radio.checked = true;
  radio.dispatchEvent(new Event("change"));
  for (const group of form.querySelectorAll<HTMLElement>(".dimension-group")) {
    const choice = group.querySelector<HTMLInputElement>("input[value='4']")!;
    choice.checked = true;
    choice.dispatchEvent(new Event("change"));
  }
  const textarea = form.querySelector<HTMLTextAreaElement>("#justification")!;
  textarea.value = "Detailed justification covering depth and fit.";
  textarea.dispatchEvent(new Event("input"));
  const submit = form.querySelector<HTMLButtonElement>("#submit-verdict")!;
  if (submit.disabled) throw new Error("submit unexpectedly disabled after filling the form");
  submit.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

export async function settle(): Promise<void> {
  // let queued promise callbacks (fetch handlers, re-renders) run
  for (let i = 0; i < 10; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}
