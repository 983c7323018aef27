// Verdict form state and completeness gating: the submit button stays
// disabled until the five-way verdict, all four sub-dimension ratings, and
// a nonempty justification are present.

import { SUB_DIMENSIONS, SubDimension, Verdict, VERDICTS } from "./api.js";

export const VERDICT_LABELS: Record<Verdict, string> = {
  left_better: "Left better",
  right_better: "Right better",
  both_good: "Both good",
  both_fair: "Both fair",
  both_poor: "Both poor",
};

export const DIMENSION_LABELS: Record<SubDimension, string> = {
  information_completeness: "Information completeness",
  content_depth: "Content depth",
  requirement_fitness: "Requirement fitness",
  readability: "Readability",
};

export interface FormState {
  verdict: Verdict | null;
  subScores: Partial<Record<SubDimension, number>>;
  justification: string;
}

export function emptyForm(): FormState {
  return { verdict: null, subScores: {}, justification: "" };
}

export function isComplete(state: FormState): boolean {
  if (state.verdict === null) return false;
  if (!state.justification.trim()) return false;
  return SUB_DIMENSIONS.every((d) => typeof state.subScores[d] === "number");
}

export function renderForm(container: HTMLElement, state: FormState, onChange: () => void): void {
  container.innerHTML = "";

  const verdictGroup = document.createElement("fieldset");
  verdictGroup.className = "verdict-group";
  const legend = document.createElement("legend");
  legend.textContent = "Overall judgment";
  verdictGroup.appendChild(legend);
  VERDICTS.forEach((verdict, idx) => {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = "verdict";
    input.value = verdict;
    input.checked = state.verdict === verdict;
    input.addEventListener("change", () => {
      state.verdict = verdict;
      onChange();
    });
    label.appendChild(input);
    label.append(` ${VERDICT_LABELS[verdict]} [${idx + 1}]`);
    verdictGroup.appendChild(label);
  });
  container.appendChild(verdictGroup);

  for (const dimension of SUB_DIMENSIONS) {
    const group = document.createElement("fieldset");
    group.className = "dimension-group";
    group.dataset.dimension = dimension;
    const dimLegend = document.createElement("legend");
    // comparative scale: 1 strongly favors the left report, 5 the right
    dimLegend.textContent = `${DIMENSION_LABELS[dimension]} (1 = left much better, 5 = right much better)`;
    group.appendChild(dimLegend);
    for (let score = 1; score <= 5; score++) {
      const label = document.createElement("label");
      const input = document.createElement("input");
      input.type = "radio";
      input.name = `dim-${dimension}`;
      input.value = String(score);
      input.checked = state.subScores[dimension] === score;
      input.addEventListener("change", () => {
        state.subScores[dimension] = score;
        onChange();
      });
      label.appendChild(input);
      label.append(` ${score}`);
      group.appendChild(label);
    }
    container.appendChild(group);
  }

  const justification = document.createElement("textarea");
  justification.id = "justification";
  justification.placeholder = "Written justification (required)";
  justification.value = state.justification;
  justification.addEventListener("input", () => {
    state.justification = justification.value;
    onChange();
  });
  container.appendChild(justification);

  const submit = document.createElement("button");
  submit.id = "submit-verdict";
  submit.type = "button";
  submit.textContent = "Submit verdict";
  submit.disabled = !isComplete(state);
  container.appendChild(submit);
}

export function updateSubmitGate(container: HTMLElement, state: FormState): void {
  const submit = container.querySelector<HTMLButtonElement>("#submit-verdict");
  if (submit) submit.disabled = !isComplete(state);
}

export function syncForm(container: HTMLElement, state: FormState): void {
  // reflect state into the existing controls without re-rendering, so the
  // justification textarea keeps focus while the user types
  container.querySelectorAll<HTMLInputElement>("input[name=verdict]").forEach((input) => {
    input.checked = state.verdict === input.value;
  });
  updateSubmitGate(container, state);
}

// number keys 1-5 select the overall verdict
export function bindVerdictKeys(target: Document, state: FormState, onChange: () => void): void {
  target.addEventListener("keydown", (event) => {
    const active = target.activeElement;
    if (active && active.tagName === "TEXTAREA") return;
    const idx = Number.parseInt((event as KeyboardEvent).key, 10) - 1;
    if (idx >= 0 && idx < VERDICTS.length) {
      state.verdict = VERDICTS[idx];
      onChange();
    }
  });
}
