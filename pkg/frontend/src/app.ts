// Single-page blind review app: fetch an anonymized pair, capture the
// verdict, submit, advance. All coordination (leases, idempotency, Elo)
// lives server-side; a hard refresh reconstructs everything from the API.

import { BlindPair, LeaseExpiredError, ReviewApi, SubDimension, VerdictSubmission } from "./api.js";
import { bindVerdictKeys, emptyForm, FormState, isComplete, renderForm, syncForm } from "./form.js";
import { renderMarkdown } from "./render.js";

export interface AppElements {
  root: HTMLElement;
  doc: Document;
}

export class ReviewApp {
  private form: FormState = emptyForm();
  private current: BlindPair | null = null;

  constructor(
    private api: ReviewApi,
    private reviewerId: string,
    private elements: AppElements,
  ) {}

  async start(): Promise<void> {
    bindVerdictKeys(this.elements.doc, this.form, () => this.refreshForm());
    await this.showNextPair();
  }

  private el(id: string): HTMLElement {
    const found = this.elements.doc.getElementById(id);
    if (!found) throw new Error(`missing element #${id}`);
    return found;
  }

  async showNextPair(): Promise<void> {
    const result = await this.api.nextPair();
    if (result.status === "none_remaining") {
      this.current = null;
      this.renderCompletion();
      return;
    }
    this.current = result;
    this.form = emptyForm();
    this.renderPair(result);
  }

  private renderPair(pair: BlindPair): void {
    const root = this.elements.root;
    root.innerHTML = `
      <header>
        <h1>Blind pairwise review</h1>
        <div id="query-box"></div>
      </header>
      <main class="pair">
        <section class="report" id="left-report"><h2>Left</h2><div class="report-body scroll"></div></section>
        <section class="report" id="right-report"><h2>Right</h2><div class="report-body scroll"></div></section>
      </main>
      <form id="verdict-form"></form>
      <nav>
        <button id="show-leaderboard" type="button">Leaderboard</button>
        <span id="status-line"></span>
      </nav>
      <section id="leaderboard-box" hidden></section>
    `;
    this.el("query-box").textContent = pair.query;
    const left = root.querySelector("#left-report .report-body") as HTMLElement;
    const right = root.querySelector("#right-report .report-body") as HTMLElement;
    left.innerHTML = renderMarkdown(pair.left_report);
    right.innerHTML = renderMarkdown(pair.right_report);

    const formBox = this.el("verdict-form");
    renderForm(formBox as HTMLElement, this.form, () => this.refreshForm());
    formBox.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      if (target.id === "submit-verdict") void this.submit();
    });
    this.el("show-leaderboard").addEventListener("click", () => void this.toggleLeaderboard());
  }

  private refreshForm(): void {
    // submission is handled by the form-level click delegation set up in
    // renderPair; sync-in-place keeps focus and never stacks listeners
    const formBox = this.elements.doc.getElementById("verdict-form");
    if (!formBox || !this.current) return;
    syncForm(formBox as HTMLElement, this.form);
  }

  async submit(): Promise<void> {
    if (!this.current || !isComplete(this.form)) return;
    const body: VerdictSubmission = {
      pair_id: this.current.pair_id,
      reviewer_id: this.reviewerId,
      verdict: this.form.verdict!,
      sub_scores: this.form.subScores as Record<SubDimension, number>,
      justification: this.form.justification.trim(),
    };
    try {
      await this.api.submitVerdict(body);
    } catch (error) {
      if (error instanceof LeaseExpiredError) {
        this.setStatus("Lease expired; refetching the pairing.");
        await this.showNextPair();
        return;
      }
      this.setStatus(`Submit failed, retrying: ${String(error)}`);
      await this.api.submitVerdict(body); // idempotent on pair_id + reviewer
    }
    await this.showNextPair();
  }

  private setStatus(text: string): void {
    const line = this.elements.doc.getElementById("status-line");
    if (line) line.textContent = text;
  }

  private renderCompletion(): void {
    this.elements.root.innerHTML = `
      <section id="completion">
        <h1>Session complete</h1>
        <p>No pairings remain for this reviewer. Thank you.</p>
        <button id="show-leaderboard" type="button">Leaderboard</button>
        <section id="leaderboard-box" hidden></section>
      </section>
    `;
    this.el("show-leaderboard").addEventListener("click", () => void this.toggleLeaderboard());
  }

  async toggleLeaderboard(): Promise<void> {
    const box = this.el("leaderboard-box");
    if (!box.hidden) {
      box.hidden = true;
      return;
    }
    const snapshot = await this.api.leaderboard();
    const rows = snapshot.ratings
      .map(
        (row) => `
        <tr>
          <td>${row.system}</td>
          <td>${row.rating.toFixed(1)}</td>
          <td>${row.wins}</td>
          <td>${row.ties}</td>
          <td>${row.losses}</td>
          <td><span class="bar win" style="width:${row.wins * 8}px"></span><span class="bar tie" style="width:${row.ties * 8}px"></span><span class="bar loss" style="width:${row.losses * 8}px"></span></td>
        </tr>`,
      )
      .join("");
    box.innerHTML = `
      <h2>Leaderboard</h2>
      <p id="progress">Progress: ${snapshot.progress.completed} / ${snapshot.progress.queued}</p>
      <table id="leaderboard-table">
        <thead><tr><th>System</th><th>Rating</th><th>W</th><th>T</th><th>L</th><th>Win/Tie/Loss</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
    `;
    box.hidden = false;
  }
}

export function configFromLocation(doc: Document): {
  baseUrl: string;
  sessionId: string;
  reviewerId: string;
  reviewerToken?: string;
} {
  const params = new URLSearchParams(doc.location?.search ?? "");
  return {
    baseUrl: params.get("base") ?? "",
    sessionId: params.get("session") ?? "",
    reviewerId: params.get("reviewer") ?? "anonymous",
    reviewerToken: params.get("token") ?? undefined,
  };
}

export function boot(doc: Document): ReviewApp {
  const config = configFromLocation(doc);
  const api = new ReviewApi(config);
  const root = doc.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const app = new ReviewApp(api, config.reviewerId, { root, doc });
  void app.start();
  return app;
}

declare const window: (Window & typeof globalThis) | undefined;

if (typeof window !== "undefined" && typeof document !== "undefined" && document.getElementById("app")) {
  boot(document);
}
