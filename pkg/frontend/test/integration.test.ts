// Integration against the real review service over HTTP: the UI's API client
// drives the documented endpoints end to end.

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";

let service: ChildProcess | null = null;
let baseUrl = "";

async function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address && typeof address === "object") {
        const port = address.port;
        probe.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

async function waitForService(url: string, timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(url + "/");
      if (response.status < 500) return;
    } catch (error) {
      lastError = error;
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`service did not come up: ${String(lastError)}`);
}

beforeAll(async () => {
  const port = await freePort();
  const dataDir = mkdtempSync(join(tmpdir(), "review-ui-it-"));
  baseUrl = `http://127.0.0.1:${port}`;
  const code = [
    "import uvicorn",
    "from drkit.service import create_app",
    `app = create_app(${JSON.stringify(dataDir)})`,
    `uvicorn.run(app, host='127.0.0.1', port=${port}, log_level='warning')`,
  ].join("\n");
  service = spawn("python3", ["-c", code], { stdio: ["ignore", "pipe", "pipe"] });
  await waitForService(baseUrl);
}, 30000);

afterAll(() => {
  service?.kill("SIGTERM");
});

const SUBS = {
  information_completeness: 4,
  content_depth: 4,
  requirement_fitness: 3,
  readability: 5,
};

describe("real service round-trip", () => {
  it("verdict appears once in /export and moves the leaderboard by the Elo formula", async () => {
    const create = await fetch(`${baseUrl}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        systems: ["sys-one", "sys-two"],
        queries: [{ id: "q1", text: "Which report is stronger?" }],
        reports: {
          "sys-one": { q1: "Report one body." },
          "sys-two": { q1: "Report two body." },
        },
        mode: "round_robin",
      }),
    });
    expect(create.status).toBe(200);
    const { session_id } = (await create.json()) as { session_id: string };

    const api = new ReviewApi({ baseUrl, sessionId: session_id, reviewerId: "rev-it" });
    const pair = await api.nextPair();
    expect(pair.status).toBe("ok");
    if (pair.status !== "ok") return;
    expect(JSON.stringify(pair)).not.toContain("sys-one");
    expect(JSON.stringify(pair)).not.toContain("sys-two");

    const submission = {
      pair_id: pair.pair_id,
      reviewer_id: "rev-it",
      verdict: "left_better" as const,
      sub_scores: SUBS,
      justification: "left covers the requirement more directly",
    };
    const first = await api.submitVerdict(submission);
    expect(first.duplicate).toBe(false);
    const retry = await api.submitVerdict(submission); // idempotent
    expect(retry.duplicate).toBe(true);

    const exportText = await api.exportLog();
    const lines = exportText.split("\n").filter((l) => l.trim());
    expect(lines).toHaveLength(1);
    const record = JSON.parse(lines[0]);
    expect(record.pair_id).toBe(pair.pair_id);

    // equal 1500 start, decisive verdict, K=32: winner 1516, loser 1484
    const board = await api.leaderboard();
    const ratings = Object.fromEntries(board.ratings.map((r) => [r.system, r.rating]));
    const winner = record.left_system as string;
    const loser = record.right_system as string;
    expect(ratings[winner]).toBeCloseTo(1516, 9);
    expect(ratings[loser]).toBeCloseTo(1484, 9);

    expect(board.progress).toEqual({ completed: 1, queued: 1 });
    expect((await api.nextPair()).status).toBe("none_remaining");
  }, 30000);
});
