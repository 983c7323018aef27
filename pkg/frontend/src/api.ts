// Typed client for the review service HTTP API. The UI talks to the
// documented endpoints only; there are no private routes.

export type Verdict =
  | "left_better"
  | "right_better"
  | "both_good"
  | "both_fair"
  | "both_poor";

export const VERDICTS: Verdict[] = [
  "left_better",
  "right_better",
  "both_good",
  "both_fair",
  "both_poor",
];

export const SUB_DIMENSIONS = [
  "information_completeness",
  "content_depth",
  "requirement_fitness",
  "readability",
] as const;

export type SubDimension = (typeof SUB_DIMENSIONS)[number];

export interface BlindPair {
  pair_id: string;
  query: string;
  left_report: string;
  right_report: string;
}

export type NextPairResult =
  | ({ status: "ok" } & BlindPair)
  | { status: "none_remaining" };

export interface VerdictSubmission {
  pair_id: string;
  reviewer_id: string;
  verdict: Verdict;
  sub_scores: Record<SubDimension, number>;
  justification: string;
}

export interface LeaderboardRow {
  system: string;
  rating: number;
  wins: number;
  ties: number;
  losses: number;
}

export interface LeaderboardSnapshot {
  ratings: LeaderboardRow[];
  progress: { completed: number; queued: number };
}

export interface ApiConfig {
  baseUrl: string;
  sessionId: string;
  reviewerId: string;
  reviewerToken?: string;
}

export class ReviewApi {
  constructor(private config: ApiConfig) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.config.reviewerToken) {
      headers["Authorization"] = `Bearer ${this.config.reviewerToken}`;
    }
    return headers;
  }

  private url(path: string): string {
    return `${this.config.baseUrl}/sessions/${encodeURIComponent(this.config.sessionId)}${path}`;
  }

  async nextPair(): Promise<NextPairResult> {
    const response = await fetch(
      this.url(`/next?reviewer=${encodeURIComponent(this.config.reviewerId)}`),
      { headers: this.headers() },
    );
    if (!response.ok) {
      throw new Error(`next pair failed: ${response.status}`);
    }
    return (await response.json()) as NextPairResult;
  }

  async submitVerdict(body: VerdictSubmission): Promise<{ status: string; duplicate: boolean }> {
    const response = await fetch(this.url("/verdicts"), {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify(body),
    });
    if (response.status === 409) {
      throw new LeaseExpiredError();
    }
    if (!response.ok) {
      throw new Error(`verdict rejected: ${response.status}`);
    }
    return (await response.json()) as { status: string; duplicate: boolean };
  }

  async leaderboard(): Promise<LeaderboardSnapshot> {
    const response = await fetch(this.url("/leaderboard"), { headers: this.headers() });
    if (!response.ok) {
      throw new Error(`leaderboard failed: ${response.status}`);
    }
    return (await response.json()) as LeaderboardSnapshot;
  }

  async exportLog(): Promise<string> {
    const response = await fetch(this.url("/export"), { headers: this.headers() });
    if (!response.ok) {
      throw new Error(`export failed: ${response.status}`);
    }
    return await response.text();
  }
}

export class LeaseExpiredError extends Error {
  constructor() {
    super("lease expired; fetch the pairing again");
  }
}
