"""Evaluation engine: ensemble rubric judging, weighted report scoring with
fatal-error override and tiering, pairwise scheduling, and Elo rating."""

from __future__ import annotations

import itertools
import math
import random
import re
from dataclasses import dataclass, field
from enum import Enum

from drkit.rubrics import RubricRole, RubricSpec

TRIALS_PER_RUBRIC = 3

POSITIVE_JUDGE_PREAMBLE = (
    "You are an expert evaluator. Judge whether the document satisfies the criterion "
    "on a three-tier scale and answer with exactly one label: "
    "'Not Satisfied (Score: 0.0)', 'Partially Satisfied (Score: 0.5)', or 'Satisfied (Score: 1.0)'."
)

# Negative rubrics describe flaws; the scale is inverted: 0.0 means the flaw
# is absent (good document), 1.0 means the flaw is fully present (bad document).
NEGATIVE_JUDGE_PREAMBLE = (
    "You are an expert quality-control evaluator. The criterion describes a flaw. "
    "Score the degree to which the flaw is PRESENT and answer with exactly one label: "
    "'Not Satisfied (Score: 0.0)' if the flaw is absent, "
    "'Partially Satisfied (Score: 0.5)' if it is partially present, or "
    "'Satisfied (Score: 1.0)' if it is fully present."
)

_LABEL_PATTERNS: list[tuple[re.Pattern[str], float]] = [
    (re.compile(r"\bnot\s+satisfied\b", re.IGNORECASE), 0.0),
    (re.compile(r"\bpartially\s+satisfied\b", re.IGNORECASE), 0.5),
    (re.compile(r"\bsatisfied\b", re.IGNORECASE), 1.0),
    (re.compile(r"\bscore\s*:?\s*0\.0\b", re.IGNORECASE), 0.0),
    (re.compile(r"\bscore\s*:?\s*0\.5\b", re.IGNORECASE), 0.5),
    (re.compile(r"\bscore\s*:?\s*1\.0\b", re.IGNORECASE), 1.0),
]


def parse_trial_verdict(raw: str) -> float | None:
    """Map a judge response onto {0, 0.5, 1}; None when unparseable."""
    for pattern, score in _LABEL_PATTERNS:
        if pattern.search(raw):
            return score
    return None


@dataclass
class EnsembleScore:
    rubric_id: str
    trial_scores: list[float | None]  # length 3; None marks an invalid trial
    unevaluable: bool = False

    @property
    def mean(self) -> float:
        valid = [s for s in self.trial_scores if s is not None]
        if not valid:
            return math.nan
        return sum(valid) / len(valid)


def judge_rubric_ensemble(report: str, rubric: RubricSpec, judge) -> EnsembleScore:
    """Three independent trials per rubric, arithmetic-mean score.

    judge is a model client: judge.complete(messages) -> text, expected to be
    configured at temperature 0. Positive rubrics use the satisfaction prompt,
    negative rubrics the flaw-detection prompt. A malformed trial is retried
    once, then recorded invalid; two or more invalid trials mark the rubric
    unevaluable (excluded from weighted scoring).
    """
    preamble = (
        NEGATIVE_JUDGE_PREAMBLE if rubric.role is RubricRole.NEGATIVE else POSITIVE_JUDGE_PREAMBLE
    )
    messages = [
        {"role": "system", "content": preamble},
        {"role": "user", "content": f"Criterion: {rubric.criterion}\n\nDocument:\n{report}"},
    ]
    trials: list[float | None] = []
    for _ in range(TRIALS_PER_RUBRIC):
        score = parse_trial_verdict(judge.complete(messages).text)
        if score is None:  # one retry per trial
            score = parse_trial_verdict(judge.complete(messages).text)
        trials.append(score)
    invalid = sum(1 for s in trials if s is None)
    return EnsembleScore(rubric_id=rubric.id, trial_scores=trials, unevaluable=invalid >= 2)


class NoPositiveRubricError(ValueError):
    pass


def weighted_report_score(ensembles: list[tuple[EnsembleScore, float, RubricRole]]) -> float:
    """Score in [0, 100]: positive mass earned minus penalties, floor at 0.

    score = 100 * max(0, sum_pos w*m - sum_neg |w|*m) / sum_pos w.
    Unevaluable ensembles are excluded from numerator and denominator so a
    judge failure never penalizes the report.
    """
    usable = [(e, w, role) for e, w, role in ensembles if not e.unevaluable]
    pos_mass = sum(w for _, w, role in usable if role.is_positive)
    if pos_mass <= 0:
        raise NoPositiveRubricError("no evaluable positive rubric")
    earned = sum(w * e.mean for e, w, role in usable if role.is_positive)
    penalty = sum(abs(w) * e.mean for e, w, role in usable if role is RubricRole.NEGATIVE)
    return 100.0 * max(0.0, earned - penalty) / pos_mass


def zero_score_override(score: float, judgments, fatal_rubric_ids: set[str]) -> float:
    """Fatal negative rubric triggered (binary 1) -> the report is unusable: 0."""
    for j in judgments:
        if j.rubric.id in fatal_rubric_ids and j.rubric.role is RubricRole.NEGATIVE and j.binary == 1:
            return 0.0
    return score


@dataclass(frozen=True)
class TierBoundaries:
    """Ordered, contiguous tiers; half-open [lower, upper) except topmost inclusive."""

    tiers: tuple[tuple[str, float, float], ...]

    def __post_init__(self) -> None:
        ordered = sorted(self.tiers, key=lambda t: t[1])
        for (_, lo, hi), (_, nlo, _) in zip(ordered, ordered[1:]):
            if not math.isclose(hi, nlo):
                raise ValueError("tiers must be contiguous and non-overlapping")
        for name, lo, hi in self.tiers:
            if hi <= lo:
                raise ValueError(f"tier {name!r} has empty range [{lo}, {hi})")


# Professional-domain default: Tier 1 25-35, Tier 2 15-25, Tier 3 0-15.
DEFAULT_TIERS = TierBoundaries(
    tiers=(("Tier 1", 25.0, 35.0), ("Tier 2", 15.0, 25.0), ("Tier 3", 0.0, 15.0))
)


def tier_assign(score: float, boundaries: TierBoundaries = DEFAULT_TIERS) -> str:
    ordered = sorted(boundaries.tiers, key=lambda t: t[1])
    top_name, top_lo, top_hi = ordered[-1]
    if top_lo <= score <= top_hi:  # topmost bound is inclusive
        return top_name
    for name, lo, hi in ordered:
        if lo <= score < hi:
            return name
    raise ValueError(f"score {score} outside tier range [{ordered[0][1]}, {top_hi}]")


class Verdict(str, Enum):
    LEFT_BETTER = "left_better"
    RIGHT_BETTER = "right_better"
    BOTH_GOOD = "both_good"
    BOTH_FAIR = "both_fair"
    BOTH_POOR = "both_poor"


SUB_DIMENSIONS = (
    "information_completeness",
    "content_depth",
    "requirement_fitness",
    "readability",
)


@dataclass(frozen=True)
class PairwiseRecord:
    """One blind comparison: five-way verdict plus four ordinal sub-scores."""

    query_id: str
    left_system: str
    right_system: str
    verdict: Verdict
    sub_scores: dict[str, int]
    justification: str
    reviewer_id: str
    side_order_seed: int = 0
    timestamp: str = ""

    def __post_init__(self) -> None:
        missing = [d for d in SUB_DIMENSIONS if d not in self.sub_scores]
        if missing:
            raise ValueError(f"missing sub-dimension scores: {missing}")

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "left_system": self.left_system,
            "right_system": self.right_system,
            "verdict": self.verdict.value,
            "sub_scores": dict(self.sub_scores),
            "justification": self.justification,
            "reviewer_id": self.reviewer_id,
            "side_order_seed": self.side_order_seed,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PairwiseRecord":
        return cls(
            query_id=str(d["query_id"]),
            left_system=d["left_system"],
            right_system=d["right_system"],
            verdict=Verdict(d["verdict"]),
            sub_scores={k: int(v) for k, v in d["sub_scores"].items()},
            justification=d["justification"],
            reviewer_id=d["reviewer_id"],
            side_order_seed=int(d.get("side_order_seed", 0)),
            timestamp=d.get("timestamp", ""),
        )


@dataclass(frozen=True)
class Pairing:
    query_id: str
    left_system: str
    right_system: str
    side_order_seed: int


def schedule_pairings(
    systems: list[str],
    queries: list[str],
    mode: str = "round_robin",
    subject: str | None = None,
    seed: int = 0,
) -> list[Pairing]:
    """Build the comparison schedule.

    round_robin yields |queries| * C(|systems|, 2) pairings; one_vs_rest yields
    |queries| * (|systems| - 1) with the subject in every pair. Side order is
    randomized per pairing from the seed, so identities cannot be inferred
    from position.
    """
    if mode == "round_robin":
        base = list(itertools.combinations(systems, 2))
    elif mode == "one_vs_rest":
        if subject is None or subject not in systems:
            raise ValueError("one_vs_rest requires a subject drawn from systems")
        base = [(subject, other) for other in systems if other != subject]
    else:
        raise ValueError(f"unknown scheduling mode: {mode}")

    rng = random.Random(seed)
    pairings = []
    for query in queries:
        for a, b in base:
            side_seed = rng.randrange(2**31)
            left, right = (a, b) if random.Random(side_seed).random() < 0.5 else (b, a)
            pairings.append(Pairing(query, left, right, side_seed))
    return pairings


INITIAL_RATING = 1500.0
DEFAULT_K = 32.0

# All three both_* verdicts count as a draw for rating purposes; the labels
# are preserved in the win/tie/loss tallies.
_LEFT_SCORE = {
    Verdict.LEFT_BETTER: 1.0,
    Verdict.RIGHT_BETTER: 0.0,
    Verdict.BOTH_GOOD: 0.5,
    Verdict.BOTH_FAIR: 0.5,
    Verdict.BOTH_POOR: 0.5,
}


def expected_score(rating_a: float, rating_b: float) -> float:
    """Logistic expectation: E_a = 1 / (1 + 10^((R_b - R_a)/400))."""
    return 1.0 / (1.0 + 10.0 ** ((rating_b - rating_a) / 400.0))


@dataclass
class EloTable:
    ratings: dict[str, float] = field(default_factory=dict)
    k_factor: float = DEFAULT_K
    history: list[PairwiseRecord] = field(default_factory=list)

    def rating(self, system: str) -> float:
        return self.ratings.get(system, INITIAL_RATING)


def elo_update(table: EloTable, record: PairwiseRecord) -> EloTable:
    """Apply one comparison: R'_a = R_a + K * (S_a - E_a), symmetric for b.

    The rating sum is conserved because S_a + S_b = 1 and E_a + E_b = 1.
    """
    r_a = table.rating(record.left_system)
    r_b = table.rating(record.right_system)
    s_a = _LEFT_SCORE[record.verdict]
    e_a = expected_score(r_a, r_b)
    table.ratings[record.left_system] = r_a + table.k_factor * (s_a - e_a)
    table.ratings[record.right_system] = r_b + table.k_factor * ((1.0 - s_a) - (1.0 - e_a))
    table.history.append(record)
    return table


@dataclass(frozen=True)
class LeaderboardRow:
    system: str
    rating: float
    wins: int
    ties: int
    losses: int


def leaderboard(
    records: list[PairwiseRecord],
    k_factor: float = DEFAULT_K,
    systems: list[str] | None = None,
) -> list[LeaderboardRow]:
    """Replay records in timestamp order; rating-descending board with tallies.

    systems seeds the board so never-compared systems still appear at 1500.
    """
    table = EloTable(k_factor=k_factor)
    tallies: dict[str, list[int]] = {}
    for system in systems or []:
        table.ratings.setdefault(system, INITIAL_RATING)
        tallies.setdefault(system, [0, 0, 0])
    for record in sorted(records, key=lambda r: (r.timestamp, r.query_id, r.left_system)):
        elo_update(table, record)
        for system in (record.left_system, record.right_system):
            tallies.setdefault(system, [0, 0, 0])
        score = _LEFT_SCORE[record.verdict]
        if score == 0.5:
            tallies[record.left_system][1] += 1
            tallies[record.right_system][1] += 1
        elif score == 1.0:
            tallies[record.left_system][0] += 1
            tallies[record.right_system][2] += 1
        else:
            tallies[record.left_system][2] += 1
            tallies[record.right_system][0] += 1
    rows = [
        LeaderboardRow(system, table.rating(system), *tallies.get(system, [0, 0, 0]))
        for system in table.ratings
    ]
    rows.sort(key=lambda r: (-r.rating, r.system))
    return rows
