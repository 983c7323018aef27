"""Trajectory and QA filters: difficulty, plan alignment, cleaning rules,
temporal grounding, and language-mix density.

Every filter is a pure function of its inputs: same inputs, same decision.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime
from typing import Callable, Optional

from drkit.episode import Trajectory

PLAN_STEP_MATCH_THRESHOLD = 0.5  # token Jaccard for one step
PLAN_KEEP_THRESHOLD = 0.75
NGRAM_N = 8
LANGUAGE_DENSITY_THRESHOLD = 0.2

_YEAR = re.compile(r"\b(19|20)\d{2}\b")
_CODE_FENCE = re.compile(r"```.*?```", re.DOTALL)
_TOKEN = re.compile(r"\w+", re.UNICODE)


def _normalize_answer(text: str) -> str:
    return re.sub(r"\s+", " ", text.casefold()).strip().strip(".")


@dataclass(frozen=True)
class DifficultyDecision:
    keep: bool
    flagged: bool = False
    baseline_answer: str = ""


def difficulty_filter(
    question: str,
    reference_answer: str,
    baseline: Callable[[str], str],
) -> DifficultyDecision:
    """Drop tasks the baseline agent already solves (normalized exact match).

    A baseline failure keeps the task, flagged, rather than losing data to
    infrastructure errors.
    """
    try:
        answer = baseline(question)
    except Exception:
        return DifficultyDecision(keep=True, flagged=True)
    solved = _normalize_answer(answer) == _normalize_answer(reference_answer)
    return DifficultyDecision(keep=not solved, baseline_answer=answer)


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union) if union else 0.0


def trajectory_action_texts(trajectory: Trajectory) -> list[str]:
    """One text per step: the reasoning prose plus the tool calls made."""
    texts = []
    for step in trajectory.steps:
        parts = [step.raw_output]
        for call in step.calls:
            parts.append(call.get("name", ""))
            parts.append(" ".join(str(v) for v in call.get("arguments", {}).values()))
        texts.append(" ".join(p for p in parts if p))
    return texts


@dataclass(frozen=True)
class AlignmentDecision:
    keep: bool
    alignment: float


def plan_alignment_filter(
    trajectory: Trajectory,
    plan: list[str],
    step_threshold: float = PLAN_STEP_MATCH_THRESHOLD,
    keep_threshold: float = PLAN_KEEP_THRESHOLD,
) -> AlignmentDecision:
    """Alignment = fraction of plan steps matched in order by trajectory actions.

    A plan step matches the first not-yet-consumed action whose token Jaccard
    overlap clears the step threshold; order matters, so a trajectory that
    completes the task while deviating from the plan still scores low.
    """
    if not plan:
        return AlignmentDecision(keep=True, alignment=1.0)
    actions = [set(_TOKEN.findall(t.casefold())) for t in trajectory_action_texts(trajectory)]
    matched = 0
    cursor = 0
    for step in plan:
        step_tokens = set(_TOKEN.findall(step.casefold()))
        for idx in range(cursor, len(actions)):
            if _jaccard(step_tokens, actions[idx]) >= step_threshold:
                matched += 1
                cursor = idx + 1
                break
    alignment = matched / len(plan)
    return AlignmentDecision(keep=alignment >= keep_threshold, alignment=alignment)


def select_shortest_correct(trajectories: list[Trajectory]) -> list[Trajectory]:
    """Among successful trajectories with matching answers keep only the
    minimum reasoning-step count; ties are all retained."""
    groups: dict[str, list[Trajectory]] = {}
    for traj in trajectories:
        groups.setdefault(_normalize_answer(traj.final_report or ""), []).append(traj)
    kept = []
    for members in groups.values():
        shortest = min(t.reasoning_step_count() for t in members)
        kept.extend(t for t in members if t.reasoning_step_count() == shortest)
    return [t for t in trajectories if t in kept]


def max_ngram_repeats(tokens: list[str], n: int = NGRAM_N) -> int:
    """Occurrences beyond the first of the most repeated n-gram."""
    if len(tokens) < n:
        return 0
    counts: dict[tuple[str, ...], int] = {}
    best = 1
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
        if counts[gram] > best:
            best = counts[gram]
    return best - 1


def _trajectory_tokens(trajectory: Trajectory) -> list[str]:
    parts = [step.raw_output for step in trajectory.steps]
    if trajectory.final_report:
        parts.append(trajectory.final_report)
    return " ".join(parts).split()


def ngram_dedup(
    trajectories: list[Trajectory],
    n: int = NGRAM_N,
    repeat_threshold: int = 5,
) -> list[Trajectory]:
    """Drop trajectories with degenerate repetition: more than
    repeat_threshold repeats of any single n-gram."""
    return [
        t for t in trajectories if max_ngram_repeats(_trajectory_tokens(t), n) <= repeat_threshold
    ]


def temporal_filter(trajectory: Trajectory, now: datetime) -> bool:
    """Keep unless a search query anchors a time-agnostic task to a past year.

    When the task itself mentions no year, any issued query carrying a
    4-digit year strictly earlier than the current year is the stale-anchor
    failure mode; such trajectories are dropped.
    """
    if _YEAR.search(trajectory.query):
        return True
    for query in trajectory.search_queries():
        for match in _YEAR.finditer(query):
            if int(match.group(0)) < now.year:
                return False
    return True


_LATIN = re.compile(r"[A-Za-z]")
_CJK = re.compile(r"[一-鿿㐀-䶿]")


def _script_density(segment: str, primary_language: str) -> float:
    """Foreign-script letter share of a prose segment, code fences excluded."""
    prose = _CODE_FENCE.sub("", segment)
    latin = len(_LATIN.findall(prose))
    cjk = len(_CJK.findall(prose))
    total = latin + cjk
    if total == 0:
        return 0.0
    foreign = latin if primary_language == "zh" else cjk
    return foreign / total


def language_mix_filter(
    trajectory: Trajectory,
    primary_language: str = "zh",
    density_threshold: float = LANGUAGE_DENSITY_THRESHOLD,
) -> bool:
    """Keep unless any prose segment exceeds the foreign-script density
    threshold; tool payloads and fenced code blocks are exempt."""
    for segment in trajectory.prose_segments():
        if _script_density(segment, primary_language) > density_threshold:
            return False
    return True
