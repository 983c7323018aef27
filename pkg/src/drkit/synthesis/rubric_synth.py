"""Two-step reverse rubric synthesis with role reassessment and an
objective-consistency gate.

Step one generates a hidden task summary plus atomic rubrics; step two
synthesizes the actual task query from the rubrics and re-assesses each
rubric's role against it. Any role drift discards the whole sample; an
independent judge then scores summary/task/rubric consistency.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from drkit.rubrics import RubricRole, RubricSpec

CONSISTENCY_THRESHOLD = 0.8


@dataclass
class SynthSample:
    hidden_summary: str
    rubrics: list[RubricSpec]
    task_query: str = ""
    reassessed_roles: list[str] = field(default_factory=list)
    status: str = "pending"  # retained | discarded_role_mismatch | discarded_inconsistent

    def to_dict(self) -> dict:
        return {
            "hidden_summary": self.hidden_summary,
            "rubrics": [r.to_dict() for r in self.rubrics],
            "task_query": self.task_query,
            "reassessed_roles": list(self.reassessed_roles),
            "status": self.status,
        }


def _single_sentence(text: str) -> bool:
    # atomicity proxy: one terminal punctuation mark at most, at the end
    stripped = text.strip()
    terminals = sum(stripped.count(c) for c in ".!?。！？")
    return terminals <= 1 and (terminals == 0 or stripped[-1] in ".!?。！？")


def check_rubric_structure(rubrics: list[dict]) -> list[str]:
    """Mechanical checks for the rubric-writing principles: single-sentence
    criteria (atomicity), no duplicated text (independence), and
    role/weight sign agreement. Returns violation messages, empty if clean."""
    violations = []
    seen = set()
    for i, r in enumerate(rubrics):
        criterion = r.get("criterion", "")
        role = r.get("role", "")
        weight = r.get("weight", 0)
        if not _single_sentence(criterion):
            violations.append(f"rubric {i}: criterion is not a single sentence")
        key = criterion.strip().casefold()
        if key in seen:
            violations.append(f"rubric {i}: duplicate criterion text")
        seen.add(key)
        if role == "negative" and weight >= 0:
            violations.append(f"rubric {i}: negative role requires negative weight")
        if role in ("explicit", "implicit") and weight <= 0:
            violations.append(f"rubric {i}: positive role requires positive weight")
    return violations


class RubricSynthesisError(Exception):
    pass


def synthesize_rubrics(seeds: list[str], model) -> tuple[str, list[RubricSpec]]:
    """Step one: hidden task summary plus fine-grained atomic rubrics.

    A structural violation rejects the batch and retries generation once.
    """
    messages = [
        {
            "role": "system",
            "content": (
                "Generate a hidden task summary and a set of atomic rubrics. Each rubric is one "
                "clear single requirement with an importance weight and a role: explicit, implicit, "
                "or negative (negative roles take negative weights). Respond with JSON: "
                '{"hidden_summary": ..., "rubrics": [{"id", "criterion", "weight", "role", "rationale"}]}.'
            ),
        },
        {"role": "user", "content": "Examples:\n" + "\n".join(seeds)},
    ]
    last_violations: list[str] = []
    for _ in range(2):
        raw = model.complete(messages).text
        try:
            payload = json.loads(raw)
            summary = payload["hidden_summary"]
            rubric_dicts = payload["rubrics"]
        except (json.JSONDecodeError, KeyError, TypeError):
            last_violations = ["unparseable model output"]
            continue
        violations = check_rubric_structure(rubric_dicts)
        if violations:
            last_violations = violations
            continue
        rubrics = [RubricSpec.from_dict(d) for d in rubric_dicts]
        return summary, rubrics
    raise RubricSynthesisError("; ".join(last_violations))


def synthesize_task(hidden_summary: str, rubrics: list[RubricSpec], model) -> SynthSample:
    """Step two: synthesize the user task from the rubrics and re-assess roles.

    The sample is retained only when every reassessed role equals its initial
    assignment; any discrepancy discards the entire sample.
    """
    sample = SynthSample(hidden_summary=hidden_summary, rubrics=rubrics)
    raw = model.complete(
        [
            {
                "role": "system",
                "content": (
                    "Synthesize the actual user task query matching the hidden summary and rubrics. "
                    "Re-assess the role of each rubric for the synthesized task with brief attribution. "
                    'Respond with JSON: {"task_query": ..., '
                    '"reassessed": [{"id", "role", "attribution"}]}.'
                ),
            },
            {
                "role": "user",
                "content": json.dumps(
                    {"hidden_summary": hidden_summary, "rubrics": [r.to_dict() for r in rubrics]}
                ),
            },
        ]
    ).text
    try:
        payload = json.loads(raw)
        sample.task_query = payload["task_query"]
        reassessed = {r["id"]: r["role"] for r in payload["reassessed"]}
    except (json.JSONDecodeError, KeyError, TypeError):
        sample.status = "discarded_inconsistent"
        return sample

    roles = []
    for rubric in rubrics:
        if rubric.id not in reassessed:
            sample.status = "discarded_inconsistent"
            return sample
        roles.append(reassessed[rubric.id])
    sample.reassessed_roles = roles
    if any(role != rubric.role.value for role, rubric in zip(roles, rubrics)):
        sample.status = "discarded_role_mismatch"
    else:
        sample.status = "retained"
    return sample


def consistency_check(
    sample: SynthSample, judge, threshold: float = CONSISTENCY_THRESHOLD
) -> tuple[float, bool]:
    """Independent judge scores summary-task consistency and rubric-task
    alignment; keep requires the score to clear the threshold with no rubric
    flagged contradictory. Malformed judge output fails closed."""
    raw = judge.complete(
        [
            {
                "role": "system",
                "content": (
                    "Evaluate the consistency between the hidden task summary and the synthesized "
                    "task, and the alignment of each rubric with the task requirements. Flag any "
                    'rubric contradicting the task objectives. Respond with JSON: '
                    '{"score": 0..1, "contradictory": [rubric ids]}.'
                ),
            },
            {"role": "user", "content": json.dumps(sample.to_dict())},
        ]
    ).text
    try:
        payload = json.loads(raw)
        score = float(payload["score"])
        contradictory = list(payload.get("contradictory", []))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        return 0.0, False
    if not 0.0 <= score <= 1.0:
        return 0.0, False
    return score, score >= threshold and not contradictory
