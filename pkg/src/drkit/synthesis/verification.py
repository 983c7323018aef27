"""Five-stage fact verification: extract, plan, verify, replan, report.

Each stage's inputs and outputs are recorded in a workflow trace, and every
verification point ends with a conclusion (support / refute / doubtful)
backed by the evidence consulted. A posterior judge then filters points
whose conclusion is not self-consistent with that evidence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

CONCLUSIONS = ("support", "refute", "doubtful")


@dataclass
class VerificationPoint:
    claim: str
    source_span: str = ""
    conclusion: Optional[str] = None
    evidence: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "claim": self.claim,
            "source_span": self.source_span,
            "conclusion": self.conclusion,
            "evidence": list(self.evidence),
        }


@dataclass
class WorkflowTrace:
    stages: list[dict] = field(default_factory=list)

    def record(self, stage: str, detail: dict) -> None:
        self.stages.append({"stage": stage, **detail})

    def stage_names(self) -> list[str]:
        return [s["stage"] for s in self.stages]


class StageFailure(Exception):
    def __init__(self, stage: str, cause: str, trace: WorkflowTrace):
        self.stage = stage
        self.trace = trace
        super().__init__(f"verification stage {stage!r} failed: {cause}")


def _parse_json(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return None


def verification_workflow(
    material: str,
    search: Callable[[str], list],
    model,
    max_replans: int = 2,
) -> tuple[list[VerificationPoint], WorkflowTrace]:
    """Run the extract -> plan -> verify -> replan -> report pipeline.

    The extract stage decomposes the material into independent verification
    points; planning orders them by logical dependency; verification searches
    and judges each point; replanning may adjust the remaining direction; the
    report stage attaches final conclusions with citation evidence. A stage
    failure aborts with the partial trace retained on the exception.
    """
    if not material.strip():
        raise ValueError("material must be nonempty")
    trace = WorkflowTrace()

    # extract: factual decomposition into independent points
    raw = model.complete(
        [
            {
                "role": "system",
                "content": (
                    "Decompose the material into independent factual verification points "
                    "(time, location, subjects, core data, causal events). "
                    'Respond with JSON: {"points": [{"claim": ..., "source_span": ...}]}.'
                ),
            },
            {"role": "user", "content": material},
        ]
    ).text
    payload = _parse_json(raw)
    if not payload or "points" not in payload or not payload["points"]:
        raise StageFailure("extract", "no verification points parsed", trace)
    points = [
        VerificationPoint(claim=p["claim"], source_span=p.get("source_span", ""))
        for p in payload["points"]
    ]
    trace.record("extract", {"n_points": len(points)})

    # plan: verification order from logical dependencies
    raw = model.complete(
        [
            {
                "role": "system",
                "content": (
                    "Order these verification points by logical dependency and state the "
                    'required source type for each. Respond with JSON: {"order": [indices]}.'
                ),
            },
            {"role": "user", "content": json.dumps([p.claim for p in points])},
        ]
    ).text
    payload = _parse_json(raw)
    order = payload.get("order") if payload else None
    if not order or sorted(order) != list(range(len(points))):
        order = list(range(len(points)))  # fall back to extraction order
    trace.record("plan", {"order": order})

    pending = [points[i] for i in order]
    replans = 0
    while pending:
        point = pending.pop(0)
        hits = search(point.claim)
        evidence = []
        for hit in hits[:5]:
            evidence.append(
                {
                    "key": getattr(hit, "para_id", ""),
                    "quote": getattr(hit, "snippet", str(hit)),
                }
            )
        if not evidence:
            evidence.append({"key": "(no results)", "quote": f"search returned nothing for: {point.claim}"})
        raw = model.complete(
            [
                {
                    "role": "system",
                    "content": (
                        "Cross-validate the claim against the retrieved evidence. "
                        'Respond with JSON: {"conclusion": "support"|"refute"|"doubtful"}.'
                    ),
                },
                {"role": "user", "content": json.dumps({"claim": point.claim, "evidence": evidence})},
            ]
        ).text
        payload = _parse_json(raw)
        conclusion = payload.get("conclusion") if payload else None
        if conclusion not in CONCLUSIONS:
            raise StageFailure("verify", f"bad conclusion {conclusion!r} for {point.claim!r}", trace)
        point.conclusion = conclusion
        point.evidence = evidence
        trace.record("verify", {"claim": point.claim, "conclusion": conclusion, "n_evidence": len(evidence)})

        # replan: summarize progress, adjust direction while points remain
        if pending and replans < max_replans:
            raw = model.complete(
                [
                    {
                        "role": "system",
                        "content": (
                            "Given verified points so far, adjust the remaining verification order. "
                            'Respond with JSON: {"order": [indices into remaining]} or {"order": null} to keep it.'
                        ),
                    },
                    {"role": "user", "content": json.dumps([p.claim for p in pending])},
                ]
            ).text
            payload = _parse_json(raw)
            new_order = payload.get("order") if payload else None
            if new_order and sorted(new_order) == list(range(len(pending))):
                pending = [pending[i] for i in new_order]
                replans += 1
                trace.record("replan", {"order": new_order})

    trace.record("report", {"conclusions": {p.claim: p.conclusion for p in points}})
    return points, trace


def posterior_filter(point: VerificationPoint, judge) -> bool:
    """Keep only points whose (claim, conclusion, evidence) triplet the judge
    affirms as self-consistent; malformed judge output drops the point."""
    raw = judge.complete(
        [
            {
                "role": "system",
                "content": (
                    "Is the conclusion logically self-consistent with the evidence for this claim? "
                    'Respond with JSON: {"consistent": true|false}.'
                ),
            },
            {"role": "user", "content": json.dumps(point.to_dict())},
        ]
    ).text
    payload = _parse_json(raw)
    if not payload or not isinstance(payload.get("consistent"), bool):
        return False
    return payload["consistent"]
