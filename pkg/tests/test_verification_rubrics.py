"""Verification-workflow and rubric-synthesis pipeline tests."""

import json

import pytest

from drkit.model_client import ModelResponse
from drkit.retrieval import build_index, search
from drkit.rubrics import RubricRole, RubricSpec
from drkit.synthesis.rubric_synth import (
    RubricSynthesisError,
    check_rubric_structure,
    consistency_check,
    synthesize_rubrics,
    synthesize_task,
)
from drkit.synthesis.verification import (
    StageFailure,
    VerificationPoint,
    posterior_filter,
    verification_workflow,
)


class ScriptedModel:
    def __init__(self, outputs):
        self.outputs = list(outputs)
        self.n = 0

    def complete(self, messages, max_tokens=None):
        out = self.outputs[min(self.n, len(self.outputs) - 1)]
        self.n += 1
        return ModelResponse(text=out)


FIXTURE_CORPUS = [
    ("facts", "gov.example",
     "The dam was completed in 2009 after a decade of construction.\n\n"
     "Grid capacity reached 22 gigawatts by 2012 according to the operator."),
    ("news", "news.example",
     "Officials confirmed the dam was completed in 2009.\n\n"
     "Capacity upgrades continued for years afterward."),
]


def search_fn():
    index = build_index(FIXTURE_CORPUS)
    return lambda q: search(q, index, k=5)


def extract_payload(claims):
    return json.dumps({"points": [{"claim": c, "source_span": f"s{i}"} for i, c in enumerate(claims)]})


def test_two_supported_claims():
    model = ScriptedModel([
        extract_payload(["The dam was completed in 2009.", "Grid capacity reached 22 gigawatts."]),
        json.dumps({"order": [0, 1]}),
        json.dumps({"conclusion": "support"}),
        json.dumps({"order": None}),
        json.dumps({"conclusion": "support"}),
    ])
    points, trace = verification_workflow("material with two claims", search_fn(), model)
    assert [p.conclusion for p in points] == ["support", "support"]
    assert all(p.evidence for p in points)
    names = trace.stage_names()
    assert names[0] == "extract" and names[1] == "plan" and names[-1] == "report"
    assert names.count("verify") == 2


def test_refuted_claim_carries_contradicting_citation():
    model = ScriptedModel([
        extract_payload(["The dam was completed in 1999."]),
        json.dumps({"order": [0]}),
        json.dumps({"conclusion": "refute"}),
    ])
    points, _ = verification_workflow("material", search_fn(), model)
    assert points[0].conclusion == "refute"
    assert any("2009" in e["quote"] for e in points[0].evidence)


def test_unsupported_claim_is_doubtful():
    model = ScriptedModel([
        extract_payload(["Unicorns manage the turbine hall."]),
        json.dumps({"order": [0]}),
        json.dumps({"conclusion": "doubtful"}),
    ])
    points, _ = verification_workflow("material", search_fn(), model)
    assert points[0].conclusion == "doubtful"
    assert points[0].evidence  # evidence consulted is recorded even here


def test_stage_failure_retains_partial_trace():
    model = ScriptedModel(["not json"])
    with pytest.raises(StageFailure) as info:
        verification_workflow("material", search_fn(), model)
    assert info.value.stage == "extract"
    assert info.value.trace.stages == []


def test_bad_conclusion_fails_verify_stage():
    model = ScriptedModel([
        extract_payload(["claim A"]),
        json.dumps({"order": [0]}),
        json.dumps({"conclusion": "maybe"}),
    ])
    with pytest.raises(StageFailure) as info:
        verification_workflow("material", search_fn(), model)
    assert info.value.stage == "verify"
    assert "extract" in info.value.trace.stage_names()


def point_fixture():
    return VerificationPoint(
        claim="the dam was completed in 2009",
        conclusion="support",
        evidence=[{"key": "facts#p0", "quote": "The dam was completed in 2009..."}],
    )


def test_posterior_filter_keep_and_drop():
    assert posterior_filter(point_fixture(), ScriptedModel([json.dumps({"consistent": True})]))
    assert not posterior_filter(point_fixture(), ScriptedModel([json.dumps({"consistent": False})]))


def test_posterior_filter_fails_closed_on_malformed():
    assert not posterior_filter(point_fixture(), ScriptedModel(["yes of course"]))
    assert not posterior_filter(point_fixture(), ScriptedModel([json.dumps({"consistent": "yep"})]))


# --- rubric synthesis -----------------------------------------------------------


def rubric_dicts():
    return [
        {"id": "r1", "criterion": "Does the report cite the relevant statute?", "weight": 2.0,
         "role": "explicit", "rationale": ""},
        {"id": "r2", "criterion": "Does the report quantify the market size?", "weight": 1.0,
         "role": "implicit", "rationale": ""},
        {"id": "r3", "criterion": "Does the report fabricate citations?", "weight": -1.0,
         "role": "negative", "rationale": ""},
    ]


def synth_payload(rubrics=None, summary="Analyze the merger's legal risk."):
    return json.dumps({"hidden_summary": summary, "rubrics": rubrics or rubric_dicts()})


def test_synthesize_rubrics_accepts_conforming():
    summary, rubrics = synthesize_rubrics(["seed"], ScriptedModel([synth_payload()]))
    assert len(rubrics) == 3
    assert rubrics[2].role is RubricRole.NEGATIVE


def test_negative_role_with_positive_weight_rejected():
    bad = rubric_dicts()
    bad[2]["weight"] = 1.0
    model = ScriptedModel([synth_payload(bad), synth_payload()])
    summary, rubrics = synthesize_rubrics(["seed"], model)  # retried once, then OK
    assert model.n == 2
    with pytest.raises(RubricSynthesisError):
        synthesize_rubrics(["seed"], ScriptedModel([synth_payload(bad)]))


def test_duplicate_criterion_rejected():
    bad = rubric_dicts()
    bad[1]["criterion"] = bad[0]["criterion"]
    with pytest.raises(RubricSynthesisError):
        synthesize_rubrics(["seed"], ScriptedModel([synth_payload(bad)]))


def test_multi_sentence_criterion_rejected():
    bad = rubric_dicts()
    bad[0]["criterion"] = "Does it cite the statute? Does it also explain the penalty?"
    violations = check_rubric_structure(bad)
    assert any("single sentence" in v for v in violations)


def specs():
    return [RubricSpec.from_dict(d) for d in rubric_dicts()]


def task_payload(roles=("explicit", "implicit", "negative"), missing=None):
    reassessed = [
        {"id": f"r{i+1}", "role": role, "attribution": "fits"} for i, role in enumerate(roles)
    ]
    if missing is not None:
        reassessed = [r for r in reassessed if r["id"] != missing]
    return json.dumps({"task_query": "Write the merger risk report.", "reassessed": reassessed})


def test_identical_reassessment_retained():
    sample = synthesize_task("summary", specs(), ScriptedModel([task_payload()]))
    assert sample.status == "retained"
    assert sample.reassessed_roles == ["explicit", "implicit", "negative"]


def test_role_drift_discards_whole_sample():
    sample = synthesize_task(
        "summary", specs(), ScriptedModel([task_payload(roles=("implicit", "implicit", "negative"))])
    )
    assert sample.status == "discarded_role_mismatch"


def test_missing_reassessment_discards():
    sample = synthesize_task("summary", specs(), ScriptedModel([task_payload(missing="r2")]))
    assert sample.status == "discarded_inconsistent"


def test_malformed_reassessment_discards():
    sample = synthesize_task("summary", specs(), ScriptedModel(["not json"]))
    assert sample.status == "discarded_inconsistent"


def retained_sample():
    return synthesize_task("summary", specs(), ScriptedModel([task_payload()]))


def test_consistency_keep_drop_and_veto():
    keep_judge = ScriptedModel([json.dumps({"score": 0.9, "contradictory": []})])
    score, keep = consistency_check(retained_sample(), keep_judge, threshold=0.8)
    assert (score, keep) == (0.9, True)

    low_judge = ScriptedModel([json.dumps({"score": 0.7, "contradictory": []})])
    score, keep = consistency_check(retained_sample(), low_judge, threshold=0.8)
    assert (score, keep) == (0.7, False)

    veto_judge = ScriptedModel([json.dumps({"score": 0.95, "contradictory": ["r2"]})])
    score, keep = consistency_check(retained_sample(), veto_judge, threshold=0.8)
    assert keep is False  # contradiction veto beats a high score


def test_consistency_malformed_fails_closed():
    score, keep = consistency_check(retained_sample(), ScriptedModel(["garbage"]))
    assert keep is False
