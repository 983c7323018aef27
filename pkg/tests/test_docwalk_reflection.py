"""Topology-walk and reflection-loop tests with scripted agents."""

import json

import pytest

from drkit.model_client import ModelResponse
from drkit.synthesis.docwalk import WalkDoc, doc_walk
from drkit.synthesis.reflection import (
    MAX_GENERATION_ROUNDS,
    reflection_loop,
    scrub_induced_phrases,
)


class ScriptedModel:
    def __init__(self, outputs):
        self.outputs = list(outputs)
        self.n = 0
        self.prompts = []

    def complete(self, messages, max_tokens=None):
        self.prompts.append(messages)
        out = self.outputs[min(self.n, len(self.outputs) - 1)]
        self.n += 1
        return ModelResponse(text=out)


def chain_index():
    return {
        "d1": WalkDoc("d1", "first document", ("d2",)),
        "d2": WalkDoc("d2", "second document", ("d3",)),
        "d3": WalkDoc("d3", "third document", ()),
    }


def qa_payload(docs):
    return json.dumps({"question": "how do they connect?", "answer": "via links", "docs_used": docs})


def test_linear_chain_walk():
    model = ScriptedModel(["d2", "d3", qa_payload(["d1", "d3"])])
    trace, qa = doc_walk(chain_index(), "d1", max_steps=5, model=model)
    assert trace.visited == ["d1", "d2", "d3"]
    assert trace.stopped_reason == "dead_end"
    assert qa is not None and qa.entities_used == ("d1", "d3")


def test_max_steps_caps_walk():
    model = ScriptedModel(["d2", qa_payload(["d1", "d2"])])
    trace, qa = doc_walk(chain_index(), "d1", max_steps=2, model=model)
    assert trace.visited == ["d1", "d2"]
    assert trace.stopped_reason == "max_steps"


def test_dead_end_single_doc():
    index = {"solo": WalkDoc("solo", "lonely doc", ())}
    trace, qa = doc_walk(index, "solo", max_steps=5, model=ScriptedModel(["unused"]))
    assert trace.visited == ["solo"]
    assert trace.stopped_reason == "dead_end"
    assert qa is None


def test_cycle_never_revisits():
    index = {
        "a": WalkDoc("a", "A", ("b",)),
        "b": WalkDoc("b", "B", ("c",)),
        "c": WalkDoc("c", "C", ("a", "b")),  # cycle back
    }
    model = ScriptedModel(["b", "c", "a", qa_payload(["a", "c"])])
    trace, qa = doc_walk(index, "a", max_steps=10, model=model)
    assert len(trace.visited) == len(set(trace.visited))
    assert trace.visited == ["a", "b", "c"]


def test_explicit_stop_signal():
    model = ScriptedModel(["d2", "STOP", qa_payload(["d1", "d2"])])
    trace, qa = doc_walk(chain_index(), "d1", max_steps=9, model=model)
    assert trace.visited == ["d1", "d2"]
    assert trace.stopped_reason == "sufficient"
    assert qa is not None


def test_qa_requires_two_visited_docs():
    model = ScriptedModel(["d2", "d3", qa_payload(["d1"])])  # model cites only one doc
    trace, qa = doc_walk(chain_index(), "d1", max_steps=5, model=model)
    assert qa is None


# --- reflection --------------------------------------------------------------


def test_first_try_success_is_positive():
    expert = ScriptedModel(["the answer is 7"])
    outcome = reflection_loop("what is 3+4?", "7", expert, lambda a, ref: ref in a)
    assert outcome.status == "positive"
    assert outcome.reflection_turns == 0
    assert outcome.rounds == 1


def test_success_on_third_round_is_reflective_with_two_reflections():
    expert = ScriptedModel(["guess 1", "guess 2", "after checking again, 7"])
    outcome = reflection_loop("q", "7", expert, lambda a, ref: ref in a)
    assert outcome.status == "reflective"
    assert outcome.rounds == 3
    assert outcome.reflection_turns == 2


def test_all_rounds_wrong_is_rejected():
    expert = ScriptedModel(["no", "nope", "still no"])
    outcome = reflection_loop("q", "7", expert, lambda a, ref: ref in a)
    assert outcome.status == "rejected"
    assert expert.n == MAX_GENERATION_ROUNDS  # never a fourth generation


def test_adversarial_expert_never_gets_extra_rounds():
    for script in (["x"] * 10, ["x", "y"] * 10):
        expert = ScriptedModel(script)
        reflection_loop("q", "zz", expert, lambda a, ref: False)
        assert expert.n == MAX_GENERATION_ROUNDS


def test_reflective_transcript_scrubbed():
    expert = ScriptedModel(
        ["wrong", "According to user hints, the answer is 7. It checks out."]
    )
    outcome = reflection_loop("q", "7", expert, lambda a, ref: ref in a)
    assert outcome.status == "reflective"
    assert "according to user hints" not in outcome.final_answer.casefold()
    assert "checks out" in outcome.final_answer


# --- scrubbing ----------------------------------------------------------------


def test_scrub_removes_offending_sentence():
    text = "The result is 42. According to user hints, we tried again. All verified."
    out = scrub_induced_phrases(text)
    assert out == "The result is 42. All verified."


def test_scrub_identity_without_patterns():
    text = "Nothing suspicious here. Just reasoning."
    assert scrub_induced_phrases(text) == text


def test_scrub_idempotent():
    text = "Keep one. according to user hints drop this! Keep two."
    once = scrub_induced_phrases(text)
    assert scrub_induced_phrases(once) == once


def test_scrub_handles_multiple_paragraphs():
    text = "Para one stays.\n\nAccording to user hints, gone. Remainder stays."
    out = scrub_induced_phrases(text)
    assert "Para one stays." in out
    assert "Remainder stays." in out
    assert "gone" not in out
