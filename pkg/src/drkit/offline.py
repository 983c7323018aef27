"""Deterministic offline stand-ins for model backends.

Every class here implements the model-client protocol by actually reading
the prompt it receives, so the synthesis and judging operations exercise
their full contracts without a network. Template generators are seeded and
reproducible; the lexical judge grades by content-word coverage.
"""

from __future__ import annotations

import json
import random
import re
from typing import Optional

from drkit.model_client import ModelResponse

_STOPWORDS = frozenset(
    "a an and are as at be by does do for from has have how in into is it of on or report "
    "that the this to was were will with "
    # instruction verbs common in rubric phrasing, not content
    "state explain identify describe analyze discuss give present".split()
)


def _canon(word: str) -> str:
    # fold trivial plurals so "queues" matches "queue"
    if word.endswith("s") and len(word) > 3 and not word.endswith("ss"):
        return word[:-1]
    return word


def content_words(text: str) -> set[str]:
    return {
        _canon(w)
        for w in re.findall(r"\w+", text.casefold())
        if w not in _STOPWORDS and (len(w) > 2 or not w.isascii())
    }


class LexicalJudge:
    """Coverage-based ternary judge: full when nearly all criterion content
    words appear in the document, partial at half coverage, else not.

    For flaw-style (negative) criteria the same coverage measures how
    present the flaw's markers are, which matches the inverted scale.
    """

    def __init__(self, full_threshold: float = 0.8, partial_threshold: float = 0.4):
        self.full_threshold = full_threshold
        self.partial_threshold = partial_threshold

    def complete(self, messages: list[dict], max_tokens: Optional[int] = None) -> ModelResponse:
        user = next((m["content"] for m in messages if m["role"] == "user"), "")
        match = re.search(r"Criterion:\s*(.*?)\n\nDocument:\n(.*)", user, re.DOTALL)
        if not match:
            return ModelResponse(text="Not Satisfied (Score: 0.0)")
        criterion, document = match.group(1), match.group(2)
        wanted = content_words(criterion)
        if not wanted:
            return ModelResponse(text="Not Satisfied (Score: 0.0)")
        present = content_words(document)
        coverage = len(wanted & present) / len(wanted)
        if coverage >= self.full_threshold:
            return ModelResponse(text="Satisfied (Score: 1.0)")
        if coverage >= self.partial_threshold:
            return ModelResponse(text="Partially Satisfied (Score: 0.5)")
        return ModelResponse(text="Not Satisfied (Score: 0.0)")


class TemplateQuestionModel:
    """Builds a multi-hop question from the facts in its prompt.

    The answer is the entity co-occurring with the most other entities in
    the fact lines; the question names three of its co-occurring entities
    and never the answer itself.
    """

    def __init__(self, rng: Optional[random.Random] = None):
        self.rng = rng or random.Random(0)

    def complete(self, messages: list[dict], max_tokens: Optional[int] = None) -> ModelResponse:
        user = next((m["content"] for m in messages if m["role"] == "user"), "")
        fact_lines = [l[2:] for l in user.splitlines() if l.startswith("- ")]
        entities_match = re.search(r"Entities: \[(.*)\]", user)
        entities = []
        if entities_match:
            entities = [e.strip().strip("'\"") for e in entities_match.group(1).split(",") if e.strip()]

        mentions = {
            e: sum(1 for line in fact_lines if e.casefold() in line.casefold()) for e in entities
        }
        ranked = sorted(entities, key=lambda e: (-mentions.get(e, 0), e))
        if not ranked:
            return ModelResponse(text="{}")
        answer = ranked[0]
        others = [e for e in ranked[1:] if mentions.get(e, 0) > 0 and e.casefold() not in answer.casefold()]
        self.rng.shuffle(others)
        used = sorted(others[:3])
        question = (
            "Which single entity is directly connected, through the documented relations, "
            f"to each of the following: {', '.join(used)}?"
        )
        payload = {"question": question, "answer": answer, "entities_used": used + [answer]}
        return ModelResponse(text=json.dumps(payload, ensure_ascii=False))


class TemplateWalkModel:
    """Seeded link chooser plus a QA consolidator for topology walks."""

    def __init__(self, rng: Optional[random.Random] = None, stop_probability: float = 0.0):
        self.rng = rng or random.Random(0)
        self.stop_probability = stop_probability

    def complete(self, messages: list[dict], max_tokens: Optional[int] = None) -> ModelResponse:
        system = next((m["content"] for m in messages if m["role"] == "system"), "")
        user = next((m["content"] for m in messages if m["role"] == "user"), "")
        if "Consolidate" in system:
            doc_ids = re.findall(r"^\[([^\]]+)\]", user, re.MULTILINE)
            if len(doc_ids) < 2:
                return ModelResponse(text="{}")
            first, last = doc_ids[0], doc_ids[-1]
            payload = {
                "question": (
                    f"Starting from the subject of document {first}, what fact is established "
                    f"by the document reached at the end of the link chain?"
                ),
                "answer": f"the content of {last}",
                "docs_used": [first, last],
            }
            return ModelResponse(text=json.dumps(payload, ensure_ascii=False))
        match = re.search(r"Links: \[(.*)\]", user)
        candidates = []
        if match:
            candidates = [c.strip().strip("'\"") for c in match.group(1).split(",") if c.strip()]
        if not candidates or self.rng.random() < self.stop_probability:
            return ModelResponse(text="STOP")
        return ModelResponse(text=self.rng.choice(sorted(candidates)))


class TemplateRubricModel:
    """Reverse-synthesizes a summary and structurally valid rubrics from the
    seed examples in its prompt."""

    def complete(self, messages: list[dict], max_tokens: Optional[int] = None) -> ModelResponse:
        user = next((m["content"] for m in messages if m["role"] == "user"), "")
        seeds = [l.strip() for l in user.splitlines()[1:] if l.strip()]
        rubrics = []
        for i, seed in enumerate(seeds):
            topic = seed.rstrip(".?!")
            rubrics.append(
                {
                    "id": f"r{i}-explicit",
                    "criterion": f"Does the report directly address {topic}?",
                    "weight": 2.0,
                    "role": "explicit",
                    "rationale": "stated requirement",
                }
            )
            rubrics.append(
                {
                    "id": f"r{i}-implicit",
                    "criterion": f"Does the report support its points about {topic} with cited evidence?",
                    "weight": 1.0,
                    "role": "implicit",
                    "rationale": "expected of research output",
                }
            )
        rubrics.append(
            {
                "id": "r-neg-fabrication",
                "criterion": "Does the report present fabricated statistics without sources?",
                "weight": -2.0,
                "role": "negative",
                "rationale": "penalty item",
            }
        )
        summary = "Research task covering: " + "; ".join(s.rstrip(".") for s in seeds) + "."
        return ModelResponse(
            text=json.dumps({"hidden_summary": summary, "rubrics": rubrics}, ensure_ascii=False)
        )


class TemplateTaskModel:
    """Synthesizes the user task from the rubric payload it is shown and
    re-assesses every role faithfully (so conforming samples are retained)."""

    def complete(self, messages: list[dict], max_tokens: Optional[int] = None) -> ModelResponse:
        user = next((m["content"] for m in messages if m["role"] == "user"), "")
        payload = json.loads(user)
        rubrics = payload["rubrics"]
        explicit = [r["criterion"] for r in rubrics if r["role"] == "explicit"]
        task_query = (
            "Write a research report. " + " ".join(c.replace("Does the report", "It must") for c in explicit)
        )
        reassessed = [
            {"id": r["id"], "role": r["role"], "attribution": "matches the synthesized task"}
            for r in rubrics
        ]
        return ModelResponse(
            text=json.dumps({"task_query": task_query, "reassessed": reassessed}, ensure_ascii=False)
        )


class TemplateConsistencyJudge:
    """Scores summary/task consistency by shared content words."""

    def complete(self, messages: list[dict], max_tokens: Optional[int] = None) -> ModelResponse:
        user = next((m["content"] for m in messages if m["role"] == "user"), "")
        try:
            payload = json.loads(user)
            summary_words = content_words(payload.get("hidden_summary", ""))
            task_words = content_words(payload.get("task_query", ""))
        except json.JSONDecodeError:
            return ModelResponse(text="{}")
        if not summary_words:
            score = 0.0
        else:
            score = len(summary_words & task_words) / len(summary_words)
        return ModelResponse(
            text=json.dumps({"score": round(score, 4), "contradictory": []})
        )
