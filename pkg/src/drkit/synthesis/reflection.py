"""Error-reflection trajectory generation and induced-phrase scrubbing.

A wrong answer triggers a reflection prompt; the expert retries with its
history retained, for at most three generation rounds in total. Trajectories
that recover after reflection are cleaned so no trace of the prompting
remains in the text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

MAX_GENERATION_ROUNDS = 3

DEFAULT_INDUCED_PHRASES = (
    "according to user hints",
    "as the user pointed out",
    "based on the hint provided",
)

REFLECTION_PROMPT = (
    "Your answer did not match. Reflect on what went wrong in your search and reasoning, "
    "then retry with a corrected approach."
)

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?。！？])\s+")


def scrub_induced_phrases(text: str, phrase_patterns: tuple[str, ...] = DEFAULT_INDUCED_PHRASES) -> str:
    """Drop every sentence containing a configured phrase; re-join the rest.

    Removal is sentence-level so the surviving text stays grammatical, and
    the operation is idempotent.
    """
    lowered_patterns = [p.casefold() for p in phrase_patterns]
    out_paragraphs = []
    for paragraph in text.split("\n\n"):
        sentences = _SENTENCE_SPLIT.split(paragraph)
        kept = [
            s for s in sentences if not any(p in s.casefold() for p in lowered_patterns)
        ]
        out_paragraphs.append(" ".join(s.strip() for s in kept if s.strip()))
    return "\n\n".join(p for p in out_paragraphs if p).strip()


@dataclass
class ReflectionOutcome:
    status: str  # "positive" | "reflective" | "rejected"
    rounds: int
    reflection_turns: int
    transcript: list[tuple[str, str]] = field(default_factory=list)
    final_answer: str = ""


def reflection_loop(
    task_query: str,
    reference_answer: str,
    expert,
    verifier: Callable[[str, str], bool],
    max_rounds: int = MAX_GENERATION_ROUNDS,
    phrase_patterns: tuple[str, ...] = DEFAULT_INDUCED_PHRASES,
) -> ReflectionOutcome:
    """Generate, verify, reflect, retry: at most max_rounds generations.

    First-try success is a positive sample. Success after one or more
    reflections yields a reflective sample whose text is scrubbed of induced
    phrases. Exhausting all rounds rejects the task.
    """
    transcript: list[tuple[str, str]] = [("user", task_query)]
    for round_no in range(1, max_rounds + 1):
        messages = [{"role": role, "content": content} for role, content in transcript]
        answer = expert.complete(messages).text
        transcript.append(("assistant", answer))
        if verifier(answer, reference_answer):
            reflections = round_no - 1
            if reflections == 0:
                return ReflectionOutcome(
                    status="positive",
                    rounds=round_no,
                    reflection_turns=0,
                    transcript=transcript,
                    final_answer=answer,
                )
            cleaned = [
                (role, scrub_induced_phrases(content, phrase_patterns))
                for role, content in transcript
            ]
            return ReflectionOutcome(
                status="reflective",
                rounds=round_no,
                reflection_turns=reflections,
                transcript=cleaned,
                final_answer=scrub_induced_phrases(answer, phrase_patterns),
            )
        if round_no < max_rounds:
            transcript.append(("user", REFLECTION_PROMPT))
    return ReflectionOutcome(
        status="rejected",
        rounds=max_rounds,
        reflection_turns=max_rounds - 1,
        transcript=transcript,
    )
