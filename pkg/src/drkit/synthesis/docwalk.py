"""Hyperlink topology walks over a document index, reverse-generating QA
pairs from the information collected along the path."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from drkit.synthesis.graph import QaPair

STOP_TOKEN = "STOP"


@dataclass(frozen=True)
class WalkDoc:
    doc_id: str
    text: str
    links: tuple[str, ...] = ()


def load_walk_docs(path: Union[str, Path]) -> dict[str, WalkDoc]:
    docs = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        doc = WalkDoc(row["doc_id"], row["text"], tuple(row.get("links", [])))
        docs[doc.doc_id] = doc
    return docs


@dataclass
class WalkTrace:
    visited: list[str] = field(default_factory=list)
    stopped_reason: str = ""  # "max_steps" | "dead_end" | "sufficient"


def doc_walk(
    index: dict[str, WalkDoc],
    start: str,
    max_steps: int,
    model,
) -> tuple[WalkTrace, Optional[QaPair]]:
    """Follow hyperlinks from start until max_steps, a dead end, or the
    walking agent signals it has collected enough.

    Every hop must be a link present in the current document; no document is
    visited twice. The collected node info is consolidated into a QA pair
    once at least two documents were seen.
    """
    if start not in index:
        raise KeyError(f"start document {start!r} not in index")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")

    trace = WalkTrace(visited=[start])
    current = index[start]
    while len(trace.visited) < max_steps:
        candidates = [l for l in current.links if l in index and l not in trace.visited]
        if not candidates:
            trace.stopped_reason = "dead_end"
            break
        choice = model.complete(
            [
                {
                    "role": "system",
                    "content": (
                        "You are walking a document index by hyperlinks, mining information "
                        f"without prior knowledge of the target. Reply with one link id to follow, "
                        f"or {STOP_TOKEN} if you have collected sufficient information."
                    ),
                },
                {
                    "role": "user",
                    "content": f"Current document {current.doc_id}:\n{current.text}\nLinks: {candidates}",
                },
            ]
        ).text.strip()
        if choice == STOP_TOKEN:
            trace.stopped_reason = "sufficient"
            break
        next_id = choice if choice in candidates else candidates[0]
        trace.visited.append(next_id)
        current = index[next_id]
    if not trace.stopped_reason:
        trace.stopped_reason = "max_steps"

    if len(trace.visited) < 2:
        return trace, None

    collected = "\n\n".join(f"[{doc_id}] {index[doc_id].text}" for doc_id in trace.visited)
    raw = model.complete(
        [
            {
                "role": "system",
                "content": (
                    "Consolidate the collected documents into one question-answer pair that "
                    "requires information from at least two of them. Respond with JSON: "
                    '{"question": ..., "answer": ..., "docs_used": [...]}.'
                ),
            },
            {"role": "user", "content": collected},
        ]
    ).text
    try:
        payload = json.loads(raw)
        docs_used = [d for d in payload.get("docs_used", []) if d in trace.visited]
        if len(docs_used) < 2:
            return trace, None
        qa = QaPair(
            question=payload["question"],
            answer=payload["answer"],
            entities_used=tuple(docs_used),
            provenance={"pipeline": "doc_walk", "start": start, "path": list(trace.visited)},
        )
    except (json.JSONDecodeError, KeyError, TypeError):
        return trace, None
    return trace, qa
