"""Summary-aware offloading of oversized tool results, with demand paging.

Results at or under the threshold pass through inline. Anything larger is
spilled verbatim to a file and only a short summary enters the context; the
agent pages the raw bytes back in ranges as needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

DEFAULT_THRESHOLD = 8192
EXCERPT_BYTES = 512

Summarizer = Callable[[bytes], str]


@dataclass(frozen=True)
class OffloadRecord:
    summary: str
    spill_path: str
    original_length: int
    threshold: int


def head_tail_summary(payload: bytes) -> str:
    """Deterministic default summary: first/last excerpt plus a length note."""
    head = payload[:EXCERPT_BYTES].decode("utf-8", errors="replace")
    tail = payload[-EXCERPT_BYTES:].decode("utf-8", errors="replace")
    return (
        f"[offloaded: {len(payload)} bytes]\n"
        f"--- head ---\n{head}\n"
        f"--- tail ---\n{tail}"
    )


def offload_result(
    payload: bytes,
    threshold: int = DEFAULT_THRESHOLD,
    summarizer: Summarizer = head_tail_summary,
    spill_dir: Union[str, Path, None] = None,
    name: str = "result",
) -> Union[bytes, OffloadRecord]:
    """Inline payloads of length <= threshold (inclusive); spill the rest."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if len(payload) <= threshold:
        return payload
    directory = Path(spill_dir) if spill_dir is not None else Path.cwd()
    directory.mkdir(parents=True, exist_ok=True)
    spill_path = directory / f"{name}.bin"
    counter = 0
    while spill_path.exists():
        counter += 1
        spill_path = directory / f"{name}.{counter}.bin"
    spill_path.write_bytes(payload)
    return OffloadRecord(
        summary=summarizer(payload),
        spill_path=str(spill_path),
        original_length=len(payload),
        threshold=threshold,
    )


def read_page(spill_path: Union[str, Path], offset: int, length: int) -> bytes:
    """Read min(length, remaining) bytes at offset; past-the-end reads are empty."""
    if offset < 0 or length < 0:
        raise ValueError("offset and length must be non-negative")
    with open(spill_path, "rb") as fh:
        fh.seek(offset)
        return fh.read(length)
