"""Anchor-based patch editing with fuzzy matching and all-or-nothing writes.

The caller supplies only the fragment to change plus minimal surrounding
context; locating it is the tool's job. An exact, unique occurrence wins
outright; otherwise the best fuzzy window must clear the similarity floor
and beat the runner-up by a margin. Writes go through a temp file and an
atomic rename so a failure at any point leaves the target untouched.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock

from drkit.text_match import find_anchor_windows, overlaps

DEFAULT_MIN_SIMILARITY = 0.85
AMBIGUITY_MARGIN = 0.05
MIN_ANCHOR_CHARS = 8  # non-whitespace characters


class PatchError(Exception):
    pass


class NoMatchError(PatchError):
    def __init__(self, best_similarity: float, min_similarity: float):
        self.best_similarity = best_similarity
        super().__init__(
            f"no anchor match: best similarity {best_similarity:.3f} < {min_similarity:.3f}"
        )


class AmbiguousAnchorError(PatchError):
    def __init__(self, similarities: tuple[float, float]):
        self.similarities = similarities
        super().__init__(
            f"ambiguous anchor: top candidates at {similarities[0]:.3f} and {similarities[1]:.3f}"
        )


class AnchorTooShortError(PatchError):
    def __init__(self, length: int):
        super().__init__(
            f"anchor has {length} non-whitespace characters, minimum is {MIN_ANCHOR_CHARS}"
        )


@dataclass(frozen=True)
class PatchRequest:
    target_path: str
    anchor: str
    replacement: str
    min_similarity: float = DEFAULT_MIN_SIMILARITY

    def __post_init__(self) -> None:
        if not self.anchor:
            raise ValueError("anchor must be nonempty")
        if not 0.0 <= self.min_similarity <= 1.0:
            raise ValueError("min_similarity must be in [0, 1]")


@dataclass(frozen=True)
class PatchResult:
    match_kind: str  # "exact" | "fuzzy"
    similarity: float
    span: tuple[int, int]  # char offsets of the replaced anchor in LF-normalized text


def _read_normalized(path: Path) -> tuple[str, bool]:
    """Returns (LF-normalized text, had_crlf)."""
    raw = path.read_bytes().decode("utf-8")
    had_crlf = "\r\n" in raw
    return raw.replace("\r\n", "\n"), had_crlf


def _atomic_write(path: Path, text: str, restore_crlf: bool) -> None:
    if restore_crlf:
        text = text.replace("\n", "\r\n")
    data = text.encode("utf-8")
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def _locate_exact(text: str, anchor: str) -> list[int]:
    positions = []
    start = 0
    while True:
        idx = text.find(anchor, start)
        if idx < 0:
            return positions
        positions.append(idx)
        start = idx + 1


def apply_patch(request: PatchRequest) -> PatchResult:
    """Replace exactly one occurrence of the anchor; file unchanged on error.

    Concurrent patches against the same target serialize on a per-file lock;
    distinct targets proceed in parallel.
    """
    nonws = sum(1 for c in request.anchor if not c.isspace())
    if nonws < MIN_ANCHOR_CHARS:
        raise AnchorTooShortError(nonws)

    path = Path(request.target_path)
    with FileLock(str(path) + ".lock"):
        return _apply_locked(request, path)


def _apply_locked(request: PatchRequest, path: Path) -> PatchResult:
    text, had_crlf = _read_normalized(path)
    anchor = request.anchor.replace("\r\n", "\n")

    exact = _locate_exact(text, anchor)
    if len(exact) > 1:
        raise AmbiguousAnchorError((1.0, 1.0))
    if len(exact) == 1:
        start = exact[0]
        end = start + len(anchor)
        patched = text[:start] + request.replacement + text[end:]
        _atomic_write(path, patched, had_crlf)
        return PatchResult(match_kind="exact", similarity=1.0, span=(start, end))

    matches = find_anchor_windows(text, anchor, request.min_similarity)
    if not matches:
        # rescan without the floor to report how close the best candidate was
        probes = find_anchor_windows(text, anchor, 0.0)
        best = probes[0].similarity if probes else 0.0
        raise NoMatchError(best, request.min_similarity)

    best = matches[0]
    runner = next((m for m in matches[1:] if not overlaps(best, m)), None)
    if runner is not None and best.similarity - runner.similarity < AMBIGUITY_MARGIN:
        raise AmbiguousAnchorError((best.similarity, runner.similarity))

    patched = text[: best.start] + request.replacement + text[best.end :]
    _atomic_write(path, patched, had_crlf)
    return PatchResult(match_kind="fuzzy", similarity=best.similarity, span=(best.start, best.end))
