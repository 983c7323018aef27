"""Fuzzy anchor location over text: the matching core behind the patch tool.

The bounded Levenshtein kernel is the hot inner loop (one DP per candidate
window). A compiled extension is used when available; the pure-Python
implementation below is the reference and the fallback. Both must agree
exactly; tests and benchmarks/bench_fuzzy.py compare them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_WS_RUN = re.compile(r"\s+")


def normalize_ws(text: str) -> str:
    """Collapse every whitespace run to a single space and trim the ends."""
    return _WS_RUN.sub(" ", text).strip()


def bounded_levenshtein_py(a: str, b: str, limit: int) -> int:
    """Levenshtein distance, early-abandoned: returns limit + 1 when exceeded."""
    la, lb = len(a), len(b)
    if limit < 0:
        limit = 0
    if la > lb:
        a, b, la, lb = b, a, lb, la
    if lb - la > limit:
        return limit + 1
    if la == 0:
        return lb if lb <= limit else limit + 1
    prev = list(range(la + 1))
    for j in range(1, lb + 1):
        cb = b[j - 1]
        cur = [j] + [0] * la
        row_min = j
        for i in range(1, la + 1):
            cost = 0 if a[i - 1] == cb else 1
            dist = min(prev[i - 1] + cost, prev[i] + 1, cur[i - 1] + 1)
            cur[i] = dist
            if dist < row_min:
                row_min = dist
        if row_min > limit:
            return limit + 1
        prev = cur
    return prev[la] if prev[la] <= limit else limit + 1


try:  # compiled kernel, if the extension built
    from drkit._speedups import bounded_levenshtein as _bounded_levenshtein

    KERNEL_BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on build env
    _bounded_levenshtein = bounded_levenshtein_py
    KERNEL_BACKEND = "python"


def bounded_levenshtein(a: str, b: str, limit: int) -> int:
    return _bounded_levenshtein(a, b, limit)


def similarity(a: str, b: str) -> float:
    """Normalized Levenshtein similarity in [0, 1] over raw strings."""
    if not a and not b:
        return 1.0
    n = max(len(a), len(b))
    return 1.0 - bounded_levenshtein(a, b, n) / n


@dataclass(frozen=True)
class WindowMatch:
    start: int  # char offset into the original text
    end: int
    similarity: float


def _line_spans(text: str) -> list[tuple[int, int]]:
    """(start, end) char offsets of each line, excluding the newline."""
    spans = []
    pos = 0
    for line in text.split("\n"):
        spans.append((pos, pos + len(line)))
        pos += len(line) + 1
    return spans


def find_anchor_windows(
    text: str,
    anchor: str,
    min_similarity: float,
) -> list[WindowMatch]:
    """Score every candidate line window of the text against the anchor.

    Candidates are contiguous line spans of n-1, n and n+1 lines where n is
    the anchor's line count; similarity is computed on whitespace-normalized
    strings so whitespace-run differences never disqualify a window. Matches
    below min_similarity are pruned via the bounded kernel, which is what
    keeps the scan cheap. Results are sorted best-first, position ascending
    on ties.
    """
    norm_anchor = normalize_ws(anchor)
    if not norm_anchor:
        return []
    spans = _line_spans(text)
    n_lines = max(1, anchor.count("\n") + 1)
    widths = {w for w in (n_lines - 1, n_lines, n_lines + 1) if 1 <= w <= len(spans)}

    matches: list[WindowMatch] = []
    la = len(norm_anchor)
    for width in sorted(widths):
        for i in range(len(spans) - width + 1):
            start = spans[i][0]
            end = spans[i + width - 1][1]
            window = normalize_ws(text[start:end])
            n = max(la, len(window))
            if n == 0:
                continue
            # dist > limit  <=>  similarity < min_similarity
            limit = int(n * (1.0 - min_similarity))
            dist = bounded_levenshtein(norm_anchor, window, limit)
            if dist > limit:
                continue
            matches.append(WindowMatch(start, end, 1.0 - dist / n))
    matches.sort(key=lambda m: (-m.similarity, m.start, m.end))
    return matches


def overlaps(a: WindowMatch, b: WindowMatch) -> bool:
    return a.start < b.end and b.start < a.end
