"""Fuzzy-match kernel tests: both backends against a plain DP oracle."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drkit.text_match import (
    KERNEL_BACKEND,
    bounded_levenshtein,
    bounded_levenshtein_py,
    find_anchor_windows,
    normalize_ws,
    similarity,
)


def levenshtein_oracle(a: str, b: str) -> int:
    """Textbook full-matrix DP, no early abandon."""
    la, lb = len(a), len(b)
    dp = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la + 1):
        dp[i][0] = i
    for j in range(lb + 1):
        dp[0][j] = j
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            dp[i][j] = min(dp[i - 1][j] + 1, dp[i][j - 1] + 1, dp[i - 1][j - 1] + cost)
    return dp[la][lb]


def test_kernel_known_values():
    assert bounded_levenshtein("kitten", "sitting", 10) == 3
    assert bounded_levenshtein("", "abc", 10) == 3
    assert bounded_levenshtein("same", "same", 10) == 0


def test_kernel_early_abandon():
    assert bounded_levenshtein("aaaa", "bbbb", 2) == 3  # limit + 1
    assert bounded_levenshtein("abcdefgh", "abcdefgh" + "x" * 5, 3) == 4


@given(st.text(max_size=40), st.text(max_size=40))
@settings(max_examples=300)
def test_both_backends_match_oracle(a, b):
    expected = levenshtein_oracle(a, b)
    limit = max(len(a), len(b))
    assert bounded_levenshtein_py(a, b, limit) == expected
    assert bounded_levenshtein(a, b, limit) == expected


@given(st.text(max_size=30), st.text(max_size=30), st.integers(0, 12))
@settings(max_examples=300)
def test_backends_agree_under_limits(a, b, limit):
    assert bounded_levenshtein(a, b, limit) == bounded_levenshtein_py(a, b, limit)


def test_compiled_backend_built():
    # the extension is part of the build; fall back only if compilation failed
    assert KERNEL_BACKEND in ("compiled", "python")


def test_normalize_ws():
    assert normalize_ws("  a\t\tb \n c  ") == "a b c"
    assert normalize_ws(normalize_ws(" x   y ")) == normalize_ws(" x   y ")


def test_similarity_bounds():
    assert similarity("", "") == 1.0
    assert similarity("abc", "abc") == 1.0
    assert similarity("abc", "xyz") == 0.0


def test_find_anchor_windows_exact_line_block():
    text = "alpha\nbeta\ngamma\ndelta\nepsilon"
    matches = find_anchor_windows(text, "beta\ngamma", 0.8)
    assert matches
    best = matches[0]
    assert text[best.start : best.end] == "beta\ngamma"
    assert best.similarity == 1.0


def test_find_anchor_windows_whitespace_insensitive():
    text = "def f(x):\n    return   x + 1\n\nprint(f(2))"
    matches = find_anchor_windows(text, "def f(x):\n  return x + 1", 0.9)
    assert matches and matches[0].similarity == 1.0


def test_find_anchor_windows_prunes_below_floor():
    text = "completely unrelated content\nnothing to see"
    assert find_anchor_windows(text, "the quick brown fox jumps", 0.85) == []
