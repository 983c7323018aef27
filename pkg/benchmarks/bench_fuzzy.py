"""Benchmark: compiled fuzzy-match kernel vs the pure-Python fallback.

The anchor-window scan runs one bounded Levenshtein DP per candidate window,
which dominates patch-apply time on long documents. Run:

    python benchmarks/bench_fuzzy.py [--docs N] [--lines N]
"""

from __future__ import annotations

import argparse
import random
import time

import drkit.text_match as text_match
from drkit.text_match import KERNEL_BACKEND, bounded_levenshtein_py, find_anchor_windows


def make_document(rng: random.Random, n_lines: int) -> str:
    words = "alpha beta gamma delta epsilon zeta eta theta iota kappa".split()
    return "\n".join(
        f"line {i:04d}: " + " ".join(rng.choice(words) for _ in range(rng.randint(5, 10)))
        for i in range(n_lines)
    )


def bench(kernel, label: str, documents, anchors) -> float:
    original = text_match._bounded_levenshtein
    text_match._bounded_levenshtein = kernel
    try:
        start = time.perf_counter()
        for doc, anchor in zip(documents, anchors):
            find_anchor_windows(doc, anchor, 0.85)
        elapsed = time.perf_counter() - start
    finally:
        text_match._bounded_levenshtein = original
    print(f"{label:>10}: {elapsed * 1000:8.1f} ms  ({elapsed / len(documents) * 1000:6.1f} ms/doc)")
    return elapsed


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--docs", type=int, default=6)
    parser.add_argument("--lines", type=int, default=200)
    args = parser.parse_args()

    rng = random.Random(7)
    documents, anchors = [], []
    for _ in range(args.docs):
        doc = make_document(rng, args.lines)
        lines = doc.split("\n")
        start = rng.randrange(5, len(lines) - 8)
        anchor = "\n".join(lines[start : start + 4]).replace(" ", "  ", 3)
        documents.append(doc)
        anchors.append(anchor)

    print(
        f"anchor-window scan: {args.docs} docs x {args.lines} lines "
        f"(backend built: {KERNEL_BACKEND})"
    )
    py = bench(bounded_levenshtein_py, "python", documents, anchors)
    if KERNEL_BACKEND == "compiled":
        from drkit._speedups import bounded_levenshtein as compiled

        ext = bench(compiled, "compiled", documents, anchors)
        print(f"{'speedup':>10}: {py / ext:8.1f}x")
    else:
        print("(compiled extension not built; only the fallback was timed)")


if __name__ == "__main__":
    main()
