"""Paragraph-granular lexical search with authority-aware ranking and an
exact-query result cache.

This is the local stand-in for a production retrieval stack: a BM25 index
over blank-line-delimited paragraphs, a curated-site boost applied only when
relevance scores are comparable, and an LRU cache keyed on the normalized
query so repeated searches never touch the backend or the budget.
"""

from __future__ import annotations

import json
import math
import re
import threading
import unicodedata
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

BM25_K1 = 1.2
BM25_B = 0.75
COMPARABILITY_EPSILON = 0.02  # fraction of the top score
DEFAULT_CACHE_CAPACITY = 4096

_TOKEN = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.casefold())


def normalize_query(query: str) -> str:
    """Case-folded, whitespace-collapsed, trimmed; idempotent."""
    folded = unicodedata.normalize("NFKC", query).casefold()
    return re.sub(r"\s+", " ", folded).strip()


@dataclass(frozen=True)
class Paragraph:
    para_id: str
    doc_id: str
    site: str
    text: str
    date: str = ""  # ISO date of the source doc, empty when unknown


@dataclass
class ParagraphIndex:
    paragraphs: list[Paragraph] = field(default_factory=list)
    postings: dict[str, list[int]] = field(default_factory=dict)
    term_freqs: list[Counter] = field(default_factory=list)
    doc_lens: list[int] = field(default_factory=list)
    avgdl: float = 0.0

    def __len__(self) -> int:
        return len(self.paragraphs)


def split_paragraphs(text: str) -> list[str]:
    """Blank-line-delimited segments; empty segments dropped."""
    return [seg.strip() for seg in re.split(r"\n\s*\n", text) if seg.strip()]


def build_index(corpus: Iterable[tuple]) -> ParagraphIndex:
    """corpus yields (doc_id, site, text[, date]); deterministic for a given
    ordering."""
    index = ParagraphIndex()
    for row in corpus:
        doc_id, site, text = row[0], row[1], row[2]
        date = row[3] if len(row) > 3 else ""
        for seq, para_text in enumerate(split_paragraphs(text)):
            pid = f"{doc_id}#p{seq}"
            pos = len(index.paragraphs)
            index.paragraphs.append(Paragraph(pid, doc_id, site, para_text, date))
            tokens = tokenize(para_text)
            index.term_freqs.append(Counter(tokens))
            index.doc_lens.append(len(tokens))
            for term in sorted(set(tokens)):
                index.postings.setdefault(term, []).append(pos)
    if index.doc_lens:
        index.avgdl = sum(index.doc_lens) / len(index.doc_lens)
    return index


def load_corpus_dir(directory: Union[str, Path]) -> list[tuple[str, str, str]]:
    """Directory of UTF-8 .txt files; file stem is the doc id, site defaults to it."""
    docs = []
    for path in sorted(Path(directory).glob("*.txt")):
        docs.append((path.stem, path.stem, path.read_text(encoding="utf-8")))
    return docs


def load_corpus_jsonl(path: Union[str, Path]) -> list[tuple[str, str, str, str]]:
    docs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        docs.append((row["doc_id"], row.get("site", row["doc_id"]), row["text"], row.get("date", "")))
    return docs


@dataclass(frozen=True)
class AuthorityList:
    sites: frozenset[str] = frozenset()
    boost: float = 1.0

    def __post_init__(self) -> None:
        if self.boost < 1:
            raise ValueError("boost must be >= 1")

    @classmethod
    def from_file(cls, path: Union[str, Path], boost: float = 1.0) -> "AuthorityList":
        sites = {
            line.strip()
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.startswith("#")
        }
        return cls(sites=frozenset(sites), boost=boost)

    def __contains__(self, site: str) -> bool:
        return site in self.sites


@dataclass(frozen=True)
class SearchHit:
    para_id: str
    doc_id: str
    snippet: str
    relevance: float
    authoritative: bool
    final_rank: int

    def to_dict(self) -> dict:
        return {
            "para_id": self.para_id,
            "doc_id": self.doc_id,
            "snippet": self.snippet,
            "relevance": self.relevance,
            "authoritative": self.authoritative,
            "final_rank": self.final_rank,
        }


class BudgetExhausted(Exception):
    pass


class SearchBudget:
    """Counts backend searches; cache hits are exempt by construction."""

    def __init__(self, limit: Optional[int] = None):
        self.limit = limit
        self.used = 0
        self._lock = threading.Lock()

    @property
    def remaining(self) -> Optional[int]:
        return None if self.limit is None else self.limit - self.used

    def charge(self) -> None:
        with self._lock:
            if self.limit is not None and self.used >= self.limit:
                raise BudgetExhausted(f"search budget of {self.limit} exhausted")
            self.used += 1


class QueryCache:
    """Exact-normalized-key LRU; insertion of an existing key refreshes it."""

    def __init__(self, capacity: int = DEFAULT_CACHE_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._entries: OrderedDict[str, list[SearchHit]] = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: str) -> Optional[list[SearchHit]]:
        with self._lock:
            if key not in self._entries:
                return None
            self._entries.move_to_end(key)
            return self._entries[key]

    def put(self, key: str, hits: list[SearchHit]) -> None:
        with self._lock:
            self._entries[key] = hits
            self._entries.move_to_end(key)
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)

    def __len__(self) -> int:
        return len(self._entries)


def _bm25_scores(index: ParagraphIndex, terms: list[str]) -> dict[int, float]:
    n = len(index.paragraphs)
    scores: dict[int, float] = {}
    for term, qf in Counter(terms).items():
        posting = index.postings.get(term)
        if not posting:
            continue
        df = len(posting)
        idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
        for pos in posting:
            tf = index.term_freqs[pos][term]
            dl = index.doc_lens[pos]
            denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / index.avgdl)
            scores[pos] = scores.get(pos, 0.0) + qf * idf * tf * (BM25_K1 + 1.0) / denom
    return scores


def search(
    query: str,
    index: ParagraphIndex,
    authority: AuthorityList = AuthorityList(),
    cache: Optional[QueryCache] = None,
    budget: Optional[SearchBudget] = None,
    k: int = 10,
    site_filter: Optional[str] = None,
    recency_filter: Optional[str] = None,
) -> list[SearchHit]:
    """Top-k hits under the comparable-relevance authority rule.

    When two hits' relevance differs by no more than the comparability
    epsilon (2% of the top score), the authoritative hit ranks first; larger
    gaps follow pure relevance order. Final tie-break is by paragraph id, so
    the ordering is total and deterministic. An identical normalized query is
    served from the cache without touching the backend or the budget.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    key = f"{normalize_query(query)}|k={k}|site={site_filter}|recency={recency_filter}"
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    if budget is not None:
        budget.charge()

    scores = _bm25_scores(index, tokenize(query))

    def passes(pos: int) -> bool:
        para = index.paragraphs[pos]
        if site_filter is not None and para.site != site_filter:
            return False
        # recency: drop dated paragraphs older than the cutoff; undated pass
        if recency_filter is not None and para.date and para.date < recency_filter:
            return False
        return True

    candidates = [(pos, score) for pos, score in scores.items() if passes(pos)]
    hits: list[SearchHit] = []
    if candidates:
        top = max(score for _, score in candidates)
        eps = COMPARABILITY_EPSILON * top
        # boosting by exactly eps reorders only pairs within eps of each other
        def sort_key(item: tuple[int, float]):
            pos, score = item
            para = index.paragraphs[pos]
            auth = para.site in authority
            return (-(score + (eps if auth else 0.0)), 0 if auth else 1, para.para_id)

        ranked = sorted(candidates, key=sort_key)[:k]
        for rank, (pos, score) in enumerate(ranked, start=1):
            para = index.paragraphs[pos]
            hits.append(
                SearchHit(
                    para_id=para.para_id,
                    doc_id=para.doc_id,
                    # the paragraph IS the retrieval unit; oversized
                    # observations are the offload layer's problem
                    snippet=para.text,
                    relevance=score,
                    authoritative=para.site in authority,
                    final_rank=rank,
                )
            )
    if cache is not None:
        cache.put(key, hits)
    return hits


def batch_web_surfer(
    queries: list[str],
    index: ParagraphIndex,
    authority: AuthorityList = AuthorityList(),
    cache: Optional[QueryCache] = None,
    budget: Optional[SearchBudget] = None,
    k: int = 10,
) -> list[list[SearchHit]]:
    """Batch search surface exposed to agents: one hit list per query."""
    return [search(q, index, authority=authority, cache=cache, budget=budget, k=k) for q in queries]
