"""Graph-based question synthesis: degree-screened seeds, BFS neighborhoods
with supernode truncation, edge verification against retrieval, and
contract-checked question generation.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

SEED_DEGREE_RANGE = (3, 10)
NODE_RANGE = (10, 40)
SUPERNODE_THRESHOLD = 1000
MIN_QUESTION_ENTITIES = 3
QUESTION_RETRIES = 2


class NoEligibleSeedError(Exception):
    pass


class GraphTooSmallError(Exception):
    pass


class ContractUnsatisfiableError(Exception):
    pass


@dataclass
class KnowledgeGraph:
    """Directed labeled triples; degree is in-degree + out-degree."""

    entities: set[str] = field(default_factory=set)
    labels: dict[str, str] = field(default_factory=dict)
    edges: list[tuple[str, str, str]] = field(default_factory=list)
    _adjacency: dict[str, list[tuple[str, str, str]]] = field(default_factory=dict)
    _degree: dict[str, int] = field(default_factory=dict)

    def add_edge(self, head: str, relation: str, tail: str) -> None:
        edge = (head, relation, tail)
        self.edges.append(edge)
        for node in (head, tail):
            self.entities.add(node)
            self._degree[node] = self._degree.get(node, 0) + 1
            self._adjacency.setdefault(node, []).append(edge)

    def degree(self, entity: str) -> int:
        return self._degree.get(entity, 0)

    def neighbors(self, entity: str) -> list[tuple[str, str, str]]:
        """Incident edges in insertion order (both directions)."""
        return self._adjacency.get(entity, [])

    def label(self, entity: str) -> str:
        return self.labels.get(entity, entity)

    @classmethod
    def from_tsv(
        cls, triples_path: Union[str, Path], labels_path: Union[str, Path, None] = None
    ) -> "KnowledgeGraph":
        graph = cls()
        for line in Path(triples_path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            head, relation, tail = line.rstrip("\n").split("\t")
            graph.add_edge(head, relation, tail)
        if labels_path is not None:
            for line in Path(labels_path).read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                entity, label = line.rstrip("\n").split("\t", 1)
                graph.labels[entity] = label
        return graph


def sample_seed(
    graph: KnowledgeGraph,
    stoplist: set[str] = frozenset(),
    rng: Optional[random.Random] = None,
    degree_range: tuple[int, int] = SEED_DEGREE_RANGE,
) -> str:
    """Uniform draw over non-generic entities with small degree."""
    if not graph.entities:
        raise NoEligibleSeedError("empty graph")
    rng = rng or random.Random()
    lo, hi = degree_range
    eligible = sorted(e for e in graph.entities if lo <= graph.degree(e) <= hi and e not in stoplist)
    if not eligible:
        raise NoEligibleSeedError(f"no entity has degree in [{lo}, {hi}] outside the stoplist")
    return eligible[rng.randrange(len(eligible))]


@dataclass
class SubgraphSample:
    seed: str
    nodes: set[str]
    edges: set[tuple[str, str, str]]
    truncated_supernodes: set[str]


def expand_subgraph(
    graph: KnowledgeGraph,
    seed: str,
    node_range: tuple[int, int] = NODE_RANGE,
    supernode_threshold: int = SUPERNODE_THRESHOLD,
    rng: Optional[random.Random] = None,
) -> SubgraphSample:
    """BFS neighborhood around the seed, stopping once the node count enters
    node_range (hard cap at the top of the range).

    Frontiers are expanded whole, in per-frontier shuffled order, so sample
    sizes vary with local branching. Nodes whose degree exceeds the threshold
    are taken in as leaves: present in the sample, never expanded, to keep
    one hub from swallowing the neighborhood.
    """
    if seed not in graph.entities:
        raise ValueError(f"seed {seed!r} not in graph")
    rng = rng or random.Random()
    lo, hi = node_range

    nodes: set[str] = {seed}
    edges: set[tuple[str, str, str]] = set()
    supernodes: set[str] = set()
    if graph.degree(seed) > supernode_threshold:
        supernodes.add(seed)

    frontier = [seed]
    while frontier and len(nodes) < lo:
        rng.shuffle(frontier)
        next_frontier: list[str] = []
        for node in frontier:
            if node in supernodes:
                continue  # supernodes are leaves: never expanded
            for head, relation, tail in graph.neighbors(node):
                other = tail if head == node else head
                edges.add((head, relation, tail))
                if other in nodes:
                    continue
                if len(nodes) >= hi:
                    break
                nodes.add(other)
                if graph.degree(other) > supernode_threshold:
                    supernodes.add(other)
                else:
                    next_frontier.append(other)
            if len(nodes) >= hi:
                break
        frontier = next_frontier

    if len(nodes) < lo:
        raise GraphTooSmallError(
            f"reachable component around {seed!r} has {len(nodes)} nodes, need >= {lo}"
        )
    # keep only edges with both endpoints sampled
    edges = {e for e in edges if e[0] in nodes and e[2] in nodes}
    return SubgraphSample(seed=seed, nodes=nodes, edges=edges, truncated_supernodes=supernodes)


@dataclass(frozen=True)
class VerifiedFact:
    edge: tuple[str, str, str]
    fact_text: str
    citations: tuple[str, ...]


def verify_triplet(
    edge: tuple[str, str, str],
    search: Callable[[str], list],
    label: Callable[[str], str] = lambda e: e,
) -> Optional[VerifiedFact]:
    """Use the triplet as a search query; the edge is verified only when some
    retrieved paragraph contains both endpoint surface forms. Unverified
    edges are excluded from question generation."""
    head, relation, tail = edge
    head_text, tail_text = label(head), label(tail)
    hits = search(f"{head_text} {relation} {tail_text}")
    for hit in hits:
        snippet = hit.snippet if hasattr(hit, "snippet") else str(hit)
        lowered = snippet.casefold()
        if head_text.casefold() in lowered and tail_text.casefold() in lowered:
            para_id = hit.para_id if hasattr(hit, "para_id") else ""
            return VerifiedFact(edge=edge, fact_text=snippet, citations=(para_id,))
    return None


@dataclass(frozen=True)
class QaPair:
    question: str
    answer: str
    entities_used: tuple[str, ...] = ()
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "answer": self.answer,
            "entities_used": list(self.entities_used),
            "provenance": dict(self.provenance),
        }


def generate_graph_question(
    sample: SubgraphSample,
    verified_facts: list[VerifiedFact],
    model,
    label: Callable[[str], str] = lambda e: e,
    min_entities: int = MIN_QUESTION_ENTITIES,
) -> tuple[QaPair, int]:
    """Prompt for a fuzzed multi-hop question over the verified facts.

    The output contract is checked mechanically: the answer must be a sample
    entity, the question must draw on at least min_entities sample entities,
    and the answer entity must not be named verbatim in the question.
    Violations are rejected and regenerated up to QUESTION_RETRIES times.
    """
    if len(verified_facts) < min_entities:
        raise ValueError(f"need at least {min_entities} verified facts, got {len(verified_facts)}")

    facts_block = "\n".join(f"- {f.fact_text}" for f in verified_facts)
    labels_by_entity = {node: label(node) for node in sample.nodes}
    messages = [
        {
            "role": "system",
            "content": (
                "Write one complex question that requires multi-hop search over the facts. "
                "Do not name the answer entity in the question. Respond with JSON: "
                '{"question": ..., "answer": ..., "entities_used": [...]}.'
            ),
        },
        {"role": "user", "content": f"Facts:\n{facts_block}\nEntities: {sorted(labels_by_entity.values())}"},
    ]

    attempts = 0
    last_violation = ""
    while attempts <= QUESTION_RETRIES:
        attempts += 1
        raw = model.complete(messages).text
        try:
            payload = json.loads(raw)
            question = payload["question"]
            answer = payload["answer"]
            used = list(payload.get("entities_used", []))
        except (json.JSONDecodeError, KeyError, TypeError):
            last_violation = "unparseable model output"
            continue

        label_set = set(labels_by_entity.values()) | set(sample.nodes)
        if answer not in label_set:
            last_violation = f"answer {answer!r} is not a sample entity"
        elif answer.casefold() in question.casefold():
            last_violation = "question names the answer entity verbatim"
        elif len({u for u in used if u in label_set}) < min_entities:
            last_violation = f"question references fewer than {min_entities} sample entities"
        else:
            return (
                QaPair(
                    question=question,
                    answer=answer,
                    entities_used=tuple(used),
                    provenance={"pipeline": "graph", "seed_entity": sample.seed},
                ),
                attempts,
            )
    raise ContractUnsatisfiableError(f"no conforming question after {attempts} attempts: {last_violation}")
