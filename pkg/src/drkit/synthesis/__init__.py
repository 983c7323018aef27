from drkit.synthesis.graph import (
    GraphTooSmallError,
    KnowledgeGraph,
    NoEligibleSeedError,
    SubgraphSample,
    expand_subgraph,
    generate_graph_question,
    sample_seed,
    verify_triplet,
)
from drkit.synthesis.docwalk import WalkTrace, doc_walk
from drkit.synthesis.filters import (
    difficulty_filter,
    language_mix_filter,
    ngram_dedup,
    plan_alignment_filter,
    select_shortest_correct,
    temporal_filter,
)
from drkit.synthesis.reflection import reflection_loop, scrub_induced_phrases
from drkit.synthesis.rubric_synth import (
    SynthSample,
    consistency_check,
    synthesize_rubrics,
    synthesize_task,
)
from drkit.synthesis.verification import VerificationPoint, posterior_filter, verification_workflow

__all__ = [
    "GraphTooSmallError",
    "KnowledgeGraph",
    "NoEligibleSeedError",
    "SubgraphSample",
    "SynthSample",
    "VerificationPoint",
    "WalkTrace",
    "consistency_check",
    "difficulty_filter",
    "doc_walk",
    "expand_subgraph",
    "generate_graph_question",
    "language_mix_filter",
    "ngram_dedup",
    "plan_alignment_filter",
    "posterior_filter",
    "reflection_loop",
    "sample_seed",
    "scrub_induced_phrases",
    "select_shortest_correct",
    "synthesize_rubrics",
    "synthesize_task",
    "temporal_filter",
    "verification_workflow",
    "verify_triplet",
]
