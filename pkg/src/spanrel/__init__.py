"""Span-based joint entity and relation scoring with constrained decoding.

The package covers the full path from raw tokens to verified structures:
deterministic token embeddings, span and pair representations, filter
and refine pruning, type-pair bias tables, ranking and classification
losses, and a family of exact decoders (unconstrained, entity-first,
joint, relation-first) with brute-force oracles for cross-checking.
"""

from __future__ import annotations

from .bench import BenchRow, format_table, ordering_ok, run_bench, synthetic_instances
from .decode import (
    ALGORITHMS,
    BudgetExceededError,
    ConstraintSet,
    DecodedStructure,
    ScoredInstance,
    Violation,
    brute_force_oracle,
    check_constraints,
    decode,
    entity_first_decode,
    joint_decode,
    load_constraints,
    max_weight_nonoverlap,
    oracle_entity_first,
    oracle_joint,
    oracle_joint_full,
    oracle_relation_first,
    oracle_subset_max,
    relation_first_decode,
    spans_overlap,
    structure_score,
    unconstrained_constraints,
    unconstrained_decode,
)
from .filter_refine import (
    FilterResult,
    filter_and_refine,
    ranking_scores,
    read,
    process,
    top_k_select,
)
from .formats import (
    BUNDLED_CONSTRAINTS,
    FormatError,
    load_constraint_set,
    load_gold,
    load_score_file,
    load_sentences,
    load_structure_file,
    score_document,
    structure_document,
    structures_from_doc,
)
from .numerics import (
    NEG_SENTINEL,
    AttentionWeights,
    FeedForwardParams,
    feed_forward,
    make_rng,
    multi_head_attention,
    softmax,
    softmax_rows,
)
from .objectives import (
    AlignedLabels,
    GoldAnnotation,
    LossBreakdown,
    align_gold,
    classification_loss,
    finite_difference_gradient,
    loss_from_forward,
    ranking_loss,
    total_loss,
)
from .params import ModelParams, init_params, params_from_json, params_to_json
from .pipeline import ForwardResult, RunConfig, default_k_span, forward
from .representation import (
    NULL_ENTITY,
    NULL_RELATION,
    BiasTable,
    SpanCandidate,
    TokenEmbeddings,
    TypeInventory,
    apply_bias,
    bias_lookup,
    classify_relations,
    classify_spans,
    encode_tokens,
    enumerate_spans,
    gumbel_softmax_sample,
    pair_from_index,
    pair_index,
    relation_representations,
    span_representations,
    valid_span_count,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "AlignedLabels",
    "AttentionWeights",
    "BUNDLED_CONSTRAINTS",
    "BenchRow",
    "BiasTable",
    "BudgetExceededError",
    "ConstraintSet",
    "DecodedStructure",
    "FeedForwardParams",
    "FilterResult",
    "FormatError",
    "ForwardResult",
    "GoldAnnotation",
    "LossBreakdown",
    "ModelParams",
    "NEG_SENTINEL",
    "NULL_ENTITY",
    "NULL_RELATION",
    "RunConfig",
    "ScoredInstance",
    "SpanCandidate",
    "TokenEmbeddings",
    "TypeInventory",
    "Violation",
    "align_gold",
    "apply_bias",
    "bias_lookup",
    "brute_force_oracle",
    "check_constraints",
    "classification_loss",
    "classify_relations",
    "classify_spans",
    "decode",
    "default_k_span",
    "encode_tokens",
    "entity_first_decode",
    "enumerate_spans",
    "feed_forward",
    "filter_and_refine",
    "finite_difference_gradient",
    "format_table",
    "forward",
    "gumbel_softmax_sample",
    "init_params",
    "joint_decode",
    "load_constraint_set",
    "load_constraints",
    "load_gold",
    "load_score_file",
    "load_sentences",
    "load_structure_file",
    "loss_from_forward",
    "make_rng",
    "max_weight_nonoverlap",
    "multi_head_attention",
    "oracle_entity_first",
    "oracle_joint",
    "oracle_joint_full",
    "oracle_relation_first",
    "oracle_subset_max",
    "ordering_ok",
    "pair_from_index",
    "pair_index",
    "params_from_json",
    "params_to_json",
    "process",
    "ranking_loss",
    "ranking_scores",
    "read",
    "relation_first_decode",
    "relation_representations",
    "run_bench",
    "score_document",
    "softmax",
    "softmax_rows",
    "span_representations",
    "spans_overlap",
    "structure_document",
    "structure_score",
    "structures_from_doc",
    "synthetic_instances",
    "top_k_select",
    "total_loss",
    "unconstrained_constraints",
    "unconstrained_decode",
    "valid_span_count",
]
