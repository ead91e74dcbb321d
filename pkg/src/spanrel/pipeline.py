"""End-to-end forward pass for one sentence.

Tokens are hash-encoded into embeddings, every span up to the width limit
is represented and pruned to the top K, survivors are classified into
entity logits, ordered pairs of survivors repeat the same filter/classify
cycle for relations, and the result is packed into a ScoredInstance ready
for any decoder.  Pure function of (tokens, params, config): identical
inputs give bit-identical outputs.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from .decode import ALGORITHMS, ScoredInstance
from .filter_refine import FilterResult, filter_and_refine
from .params import ModelParams
from .representation import (
    SpanCandidate,
    TokenEmbeddings,
    classify_relations,
    classify_spans,
    encode_tokens,
    enumerate_spans,
    relation_representations,
    span_representations,
    valid_span_count,
)


def normalize_algorithm(name: str) -> str:
    """Accept CLI spellings (entity-first) for internal names (entity_first)."""
    canon = name.replace("-", "_")
    if canon not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; pick from {ALGORITHMS}")
    return canon


@dataclass(frozen=True)
class RunConfig:
    """Knobs for a scoring or decoding run.

    k_span / k_rel of None mean the defaults min(valid spans, max(8, L))
    and k_span respectively.  budget of None means unbounded search.
    """

    algorithm: str = "joint"
    k_span: int | None = None
    k_rel: int | None = None
    depth: int = 1
    margin: float = 1.0
    seed: int = 0
    budget: int | None = None
    use_bias: bool = True
    jobs: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithm", normalize_algorithm(self.algorithm))
        for name in ("k_span", "k_rel", "budget"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be positive when given")
        if self.depth < 1:
            raise ValueError("depth must be positive")
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")

    def with_overrides(self, **kwargs) -> RunConfig:
        return replace(self, **kwargs)


@dataclass(frozen=True)
class ForwardResult:
    """A scored sentence plus everything a diagnostic export needs.

    span_candidates covers the full start-by-width grid; span_filter and
    pair_filter keep their full ranking-score vectors and, when depth is
    at least 1 and anything survived, the last READ attention (heads, K,
    L).  pair_candidates lists the ordered pairs over kept spans that the
    relation filter chose from; instance.pairs is its kept subset.
    """

    instance: ScoredInstance
    embeddings: TokenEmbeddings
    span_candidates: tuple[SpanCandidate, ...]
    span_filter: FilterResult
    pair_candidates: tuple[tuple[int, int], ...]
    pair_filter: FilterResult


def default_k_span(length: int, max_span_width: int) -> int:
    return min(valid_span_count(length, max_span_width), max(8, length))


def forward(
    tokens: Sequence[str],
    params: ModelParams,
    config: RunConfig | None = None,
) -> ForwardResult:
    """Score one sentence: embed, enumerate, filter, classify, twice over."""
    if config is None:
        config = RunConfig()
    tokens = tuple(tokens)
    if not tokens:
        raise ValueError("need at least one token")
    if any(not isinstance(t, str) or not t for t in tokens):
        raise ValueError("tokens must be non-empty strings")

    emb = encode_tokens(list(tokens), params.dim, config.seed)
    length = emb.length
    spans = enumerate_spans(length, params.max_span_width)
    span_reps = span_representations(emb, spans, params.span_proj)
    span_valid = np.array([sp.valid for sp in spans], dtype=bool)
    k_span = (
        config.k_span
        if config.k_span is not None
        else default_k_span(length, params.max_span_width)
    )
    span_fr = filter_and_refine(
        span_reps,
        emb.vectors,
        k_span,
        params.span_filter,
        params.span_read,
        params.span_process_attn,
        params.span_process_ffn,
        valid=span_valid,
        depth=config.depth,
    )
    entity_logits = classify_spans(span_fr.representations, params.entity_head)

    rel_reps, pair_list, pair_valid = relation_representations(
        span_fr.representations, params.relation_proj
    )
    k_rel = config.k_rel if config.k_rel is not None else k_span
    pair_fr = filter_and_refine(
        rel_reps,
        emb.vectors,
        k_rel,
        params.relation_filter,
        params.relation_read,
        params.relation_process_attn,
        params.relation_process_ffn,
        valid=pair_valid,
        depth=config.depth,
    )
    relation_logits = classify_relations(pair_fr.representations, params.relation_head)

    kept_spans = tuple(
        (spans[i].start, spans[i].end) for i in span_fr.kept_indices
    )
    kept_pairs = tuple(pair_list[j] for j in pair_fr.kept_indices)
    instance = ScoredInstance(
        length=length,
        spans=kept_spans,
        entity_logits=entity_logits,
        pairs=kept_pairs,
        relation_logits=relation_logits,
        inventory=params.inventory,
        bias=params.bias,
        tokens=tokens,
    )
    return ForwardResult(
        instance=instance,
        embeddings=emb,
        span_candidates=tuple(spans),
        span_filter=span_fr,
        pair_candidates=tuple(pair_list),
        pair_filter=pair_fr,
    )


__all__ = [
    "ForwardResult",
    "RunConfig",
    "default_k_span",
    "forward",
    "normalize_algorithm",
]
