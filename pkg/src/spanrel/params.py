"""Model parameter container, random initialization, and JSON round-trip.

A parameter file carries the dimensions, the type inventory, every weight
matrix (row-major nested lists), and the four bias tables.  The loader
validates every shape against the declared dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import AttentionWeights, FeedForwardParams, make_rng
from .representation import BiasTable, TypeInventory


@dataclass(frozen=True)
class ModelParams:
    dim: int
    heads: int
    hidden: int
    max_span_width: int
    inventory: TypeInventory
    span_proj: np.ndarray  # (2D, D)
    relation_proj: np.ndarray  # (2D, D)
    entity_head: FeedForwardParams  # D -> hidden -> |E|
    relation_head: FeedForwardParams  # D -> hidden -> |R|
    span_filter: FeedForwardParams  # D -> hidden -> 1
    relation_filter: FeedForwardParams
    span_read: AttentionWeights
    span_process_attn: AttentionWeights
    span_process_ffn: FeedForwardParams  # D -> hidden -> D
    relation_read: AttentionWeights
    relation_process_attn: AttentionWeights
    relation_process_ffn: FeedForwardParams
    bias: BiasTable

    def __post_init__(self):
        d = self.dim
        e = self.inventory.num_entity_types
        r = self.inventory.num_relation_types
        if min(self.dim, self.heads, self.hidden, self.max_span_width) < 1:
            raise ValueError("dim, heads, hidden, and max_span_width must be positive")
        if self.dim % self.heads != 0:
            raise ValueError("heads must divide dim")
        checks = [
            ("span_proj", np.asarray(self.span_proj).shape, (2 * d, d)),
            ("relation_proj", np.asarray(self.relation_proj).shape, (2 * d, d)),
            ("entity_head", (self.entity_head.in_dim, self.entity_head.out_dim), (d, e)),
            ("relation_head", (self.relation_head.in_dim, self.relation_head.out_dim), (d, r)),
            ("span_filter", (self.span_filter.in_dim, self.span_filter.out_dim), (d, 1)),
            ("relation_filter", (self.relation_filter.in_dim, self.relation_filter.out_dim), (d, 1)),
            ("span_process_ffn", (self.span_process_ffn.in_dim, self.span_process_ffn.out_dim), (d, d)),
            (
                "relation_process_ffn",
                (self.relation_process_ffn.in_dim, self.relation_process_ffn.out_dim),
                (d, d),
            ),
        ]
        for name, got, want in checks:
            if tuple(got) != want:
                raise ValueError(f"{name}: shape {got} != expected {want}")
        for name in ("span_read", "span_process_attn", "relation_read", "relation_process_attn"):
            attn: AttentionWeights = getattr(self, name)
            if attn.dim != d or attn.heads != self.heads:
                raise ValueError(f"{name}: attention dims disagree with model config")
        if self.bias.num_entity_types != e or self.bias.num_relation_types != r:
            raise ValueError("bias table dims disagree with the type inventory")
        object.__setattr__(self, "span_proj", np.asarray(self.span_proj, dtype=np.float64))
        object.__setattr__(self, "relation_proj", np.asarray(self.relation_proj, dtype=np.float64))


def _rand(rng: np.random.Generator, shape, scale: float) -> np.ndarray:
    return rng.normal(0.0, scale, size=shape)


def _rand_ffn(rng, d_in, hidden, d_out) -> FeedForwardParams:
    return FeedForwardParams(
        w1=_rand(rng, (d_in, hidden), 1.0 / np.sqrt(d_in)),
        b1=np.zeros(hidden),
        w2=_rand(rng, (hidden, d_out), 1.0 / np.sqrt(hidden)),
        b2=np.zeros(d_out),
    )


def _rand_attn(rng, dim, heads) -> AttentionWeights:
    dh = dim // heads
    scale = 1.0 / np.sqrt(dim)
    return AttentionWeights(
        wq=_rand(rng, (heads, dim, dh), scale),
        wk=_rand(rng, (heads, dim, dh), scale),
        wv=_rand(rng, (heads, dim, dh), scale),
        wo=_rand(rng, (heads, dh, dim), scale),
    )


def init_params(
    inventory: TypeInventory,
    dim: int = 64,
    heads: int = 4,
    hidden: int | None = None,
    max_span_width: int = 12,
    seed: int = 0,
    bias_scale: float = 0.1,
) -> ModelParams:
    """Random but fully deterministic toy parameters for the given inventory."""
    if dim % heads != 0:
        raise ValueError("heads must divide dim")
    hidden = hidden if hidden is not None else dim
    rng = make_rng(seed)
    e = inventory.num_entity_types
    r = inventory.num_relation_types
    scale = 1.0 / np.sqrt(dim)
    return ModelParams(
        dim=dim,
        heads=heads,
        hidden=hidden,
        max_span_width=max_span_width,
        inventory=inventory,
        span_proj=_rand(rng, (2 * dim, dim), scale),
        relation_proj=_rand(rng, (2 * dim, dim), scale),
        entity_head=_rand_ffn(rng, dim, hidden, e),
        relation_head=_rand_ffn(rng, dim, hidden, r),
        span_filter=_rand_ffn(rng, dim, hidden, 1),
        relation_filter=_rand_ffn(rng, dim, hidden, 1),
        span_read=_rand_attn(rng, dim, heads),
        span_process_attn=_rand_attn(rng, dim, heads),
        span_process_ffn=_rand_ffn(rng, dim, hidden, dim),
        relation_read=_rand_attn(rng, dim, heads),
        relation_process_attn=_rand_attn(rng, dim, heads),
        relation_process_ffn=_rand_ffn(rng, dim, hidden, dim),
        bias=BiasTable(
            joint=_rand(rng, (e, e, r), bias_scale),
            head_relation=_rand(rng, (e, r), bias_scale),
            tail_relation=_rand(rng, (e, r), bias_scale),
            head_tail=_rand(rng, (e, e), bias_scale),
        ),
    )


def _ffn_to_json(p: FeedForwardParams) -> dict:
    return {"w1": p.w1.tolist(), "b1": p.b1.tolist(), "w2": p.w2.tolist(), "b2": p.b2.tolist()}


def _ffn_from_json(obj: dict) -> FeedForwardParams:
    return FeedForwardParams(
        w1=np.asarray(obj["w1"]),
        b1=np.asarray(obj["b1"]),
        w2=np.asarray(obj["w2"]),
        b2=np.asarray(obj["b2"]),
    )


def _attn_to_json(p: AttentionWeights) -> dict:
    return {"wq": p.wq.tolist(), "wk": p.wk.tolist(), "wv": p.wv.tolist(), "wo": p.wo.tolist()}


def _attn_from_json(obj: dict) -> AttentionWeights:
    return AttentionWeights(
        wq=np.asarray(obj["wq"]),
        wk=np.asarray(obj["wk"]),
        wv=np.asarray(obj["wv"]),
        wo=np.asarray(obj["wo"]),
    )


def bias_to_json(table: BiasTable) -> dict:
    return {
        "joint": table.joint.tolist(),
        "head_relation": table.head_relation.tolist(),
        "tail_relation": table.tail_relation.tolist(),
        "head_tail": table.head_tail.tolist(),
    }


def bias_from_json(obj: dict) -> BiasTable:
    return BiasTable(
        joint=np.asarray(obj["joint"]),
        head_relation=np.asarray(obj["head_relation"]),
        tail_relation=np.asarray(obj["tail_relation"]),
        head_tail=np.asarray(obj["head_tail"]),
    )


_FFN_FIELDS = (
    "entity_head",
    "relation_head",
    "span_filter",
    "relation_filter",
    "span_process_ffn",
    "relation_process_ffn",
)
_ATTN_FIELDS = ("span_read", "span_process_attn", "relation_read", "relation_process_attn")


def params_to_json(params: ModelParams) -> dict:
    doc = {
        "version": 1,
        "dim": params.dim,
        "heads": params.heads,
        "hidden": params.hidden,
        "max_span_width": params.max_span_width,
        "entity_types": list(params.inventory.entity_types),
        "relation_types": list(params.inventory.relation_types),
        "span_proj": params.span_proj.tolist(),
        "relation_proj": params.relation_proj.tolist(),
        "bias": bias_to_json(params.bias),
    }
    for name in _FFN_FIELDS:
        doc[name] = _ffn_to_json(getattr(params, name))
    for name in _ATTN_FIELDS:
        doc[name] = _attn_to_json(getattr(params, name))
    return doc


def params_from_json(doc: dict) -> ModelParams:
    """Rebuild ModelParams from a JSON document; every shape is re-validated
    by the dataclass constructors."""
    inventory = TypeInventory(tuple(doc["entity_types"]), tuple(doc["relation_types"]))
    kwargs = {
        "dim": int(doc["dim"]),
        "heads": int(doc["heads"]),
        "hidden": int(doc["hidden"]),
        "max_span_width": int(doc["max_span_width"]),
        "inventory": inventory,
        "span_proj": np.asarray(doc["span_proj"]),
        "relation_proj": np.asarray(doc["relation_proj"]),
        "bias": bias_from_json(doc["bias"]),
    }
    for name in _FFN_FIELDS:
        kwargs[name] = _ffn_from_json(doc[name])
    for name in _ATTN_FIELDS:
        kwargs[name] = _attn_from_json(doc[name])
    return ModelParams(**kwargs)
