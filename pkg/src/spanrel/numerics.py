"""Dense numeric kernels shared by the scoring pipeline.

Everything here is a pure function over float64 numpy arrays: affine maps,
masked softmax, scaled dot-product multi-head attention, and two-layer
feed-forward blocks with ReLU.  No layer normalization and no dropout
anywhere; attention and feed-forward outputs are consumed through plain
residual adds by the callers.  Identical inputs give bitwise-identical
outputs on a given platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Masking sentinel: large negative finite value instead of -inf so that
# stabilized softmax never computes (-inf) - (-inf).
NEG_SENTINEL = -1e30


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; identical seed gives an identical stream."""
    return np.random.Generator(np.random.PCG64(seed))


def as_matrix(x, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce to a 2-D float64 array, optionally checking the shape."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {a.shape}")
    if rows is not None and a.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise ValueError(f"expected {cols} cols, got {a.shape[1]}")
    return a


def linear(x: np.ndarray, w: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """Affine map x @ w (+ bias)."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.ndim != 2 or w.ndim != 2:
        raise ValueError("linear expects 2-D operands")
    if x.shape[1] != w.shape[0]:
        raise ValueError(f"inner dimensions disagree: {x.shape} @ {w.shape}")
    out = x @ w
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (w.shape[1],):
            raise ValueError(f"bias shape {bias.shape} does not match output width {w.shape[1]}")
        out = out + bias
    return out


def softmax(v: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Max-stabilized softmax over a vector, with optional boolean keep-mask.

    Masked positions come out exactly 0.  Raises if every position is masked.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("softmax expects a non-empty vector")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != v.shape:
            raise ValueError("mask shape does not match input")
        if not mask.any():
            raise ValueError("softmax: all positions masked")
        v = np.where(mask, v, NEG_SENTINEL)
    shifted = v - v.max()
    e = np.exp(shifted)
    if mask is not None:
        e = np.where(mask, e, 0.0)
    return e / e.sum()


def softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise stabilized softmax for a 2-D array."""
    m = np.asarray(m, dtype=np.float64)
    shifted = m - m.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class AttentionWeights:
    """Per-head projection matrices for multi-head attention.

    wq, wk, wv have shape (heads, dim, head_dim); wo has shape
    (heads, head_dim, dim).  heads * head_dim must equal dim.
    """

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray

    def __post_init__(self):
        for name in ("wq", "wk", "wv", "wo"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        h, d, dh = self.wq.shape
        if self.wk.shape != (h, d, dh) or self.wv.shape != (h, d, dh):
            raise ValueError("query/key/value projections disagree in shape")
        if self.wo.shape != (h, dh, d):
            raise ValueError(f"output projection shape {self.wo.shape} != {(h, dh, d)}")
        if h * dh != d:
            raise ValueError(f"heads ({h}) * head_dim ({dh}) must equal dim ({d})")

    @property
    def heads(self) -> int:
        return self.wq.shape[0]

    @property
    def dim(self) -> int:
        return self.wq.shape[1]

    @property
    def head_dim(self) -> int:
        return self.wq.shape[2]


def multi_head_attention(
    queries: np.ndarray, keys_values: np.ndarray, params: AttentionWeights
) -> tuple[np.ndarray, np.ndarray]:
    """Scaled dot-product attention with per-head projections.

    Returns (output, attn) where output has the queries' shape (Q, dim) and
    attn has shape (heads, Q, N); each attn row is a distribution over the
    N key positions.  Scaling is 1/sqrt(head_dim).
    """
    q = as_matrix(queries, cols=params.dim)
    kv = as_matrix(keys_values, cols=params.dim)
    if kv.shape[0] == 0:
        raise ValueError("attention needs at least one key/value position")
    scale = 1.0 / np.sqrt(float(params.head_dim))
    out = np.zeros_like(q)
    attn = np.empty((params.heads, q.shape[0], kv.shape[0]), dtype=np.float64)
    for h in range(params.heads):
        qh = q @ params.wq[h]
        kh = kv @ params.wk[h]
        vh = kv @ params.wv[h]
        weights = softmax_rows(qh @ kh.T * scale)
        attn[h] = weights
        out += (weights @ vh) @ params.wo[h]
    return out, attn


@dataclass(frozen=True)
class FeedForwardParams:
    """Two-layer affine block with a ReLU between the layers."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise ValueError("feed-forward weights must be 2-D")
        if self.b1.shape != (self.w1.shape[1],):
            raise ValueError("first bias does not match hidden width")
        if self.w2.shape[0] != self.w1.shape[1]:
            raise ValueError("hidden widths disagree between layers")
        if self.b2.shape != (self.w2.shape[1],):
            raise ValueError("second bias does not match output width")

    @property
    def in_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w2.shape[1]


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def feed_forward(x: np.ndarray, params: FeedForwardParams) -> np.ndarray:
    """linear -> ReLU -> linear."""
    x = as_matrix(x, cols=params.in_dim)
    return linear(relu(linear(x, params.w1, params.b1)), params.w2, params.b2)
