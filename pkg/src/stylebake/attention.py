"""Scaled dot-product attention kernels: reference, self, and row-wise
multi-view attention, plus the fused three-branch block and a JVP harness.

Reference attention uses the input tokens as queries and the reference tokens
as both keys and values, with no learned projections:

    out = softmax(Q K^T / sqrt(d)) K        with K = V = reference tokens.

The reference rows are brought into a canonical (lexicographically sorted)
order before any reduction, so the output is bit-exactly invariant under any
permutation of the reference rows, not merely invariant up to rounding.
Tokenization convention everywhere: image features flatten row-major (y, then
x) per view; multi-view stacks are view-major.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyReference, NonFiniteInput


@dataclass(frozen=True)
class MultiViewFeature:
    """Tokens indexed (view, y, x, channel); all views share (H, W, d)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 4:
            raise DimensionMismatch(f"MultiViewFeature wants (V,H,W,d), got {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def views(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def dim(self) -> int:
        return self.data.shape[3]


def _check_tokens(f: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be (n,d), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains non-finite values")
    return arr


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with row-max subtraction for stability."""
    arr = _check_tokens(logits, "logits")
    if arr.shape[0] == 0:
        return arr.copy()
    shifted = arr - arr.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _canonical_rows(f_ref: np.ndarray) -> np.ndarray:
    # lexsort uses the last key as primary, so feed columns in reverse
    order = np.lexsort(f_ref.T[::-1])
    return np.ascontiguousarray(f_ref[order])


def ref_attention(f_in: np.ndarray, f_ref: np.ndarray) -> np.ndarray:
    """softmax(f_in f_ref^T / sqrt(d)) f_ref; f_ref is key and value."""
    q = _check_tokens(f_in, "f_in")
    kv = _check_tokens(f_ref, "f_ref")
    if q.shape[1] != kv.shape[1]:
        raise DimensionMismatch(
            f"feature widths differ: {q.shape[1]} vs {kv.shape[1]}"
        )
    if kv.shape[0] < 1:
        raise EmptyReference("reference token matrix is empty")
    kv = _canonical_rows(kv)
    logits = q @ kv.T / np.sqrt(q.shape[1])
    return softmax_rows(logits) @ kv


def self_attention(f: np.ndarray) -> np.ndarray:
    """Attention of a token set over itself: ref_attention(f, f)."""
    return ref_attention(f, f)


def multiview_row_attention(f: MultiViewFeature) -> MultiViewFeature:
    """Joint attention over tokens sharing an image row across all views.

    For each row y the (V*W, d) view-major stack attends to itself; rows are
    independent.
    """
    v, h, w, d = f.data.shape
    out = np.empty_like(f.data)
    for y in range(h):
        stack = f.data[:, y, :, :].reshape(v * w, d)
        out[:, y, :, :] = self_attention(stack).reshape(v, w, d)
    return MultiViewFeature(out)


def fused_block(f_in: MultiViewFeature, f_ref: np.ndarray) -> MultiViewFeature:
    """Residual sum of the three attention branches.

    out = f_in + per-view self-attention + multi-view row attention
        + reference attention of all tokens against f_ref.
    """
    v, h, w, d = f_in.data.shape
    kv = _check_tokens(f_ref, "f_ref")
    if kv.shape[1] != d:
        raise DimensionMismatch(f"feature widths differ: {d} vs {kv.shape[1]}")
    self_out = np.empty_like(f_in.data)
    for view in range(v):
        tokens = f_in.data[view].reshape(h * w, d)
        self_out[view] = self_attention(tokens).reshape(h, w, d)
    row_out = multiview_row_attention(f_in).data
    ref_out = ref_attention(f_in.data.reshape(v * h * w, d), kv).reshape(v, h, w, d)
    return MultiViewFeature(f_in.data + self_out + row_out + ref_out)


# --- analytic JVP and the finite-difference harness -------------------------

def ref_attention_jvp(f_in: np.ndarray, f_ref: np.ndarray,
                      d_in: np.ndarray, d_ref: np.ndarray) -> np.ndarray:
    """Directional derivative of ref_attention at (f_in, f_ref).

    With A = Q K^T / sqrt(d), S = softmax(A), out = S K:
        dA   = (dQ K^T + Q dK^T) / sqrt(d)
        dS_r = S_r * (dA_r - <S_r, dA_r>)      (softmax Jacobian, per row)
        dout = dS K + S dK
    The same canonical row order used by the forward pass is applied to
    (f_ref, d_ref) so the derivative matches the computed function.
    """
    q = _check_tokens(f_in, "f_in")
    kv = _check_tokens(f_ref, "f_ref")
    dq = np.asarray(d_in, dtype=np.float64)
    dkv = np.asarray(d_ref, dtype=np.float64)
    order = np.lexsort(kv.T[::-1])
    kv = np.ascontiguousarray(kv[order])
    dkv = np.ascontiguousarray(dkv[order])
    scale = 1.0 / np.sqrt(q.shape[1])
    logits = q @ kv.T * scale
    s = softmax_rows(logits)
    da = (dq @ kv.T + q @ dkv.T) * scale
    ds = s * (da - np.sum(s * da, axis=1, keepdims=True))
    return ds @ kv + s @ dkv


def finite_difference_grad_check(f_in: np.ndarray, f_ref: np.ndarray,
                                 d_in: np.ndarray, d_ref: np.ndarray,
                                 h: float = 1e-5) -> float:
    """Relative error between the analytic JVP and central differences."""
    if not 0.0 < h <= 1e-2:
        raise ValueError("step h must lie in (0, 1e-2]")
    analytic = ref_attention_jvp(f_in, f_ref, d_in, d_ref)
    plus = ref_attention(f_in + h * d_in, f_ref + h * d_ref)
    minus = ref_attention(f_in - h * d_in, f_ref - h * d_ref)
    numeric = (plus - minus) / (2.0 * h)
    denom = max(float(np.linalg.norm(analytic)), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / denom)
