"""Naive multi-head self-attention, kept deliberately unoptimised as the
quadratic reference."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics as nm
from .errors import DegenerateMaskError, DomainError, ShapeError
from .mixer import MaskSpec

# additive surrogate for -inf on masked logits
MASK_FILL = -1e30


@dataclass(frozen=True)
class AttentionParams:
    W_q: np.ndarray
    W_k: np.ndarray
    W_v: np.ndarray
    W_o: np.ndarray
    heads: int = 1

    def __post_init__(self):
        d = self.W_q.shape[0]
        for name in ("W_q", "W_k", "W_v", "W_o"):
            m = getattr(self, name)
            if m.shape != (d, d):
                raise ShapeError(f"{name} has shape {m.shape}, expected {(d, d)}")
            if not np.all(np.isfinite(m)):
                raise DomainError(f"{name} has non-finite entries")
        if self.heads < 1 or d % self.heads:
            raise DomainError(f"{self.heads} heads do not divide d={d}")

    @property
    def d(self) -> int:
        return self.W_q.shape[0]

    @classmethod
    def init(cls, d: int, heads: int = 1, rng=None, dtype=np.float64) -> "AttentionParams":
        rng = np.random.default_rng(rng)
        b = 1.0 / np.sqrt(d)
        mats = [rng.uniform(-b, b, (d, d)).astype(dtype) for _ in range(4)]
        return cls(*mats, heads=heads)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / nm.reduce_rows_sum(e)


def attention_weights(X, params: AttentionParams, mask: MaskSpec | None = None) -> list[np.ndarray]:
    """Per-head ``n x n`` softmax weights; row s is the distribution of token s."""
    X, M = _prepare(X, params, mask)
    hd = params.d // params.heads
    Q = nm.matmul(params.W_q, X)
    K = nm.matmul(params.W_k, X)
    return [_head_weights(Q[h * hd:(h + 1) * hd], K[h * hd:(h + 1) * hd], M)
            for h in range(params.heads)]


def _prepare(X, params, mask):
    X = nm.as_matrix(X)
    if X.shape[0] != params.d:
        raise ShapeError(f"input has {X.shape[0]} rows, attention expects {params.d}")
    mask = mask or MaskSpec.full()
    M = None
    if mask.kind != "full":
        M = mask.dense(X.shape[1], X.dtype)
        if np.any(M.sum(axis=1) == 0):
            raise DegenerateMaskError("a mask row has no visible position")
    return X, M


def _head_weights(Qh, Kh, M):
    logits = nm.matmul(Qh.T, Kh) / np.sqrt(Qh.shape[0])
    if M is not None:
        logits = np.where(M > 0, logits, logits + MASK_FILL)
    return softmax_rows(logits)


def mha_forward(X, params: AttentionParams, mask: MaskSpec | None = None) -> np.ndarray:
    """Scaled dot-product attention per head, heads stacked back to ``d`` rows
    and projected by ``W_o``. Token columns in, token columns out."""
    X, M = _prepare(X, params, mask)
    hd = params.d // params.heads
    Q = nm.matmul(params.W_q, X)
    K = nm.matmul(params.W_k, X)
    V = nm.matmul(params.W_v, X)
    out = np.empty_like(V)
    for h in range(params.heads):
        rows = slice(h * hd, (h + 1) * hd)
        A = _head_weights(Q[rows], K[rows], M)
        out[rows] = nm.matmul(V[rows], A.T)
    return nm.matmul(params.W_o, out)
