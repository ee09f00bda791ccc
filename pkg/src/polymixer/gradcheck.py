"""Reverse-mode gradients of the mixer and a central-difference checker."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import numerics as nm
from .errors import NonFiniteError, ShapeError
from .mixer import MaskSpec, MixerConfig, MixerParams, _canonical_order, pom_forward

PARAM_NAMES = ("W_h", "W_s", "W_o", "alpha")


@dataclass(frozen=True)
class GradientBundle:
    d_W_h: np.ndarray
    d_W_s: np.ndarray
    d_W_o: np.ndarray
    d_alpha: np.ndarray
    d_X: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"W_h": self.d_W_h, "W_s": self.d_W_s, "W_o": self.d_W_o,
                "alpha": self.d_alpha, "X": self.d_X}


def pom_backward(X, mask: MaskSpec, cfg: MixerConfig, params: MixerParams,
                 upstream) -> GradientBundle:
    """Gradients of ``sum(upstream * pom_forward(X, mask))`` w.r.t. every
    parameter and the input."""
    X = nm.as_matrix(X)
    upstream = nm.as_matrix(upstream)
    d, n = X.shape
    if d != cfg.d:
        raise ShapeError(f"input has {d} rows, config expects d={cfg.d}")
    if upstream.shape != (cfg.d, n):
        raise ShapeError(f"upstream has shape {upstream.shape}, expected {(cfg.d, n)}")

    # forward, keeping intermediates
    A = nm.matmul(params.W_h, X)
    U = nm.elementwise(A, "activation", activation=cfg.activation)
    powers = [U]
    for _ in range(1, cfg.k):
        powers.append(powers[-1] * U)
    F = sum(powers[p] * params.alpha[:, p : p + 1] for p in range(cfg.k))
    S = nm.sigmoid(nm.matmul(params.W_s, X))

    if mask.kind == "full":
        order = _canonical_order(X) if nm.current_backend() == "exact" else slice(None)
        H = nm.reduce_rows_sum(F[:, order])
        if cfg.aggregation == "mean":
            H = H / n
        M = counts = None
    else:
        M = mask.dense(n, X.dtype)
        counts = M.sum(axis=1)
        H = nm.matmul(F, M.T)
        if cfg.aggregation == "mean":
            H = H / np.where(counts > 0, counts, 1)[None, :]
    Z = S * H

    # backward
    d_W_o = nm.matmul(upstream, Z.T)
    d_Z = nm.matmul(params.W_o.T, upstream)
    d_S = d_Z * H
    d_H = d_Z * S
    if M is None:
        d_H = nm.reduce_rows_sum(d_H)
        if cfg.aggregation == "mean":
            d_H = d_H / n
        d_F = np.repeat(d_H, n, axis=1)
    else:
        if cfg.aggregation == "mean":
            d_H = d_H / np.where(counts > 0, counts, 1)[None, :]
        d_F = nm.matmul(d_H, M)

    d_alpha = np.hstack([nm.reduce_rows_sum(d_F * powers[p]) for p in range(cfg.k)])
    # d/dU of sum_p alpha_p U^p = sum_p p alpha_p U^(p-1)
    dpoly = np.broadcast_to(params.alpha[:, 0:1], U.shape).copy()
    for p in range(1, cfg.k):
        dpoly = dpoly + (p + 1) * params.alpha[:, p : p + 1] * powers[p - 1]
    d_A = d_F * dpoly * nm.activation_derivative(cfg.activation, A)
    d_G = d_S * S * (1.0 - S)

    return GradientBundle(
        d_W_h=nm.matmul(d_A, X.T),
        d_W_s=nm.matmul(d_G, X.T),
        d_W_o=d_W_o,
        d_alpha=d_alpha,
        d_X=nm.matmul(params.W_h.T, d_A) + nm.matmul(params.W_s.T, d_G),
    )


def finite_difference(fn: Callable[[np.ndarray], float], at, eps: float = 1e-6) -> np.ndarray:
    """Central differences ``(fn(w + eps e_i) - fn(w - eps e_i)) / 2 eps`` for
    every entry of ``at``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    w = np.array(at, dtype=np.float64)
    grad = np.zeros_like(w)
    for idx in np.ndindex(w.shape):
        orig = w[idx]
        w[idx] = orig + eps
        plus = fn(w.copy())
        w[idx] = orig - eps
        minus = fn(w.copy())
        w[idx] = orig
        if not (np.isfinite(plus) and np.isfinite(minus)):
            raise NonFiniteError(f"function returned a non-finite value at entry {idx}")
        grad[idx] = (plus - minus) / (2.0 * eps)
    return grad


def relative_error(analytic, numeric) -> np.ndarray:
    """``|a - n| / max(1, |a|, |n|)`` entrywise."""
    a, b = np.asarray(analytic), np.asarray(numeric)
    return np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))


def numeric_gradients(X, mask: MaskSpec, cfg: MixerConfig, params: MixerParams,
                      upstream, eps: float = 1e-6) -> dict[str, np.ndarray]:
    X = nm.as_matrix(X)
    upstream = nm.as_matrix(upstream)

    def objective(X_, p_):
        return float(np.sum(upstream * pom_forward(X_, mask, cfg, p_)))

    grads = {}
    for name in PARAM_NAMES:
        def fn(w, name=name):
            return objective(X, MixerParams(**{**params.__dict__, name: w}))
        grads[name] = finite_difference(fn, getattr(params, name), eps)
    grads["X"] = finite_difference(lambda x: objective(x, params), X, eps)
    return grads


def check_gradients(X, mask: MaskSpec, cfg: MixerConfig, params: MixerParams,
                    upstream=None, eps: float = 1e-6, rtol: float = 1e-5):
    """Compare :func:`pom_backward` with central differences.

    Returns ``(passed, worst_relative_error_per_tensor)``.
    """
    X = nm.as_matrix(X)
    if upstream is None:
        upstream = np.ones((cfg.d, X.shape[1]))
    analytic = pom_backward(X, mask, cfg, params, upstream).as_dict()
    numeric = numeric_gradients(X, mask, cfg, params, upstream, eps)
    worst = {k: float(relative_error(analytic[k], numeric[k]).max()) for k in analytic}
    return all(v <= rtol for v in worst.values()), worst
