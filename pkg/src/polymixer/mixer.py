"""Polynomial Mixer: shared polynomial state, sigmoid-gated readout, and the
full / causal / block-causal / explicit-mask variants with streaming decode.

Shapes follow the column-token convention: an input sequence ``X`` is
``d x n`` (one token per column), the state is ``D x 1`` (full visibility) or
``D x n`` (one state per position under a mask).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import numerics as nm
from .errors import BlockSizeError, DomainError, EmptySequenceError, ShapeError

Activation = Literal["tanh", "identity", "relu"]
Aggregation = Literal["sum", "mean"]


@dataclass(frozen=True)
class MixerConfig:
    d: int
    D: int
    k: int = 2
    activation: Activation = "tanh"
    aggregation: Aggregation = "sum"

    def __post_init__(self):
        for name in ("d", "D", "k"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise DomainError(f"{name} must be an integer >= 1, got {v!r}")
        if self.activation not in nm.ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")
        if self.aggregation not in ("sum", "mean"):
            raise DomainError(f"unknown aggregation {self.aggregation!r}")

    @classmethod
    def recommended(cls, d: int, **kw) -> "MixerConfig":
        """``D = 2d``, ``k = 2``: the setting reported to match attention."""
        return cls(d=d, D=2 * d, k=2, **kw)


@dataclass(frozen=True)
class MixerParams:
    W_h: np.ndarray  # D x d
    W_s: np.ndarray  # D x d
    W_o: np.ndarray  # d x D
    alpha: np.ndarray  # D x k

    def validate(self, cfg: MixerConfig) -> None:
        expected = {
            "W_h": (cfg.D, cfg.d),
            "W_s": (cfg.D, cfg.d),
            "W_o": (cfg.d, cfg.D),
            "alpha": (cfg.D, cfg.k),
        }
        for name, shape in expected.items():
            m = getattr(self, name)
            if m.shape != shape:
                raise ShapeError(f"{name} has shape {m.shape}, config needs {shape}")
            if not np.all(np.isfinite(m)):
                raise DomainError(f"{name} has non-finite entries")

    def astype(self, dtype) -> "MixerParams":
        return MixerParams(*(np.asarray(getattr(self, f.name), dtype=dtype)
                             for f in dataclasses.fields(self)))

    @classmethod
    def init(cls, cfg: MixerConfig, rng: np.random.Generator | int | None = None,
             dtype=np.float64) -> "MixerParams":
        """Projections uniform in +-1/sqrt(d); alpha is 1 for degree one and
        0.1**(p-1) for degree p > 1."""
        rng = np.random.default_rng(rng)
        bound = 1.0 / np.sqrt(cfg.d)
        W_h = rng.uniform(-bound, bound, (cfg.D, cfg.d))
        W_s = rng.uniform(-bound, bound, (cfg.D, cfg.d))
        W_o = rng.uniform(-bound, bound, (cfg.d, cfg.D))
        alpha = np.tile(0.1 ** np.arange(cfg.k), (cfg.D, 1))
        return cls(W_h, W_s, W_o, alpha).astype(dtype)


@dataclass(frozen=True)
class MaskSpec:
    """Visibility mask. Entry ``(s, t)`` is 1 iff token ``s`` may read token ``t``.

    ``causal`` includes the diagonal. ``block_causal`` uses half-open blocks
    ``[bK, (b+1)K)``: a token sees its whole block and every earlier block.
    """

    kind: Literal["full", "causal", "block_causal", "explicit"] = "full"
    block_size: int | None = None
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("full", "causal", "block_causal", "explicit"):
            raise DomainError(f"unknown mask kind {self.kind!r}")
        if self.kind == "block_causal":
            if self.block_size is None or int(self.block_size) < 1:
                raise BlockSizeError(f"block size must be >= 1, got {self.block_size!r}")
        if self.kind == "explicit":
            if self.matrix is None:
                raise DomainError("explicit mask needs a matrix")
            m = np.asarray(self.matrix)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ShapeError(f"explicit mask must be square, got {m.shape}")
            if not np.all((m == 0) | (m == 1)):
                raise DomainError("explicit mask entries must be 0 or 1")

    @classmethod
    def full(cls) -> "MaskSpec":
        return cls("full")

    @classmethod
    def causal(cls) -> "MaskSpec":
        return cls("causal")

    @classmethod
    def block_causal(cls, K: int) -> "MaskSpec":
        return cls("block_causal", block_size=K)

    @classmethod
    def explicit(cls, matrix) -> "MaskSpec":
        return cls("explicit", matrix=np.asarray(matrix, dtype=np.float64))

    def block_ends(self, n: int) -> np.ndarray:
        """Exclusive end index of the visible prefix for each position."""
        if self.kind == "full":
            return np.full(n, n)
        if self.kind == "causal":
            return np.arange(1, n + 1)
        if self.kind == "block_causal":
            K = self.block_size
            return np.minimum((np.arange(n) // K + 1) * K, n)
        raise DomainError("explicit masks are not prefix masks")

    def dense(self, n: int, dtype=np.float64) -> np.ndarray:
        if self.kind == "explicit":
            if self.matrix.shape != (n, n):
                raise ShapeError(f"mask is {self.matrix.shape}, sequence needs {(n, n)}")
            return np.asarray(self.matrix, dtype=dtype)
        ends = self.block_ends(n)
        return (np.arange(n)[None, :] < ends[:, None]).astype(dtype)


def _check_input(X, cfg: MixerConfig) -> np.ndarray:
    X = nm.as_matrix(X)
    if X.shape[0] != cfg.d:
        raise ShapeError(f"input has {X.shape[0]} rows, config expects d={cfg.d}")
    return X


def poly_features(X, cfg: MixerConfig, params: MixerParams) -> np.ndarray:
    """``sum_p alpha[:, p] * h(W_h X) ** p`` for every token (``D x n``)."""
    X = _check_input(X, cfg)
    U = nm.elementwise(nm.matmul(params.W_h, X), "activation", activation=cfg.activation)
    alpha = params.alpha
    F = U * alpha[:, 0:1]
    Up = U
    for p in range(1, cfg.k):
        Up = Up * U
        F = F + Up * alpha[:, p : p + 1]
    return F


def _canonical_order(X: np.ndarray) -> np.ndarray:
    # lexicographic over feature rows, row 0 most significant
    return np.lexsort(X[::-1])


def state_full(X, cfg: MixerConfig, params: MixerParams) -> np.ndarray:
    """Shared state ``H(X)`` (``D x 1``) aggregated over the whole sequence.

    In the exact backend tokens are summed in a canonical (lexicographic)
    order, so permuting the input leaves the state bitwise unchanged.
    """
    X = _check_input(X, cfg)
    n = X.shape[1]
    if n == 0:
        raise EmptySequenceError("cannot aggregate an empty sequence")
    F = poly_features(X, cfg, params)
    if nm.current_backend() == "exact":
        F = F[:, _canonical_order(X)]
    H = nm.reduce_rows_sum(F)
    if cfg.aggregation == "mean":
        H = H / n
    return H


def _aggregate_masked(F: np.ndarray, mask: MaskSpec, aggregation: str) -> np.ndarray:
    n = F.shape[1]
    if mask.kind == "explicit":
        M = mask.dense(n, F.dtype)
        H = nm.matmul(F, M.T)
        counts = M.sum(axis=1)
    else:
        ends = mask.block_ends(n)
        H = nm.cumulative_columns(F)[:, ends - 1]
        counts = ends.astype(F.dtype)
    if aggregation == "mean":
        # rows of M with no visible token keep a zero state
        H = H / np.where(counts > 0, counts, 1)[None, :]
    return H


def state_masked(X, mask: MaskSpec, cfg: MixerConfig, params: MixerParams) -> np.ndarray:
    """Per-position state ``F M^T`` (``D x n``); column s sums the tokens s may see."""
    X = _check_input(X, cfg)
    n = X.shape[1]
    if n == 0:
        raise EmptySequenceError("cannot aggregate an empty sequence")
    if mask.kind == "full":
        return np.repeat(state_full(X, cfg, params), n, axis=1)
    return _aggregate_masked(poly_features(X, cfg, params), mask, cfg.aggregation)


def gate(X, cfg: MixerConfig, params: MixerParams) -> np.ndarray:
    return nm.sigmoid(nm.matmul(params.W_s, _check_input(X, cfg)))


def readout(X, H, cfg: MixerConfig, params: MixerParams) -> np.ndarray:
    """``W_o (sigmoid(W_s X) * H)``; ``H`` is one column (broadcast) or ``n``."""
    X = _check_input(X, cfg)
    H = nm.as_matrix(H)
    n = X.shape[1]
    if H.shape[0] != cfg.D or H.shape[1] not in (1, n):
        raise ShapeError(f"state of shape {H.shape} cannot be read by {n} tokens")
    S = gate(X, cfg, params)
    return nm.matmul(params.W_o, nm.elementwise(S, "mul", H))


def pom_forward(X, mask: MaskSpec, cfg: MixerConfig, params: MixerParams) -> np.ndarray:
    X = _check_input(X, cfg)
    if mask.kind == "full":
        H = state_full(X, cfg, params)
    else:
        H = state_masked(X, mask, cfg, params)
    return readout(X, H, cfg, params)


@dataclass(frozen=True)
class StreamState:
    """Running state for causal / block-causal decoding.

    ``h`` holds the unnormalised sum of polynomial features of every token
    folded so far; ``last_block`` is the feature sum of the most recent block.
    """

    h: np.ndarray
    tokens_seen: int = 0
    block_size: int = 1
    last_block: np.ndarray | None = None
    position_in_block: int = 0


def stream_init(cfg: MixerConfig, params: MixerParams, block_size: int = 1) -> StreamState:
    if int(block_size) < 1:
        raise BlockSizeError(f"block size must be >= 1, got {block_size!r}")
    return StreamState(
        h=np.zeros((cfg.D, 1), dtype=params.W_h.dtype),
        block_size=int(block_size),
        last_block=np.zeros((cfg.D, 1), dtype=params.W_h.dtype),
    )


def _visible_state(h: np.ndarray, seen: int, cfg: MixerConfig) -> np.ndarray:
    return h / seen if cfg.aggregation == "mean" else h


def stream_step(state: StreamState, x_t, cfg: MixerConfig, params: MixerParams):
    """Fold one token into the running state and emit its output.

    Returns ``(new_state, y_t)``; the work done is independent of how many
    tokens came before.
    """
    x_t = _check_input(x_t, cfg)
    if x_t.shape[1] != 1:
        raise ShapeError(f"stream_step takes one token, got {x_t.shape[1]}")
    f = poly_features(x_t, cfg, params)
    h = state.h + f
    seen = state.tokens_seen + 1
    y = readout(x_t, _visible_state(h, seen, cfg), cfg, params)
    return dataclasses.replace(state, h=h, tokens_seen=seen, last_block=f,
                               position_in_block=0), y


def stream_block_step(state: StreamState, X_block, cfg: MixerConfig, params: MixerParams):
    """Process the next block: every token reads all earlier blocks plus the
    entire current block, then the block is folded into the state.

    A block shorter than ``block_size`` is allowed only as the final one.
    """
    X_block = _check_input(X_block, cfg)
    m = X_block.shape[1]
    K = state.block_size
    if m == 0:
        raise EmptySequenceError("empty block")
    if m > K:
        raise BlockSizeError(f"block of {m} tokens exceeds block size {K}")
    if state.position_in_block != 0:
        raise BlockSizeError("a short block already ended the block grid")
    F = poly_features(X_block, cfg, params)
    h = state.h
    for j in range(m):
        h = h + F[:, j : j + 1]
    seen = state.tokens_seen + m
    Y = readout(X_block, _visible_state(h, seen, cfg), cfg, params)
    new = dataclasses.replace(
        state,
        h=h,
        tokens_seen=seen,
        last_block=nm.reduce_rows_sum(F),
        position_in_block=m % K,
    )
    return new, Y


def stream_decode(X, cfg: MixerConfig, params: MixerParams) -> np.ndarray:
    """Run :func:`stream_step` over every column of ``X``."""
    X = _check_input(X, cfg)
    state = stream_init(cfg, params)
    out = []
    for t in range(X.shape[1]):
        state, y = stream_step(state, X[:, t : t + 1], cfg, params)
        out.append(y)
    return np.hstack(out)


def stream_decode_blocks(X, K: int, cfg: MixerConfig, params: MixerParams) -> np.ndarray:
    X = _check_input(X, cfg)
    state = stream_init(cfg, params, block_size=K)
    out = []
    for start in range(0, X.shape[1], K):
        state, Y = stream_block_step(state, X[:, start : start + K], cfg, params)
        out.append(Y)
    return np.hstack(out)
