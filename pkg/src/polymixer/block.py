"""PolyMorpher blocks: residual mixer + residual feed-forward, and a stack of
them behind a learned positional table."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import erf

from . import numerics as nm
from .errors import DomainError, LengthError, ShapeError
from .mixer import MaskSpec, MixerConfig, MixerParams, pom_forward

FFActivation = Literal["gelu", "relu", "tanh"]


def gelu(a: np.ndarray) -> np.ndarray:
    return 0.5 * a * (1.0 + erf(a / np.sqrt(2.0)))


FF_ACTIVATIONS = {"gelu": gelu, "relu": nm.relu, "tanh": np.tanh}


@dataclass(frozen=True)
class FeedForwardParams:
    W1: np.ndarray  # m x d
    b1: np.ndarray  # m x 1
    W2: np.ndarray  # d x m
    b2: np.ndarray  # d x 1
    activation: FFActivation = "gelu"

    def __post_init__(self):
        m, d = self.W1.shape
        if m < 1:
            raise ShapeError("hidden width must be >= 1")
        if self.b1.shape != (m, 1) or self.W2.shape != (d, m) or self.b2.shape != (d, 1):
            raise ShapeError(
                f"inconsistent feed-forward shapes W1={self.W1.shape} b1={self.b1.shape} "
                f"W2={self.W2.shape} b2={self.b2.shape}"
            )
        if self.activation not in FF_ACTIVATIONS:
            raise DomainError(f"unknown feed-forward activation {self.activation!r}")

    @property
    def d(self) -> int:
        return self.W1.shape[1]

    @classmethod
    def init(cls, d: int, hidden: int | None = None, activation: FFActivation = "gelu",
             rng=None) -> "FeedForwardParams":
        """Default hidden width is ``4 d``; weights and biases uniform in
        +-1/sqrt(fan_in)."""
        rng = np.random.default_rng(rng)
        m = 4 * d if hidden is None else hidden
        b_in, b_hid = 1.0 / np.sqrt(d), 1.0 / np.sqrt(m)
        return cls(
            W1=rng.uniform(-b_in, b_in, (m, d)),
            b1=rng.uniform(-b_in, b_in, (m, 1)),
            W2=rng.uniform(-b_hid, b_hid, (d, m)),
            b2=rng.uniform(-b_hid, b_hid, (d, 1)),
            activation=activation,
        )


def feed_forward(X, ff: FeedForwardParams) -> np.ndarray:
    X = nm.as_matrix(X)
    if X.shape[0] != ff.d:
        raise ShapeError(f"input has {X.shape[0]} rows, feed-forward expects {ff.d}")
    hidden = FF_ACTIVATIONS[ff.activation](nm.elementwise(nm.matmul(ff.W1, X), "add", ff.b1))
    return nm.elementwise(nm.matmul(ff.W2, hidden), "add", ff.b2)


def layer_norm(X: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Parameter-free normalisation of each token (column) over features."""
    mu = X.mean(axis=0, keepdims=True)
    var = ((X - mu) ** 2).mean(axis=0, keepdims=True)
    return (X - mu) / np.sqrt(var + eps)


@dataclass(frozen=True)
class PolyMorpherParams:
    cfg: MixerConfig
    mixer: MixerParams
    ff: FeedForwardParams
    pre_norm: bool = False

    def __post_init__(self):
        self.mixer.validate(self.cfg)
        if self.ff.d != self.cfg.d:
            raise ShapeError(f"feed-forward width {self.ff.d} != mixer d {self.cfg.d}")

    @classmethod
    def init(cls, cfg: MixerConfig, rng=None, hidden: int | None = None,
             ff_activation: FFActivation = "gelu", pre_norm: bool = False):
        rng = np.random.default_rng(rng)
        return cls(cfg, MixerParams.init(cfg, rng),
                   FeedForwardParams.init(cfg.d, hidden, ff_activation, rng), pre_norm)


def polymorpher_forward(X, params: PolyMorpherParams, mask: MaskSpec | None = None) -> np.ndarray:
    """``Y = X + PoM(X)``, then ``Y + FF(Y)``.

    With ``pre_norm`` the mixer and feed-forward see normalised inputs while
    the residual stream is left as is.
    """
    mask = mask or MaskSpec.full()
    X = nm.as_matrix(X)
    norm = layer_norm if params.pre_norm else (lambda a: a)
    Y = X + pom_forward(norm(X), mask, params.cfg, params.mixer)
    return Y + feed_forward(norm(Y), params.ff)


@dataclass(frozen=True)
class StackParams:
    layers: tuple[PolyMorpherParams, ...]
    pos_encoding: np.ndarray  # d x n_max
    d: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        pe = np.asarray(self.pos_encoding)
        if pe.ndim != 2:
            raise ShapeError("positional table must be d x n_max")
        object.__setattr__(self, "d", pe.shape[0])
        for i, layer in enumerate(self.layers):
            if layer.cfg.d != self.d:
                raise ShapeError(f"layer {i} has d={layer.cfg.d}, table has d={self.d}")

    @property
    def n_max(self) -> int:
        return self.pos_encoding.shape[1]

    @classmethod
    def init(cls, cfg: MixerConfig, n_layers: int, n_max: int, rng=None, **layer_kw):
        rng = np.random.default_rng(rng)
        layers = [PolyMorpherParams.init(cfg, rng, **layer_kw) for _ in range(n_layers)]
        return cls(tuple(layers), rng.normal(0.0, 0.02, (cfg.d, n_max)))


def stack_forward(X, stack: StackParams, mask: MaskSpec | None = None) -> np.ndarray:
    X = nm.as_matrix(X)
    n = X.shape[1]
    if X.shape[0] != stack.d:
        raise ShapeError(f"input has {X.shape[0]} rows, stack expects {stack.d}")
    if n > stack.n_max:
        raise LengthError(f"sequence length {n} exceeds positional table size {stack.n_max}")
    out = X + stack.pos_encoding[:, :n]
    for layer in stack.layers:
        out = polymorpher_forward(out, layer, mask)
    return out
