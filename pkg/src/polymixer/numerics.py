"""Dense real-matrix primitives used by the mixer, the attention baseline and
the gradient code.

A matrix is a 2-D ``numpy.ndarray`` (float64 unless float32 is requested).
Two backends are available:

``exact`` (default)
    Every contraction accumulates over the inner index in ascending order,
    one rank-1 update at a time, so each output entry is the same sequence of
    IEEE operations as a naive triple loop. Results are bit-reproducible and
    columns are computed independently of one another.

``blas``
    Contractions go through ``numpy.matmul``. Faster, but the summation order
    is whatever the BLAS library picks. Only for benchmarks.

Switch with :func:`backend`::

    with numerics.backend("blas"):
        y = mixer.pom_forward(x, mask, cfg, params)
"""
from __future__ import annotations

import contextlib
import contextvars
from typing import Iterator

import numpy as np

from .errors import DomainError, ShapeError

Matrix = np.ndarray

BACKENDS = ("exact", "blas")
_backend: contextvars.ContextVar[str] = contextvars.ContextVar("backend", default="exact")


def current_backend() -> str:
    return _backend.get()


@contextlib.contextmanager
def backend(name: str) -> Iterator[None]:
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")
    token = _backend.set(name)
    try:
        yield
    finally:
        _backend.reset(token)


def as_matrix(a, dtype=None) -> Matrix:
    """Coerce to a 2-D C-contiguous float matrix (float64 unless ``dtype``)."""
    m = np.asarray(a, dtype=dtype if dtype is not None else None)
    if m.dtype not in (np.float32, np.float64):
        m = m.astype(np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    return np.ascontiguousarray(m)


def zeros(rows: int, cols: int, dtype=np.float64) -> Matrix:
    return np.zeros((rows, cols), dtype=dtype)


def identity(n: int, dtype=np.float64) -> Matrix:
    return np.eye(n, dtype=dtype)


def ones_column(n: int, dtype=np.float64) -> Matrix:
    return np.ones((n, 1), dtype=dtype)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    dtype = np.result_type(a, b)
    if _backend.get() == "blas":
        return np.matmul(a, b).astype(dtype, copy=False)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=dtype)
    for j in range(a.shape[1]):
        out += a[:, j : j + 1] * b[j : j + 1, :]
    return out


def sigmoid(a: Matrix) -> Matrix:
    # split by sign so exp never overflows
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def relu(a: Matrix) -> Matrix:
    return np.maximum(a, 0.0)


ACTIVATIONS = {
    "tanh": np.tanh,
    "identity": lambda a: a.copy(),
    "relu": relu,
}


def activation_derivative(name: str, pre: Matrix) -> Matrix:
    """Derivative of activation ``name`` evaluated at pre-activation ``pre``."""
    if name == "tanh":
        t = np.tanh(pre)
        return 1.0 - t * t
    if name == "identity":
        return np.ones_like(pre)
    if name == "relu":
        return (pre > 0).astype(pre.dtype)
    raise DomainError(f"unknown activation {name!r}")


def power(a: Matrix, p: int) -> Matrix:
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)) or p < 1:
        raise DomainError(f"exponent must be a positive integer, got {p!r}")
    out = a.copy()
    for _ in range(p - 1):
        out = out * a
    return out


def _check_operand(a: Matrix, b) -> Matrix | float:
    if np.isscalar(b):
        return b
    b = np.asarray(b)
    if b.shape == a.shape:
        return b
    if b.ndim == 2 and b.shape == (a.shape[0], 1):
        return b
    raise ShapeError(f"cannot broadcast {b.shape} against {a.shape}")


def elementwise(a: Matrix, op: str, b=None, *, p: int | None = None,
                activation: str | None = None) -> Matrix:
    """Entrywise ``op`` on ``a``.

    ``op`` is one of ``add``, ``mul``, ``pow``, ``sigmoid``, ``activation``.
    For ``add``/``mul`` the operand ``b`` is a scalar, a matrix of the same
    shape, or a single column broadcast across the columns of ``a``.
    """
    if op == "add":
        return a + _check_operand(a, b)
    if op == "mul":
        return a * _check_operand(a, b)
    if op == "pow":
        return power(a, p if p is not None else b)
    if op == "sigmoid":
        return sigmoid(a)
    if op == "activation":
        try:
            return ACTIVATIONS[activation](a)
        except KeyError:
            raise DomainError(f"unknown activation {activation!r}") from None
    raise DomainError(f"unknown elementwise op {op!r}")


def reduce_rows_sum(a: Matrix, selector=None) -> Matrix:
    """Per-row sum over the columns of ``a`` (optionally only selected ones)."""
    if selector is not None:
        selector = np.asarray(selector)
        if selector.ndim != 1 or selector.shape[0] != a.shape[1]:
            raise ShapeError(
                f"selector of length {selector.shape} does not match {a.shape[1]} columns"
            )
        cols = np.flatnonzero(selector)
    else:
        cols = range(a.shape[1])
    if _backend.get() == "blas" and selector is None:
        return a.sum(axis=1, keepdims=True)
    out = np.zeros((a.shape[0], 1), dtype=a.dtype)
    for j in cols:
        out += a[:, j : j + 1]
    return out


def cumulative_columns(a: Matrix) -> Matrix:
    """Running column sums, left to right: column t is the sum of columns 0..t."""
    return np.cumsum(a, axis=1)
