"""Multiplication-count cost model for the mixer and for multi-head attention.

Additions are ignored. All arithmetic is on Python integers, so results are
exact at any size.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError


def _require_positive(**dims):
    for name, v in dims.items():
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise DomainError(f"{name} must be a positive integer, got {v!r}")


def flops_pom(n: int, d: int, D: int, k: int) -> int:
    """Projections in (2ndD) and out (ndD), polynomial (knD), gating (nD)."""
    _require_positive(n=n, d=d, D=D, k=k)
    return 3 * n * d * D + (k + 1) * n * D


def flops_mha(n: int, d: int) -> int:
    """Q/K/V and output projections (4nd^2), scores and value mixing (2dn^2)."""
    _require_positive(n=n, d=d)
    return 4 * n * d * d + 2 * d * n * n


def crossover_n(d: int, D: int, k: int) -> int:
    """Smallest ``n >= 1`` with ``n >= (D(3d+k+1) - 4d^2) / 2d``.

    From that length on the mixer needs no more multiplications than
    attention; when the bound is an integer the two counts tie exactly at it.
    """
    _require_positive(d=d, D=D, k=k)
    num = D * (3 * d + k + 1) - 4 * d * d
    if num <= 0:
        return 1
    return max(1, -(-num // (2 * d)))


@dataclass(frozen=True)
class CostReport:
    n: int
    d: int
    D: int
    k: int
    pom_mults: int
    mha_mults: int
    crossover_n: int

    @property
    def ratio(self) -> float:
        return self.mha_mults / self.pom_mults


def cost_report(n: int, d: int, D: int, k: int) -> CostReport:
    return CostReport(n, d, D, k, flops_pom(n, d, D, k), flops_mha(n, d), crossover_n(d, D, k))
