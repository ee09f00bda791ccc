"""Randomised property suite behind ``pombench check``.

Every check draws its cases from a seeded generator, runs in the exact
backend with float64, and returns a :class:`CheckResult`.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fixtures
from . import numerics as nm
from .block import FeedForwardParams, PolyMorpherParams, polymorpher_forward
from .cost import crossover_n, flops_mha, flops_pom
from .errors import ToleranceBreach
from .gradcheck import check_gradients
from .mixer import (MaskSpec, MixerConfig, MixerParams, pom_forward,
                    state_masked, stream_decode, stream_decode_blocks)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def random_params(cfg: MixerConfig, rng: np.random.Generator) -> MixerParams:
    """Standard init with alpha perturbed so every degree contributes."""
    p = MixerParams.init(cfg, rng)
    return MixerParams(p.W_h, p.W_s, p.W_o, p.alpha + rng.uniform(-0.5, 0.5, p.alpha.shape))


def random_permutation_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    return np.eye(n)[:, rng.permutation(n)]


def equivariance(cases: int = 100, seed: int = 0, tol: float = 1e-10):
    """Returns ``(failures, worst)`` over ``cases`` random ``(X, P)`` pairs."""
    rng = np.random.default_rng(seed)
    failures, worst = 0, 0.0
    for _ in range(cases):
        d, D = rng.integers(1, 17, size=2)
        n = int(rng.integers(1, 33))
        cfg = MixerConfig(int(d), int(D), int(rng.integers(1, 5)))
        params = random_params(cfg, rng)
        X = rng.standard_normal((cfg.d, n))
        P = random_permutation_matrix(n, rng)
        full = MaskSpec.full()
        err = float(np.max(np.abs(pom_forward(X @ P, full, cfg, params)
                                  - pom_forward(X, full, cfg, params) @ P)))
        worst = max(worst, err)
        failures += err > tol
    return failures, worst


def streaming(configs: int = 50, seed: int = 1, tol: float = 1e-10, block_sizes=(1, 2, 4, 8)):
    """Causal and block-causal decoding against the batched masked forward."""
    rng = np.random.default_rng(seed)
    failures, worst = 0, 0.0
    for _ in range(configs):
        cfg = MixerConfig(int(rng.integers(1, 9)), int(rng.integers(1, 17)),
                          int(rng.integers(1, 4)),
                          activation=str(rng.choice(["tanh", "identity", "relu"])))
        params = random_params(cfg, rng)
        n = int(rng.integers(1, 33))
        X = rng.standard_normal((cfg.d, n))
        errs = [np.max(np.abs(stream_decode(X, cfg, params)
                              - pom_forward(X, MaskSpec.causal(), cfg, params)))]
        for K in block_sizes:
            M = MaskSpec.block_causal(K).dense(n)
            errs.append(np.max(np.abs(stream_decode_blocks(X, K, cfg, params)
                                      - pom_forward(X, MaskSpec.explicit(M), cfg, params))))
        err = float(max(errs))
        worst = max(worst, err)
        failures += err > tol
    return failures, worst


def gradients(configs: int = 20, seed: int = 2, rtol: float = 1e-5, eps: float = 1e-6):
    rng = np.random.default_rng(seed)
    failures, worst = 0, 0.0
    for i in range(configs):
        cfg = MixerConfig(int(rng.integers(1, 9)), int(rng.integers(1, 9)), 1 + i % 3,
                          activation=("tanh", "identity")[(i // 3) % 2])
        mask = (MaskSpec.full(), MaskSpec.causal())[i % 2]
        params = random_params(cfg, rng)
        n = int(rng.integers(1, 7))
        X = rng.standard_normal((cfg.d, n))
        upstream = rng.standard_normal((cfg.d, n))
        ok, errs = check_gradients(X, mask, cfg, params, upstream, eps=eps, rtol=rtol)
        worst = max(worst, max(errs.values()))
        failures += not ok
    return failures, worst


def probe_config() -> tuple[MixerConfig, MixerParams]:
    """Scalar tokens, unit projections, identity activation, k = 2 with unit
    coefficients: the polynomial ``x + x**2`` is injective on positive tokens."""
    cfg = MixerConfig(d=1, D=1, k=2, activation="identity")
    one = np.ones((1, 1))
    return cfg, MixerParams(one, one.copy(), one.copy(), np.ones((1, 2)))


def contextual_probe(trials: int = 1000, seed: int = 3, tol: float = 1e-9,
                     n_range=(2, 16), low: float = 0.1, high: float = 1.0):
    """Pairs of scalar sequences differing in exactly one token must produce
    2n pairwise distinct outputs. Returns the number of failing pairs."""
    cfg, params = probe_config()
    rng = np.random.default_rng(seed)
    full = MaskSpec.full()
    failures = 0
    for trial in range(trials):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        X = rng.uniform(low, high, (1, n))
        X2 = X.copy()
        X2[0, rng.integers(n)] = rng.uniform(low, high)
        outs = np.concatenate([pom_forward(X, full, cfg, params).ravel(),
                               pom_forward(X2, full, cfg, params).ravel()])
        gaps = np.abs(outs[:, None] - outs[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() <= tol:
            failures += 1
            log.warning("contextual probe trial %d: outputs within %.2e (X=%s, X'=%s)",
                        trial, gaps.min(), X.ravel(), X2.ravel())
    return failures


def crossover_identity(d_max: int = 1024):
    return [d for d in range(1, d_max + 1) if crossover_n(d, 2 * d, 2) != d + 3]


def cost_consistency(triples: int = 200, seed: int = 4):
    """Triples (with crossover c > 1) where the mixer is not strictly cheaper
    at ``c`` or not strictly dearer at ``c - 1``."""
    rng = np.random.default_rng(seed)
    bad = []
    seen = 0
    while seen < triples:
        d, D, k = int(rng.integers(1, 1025)), int(rng.integers(1, 4097)), int(rng.integers(1, 9))
        c = crossover_n(d, D, k)
        if c <= 1:
            continue
        seen += 1
        if not (flops_pom(c, d, D, k) < flops_mha(c, d)
                and flops_pom(c - 1, d, D, k) > flops_mha(c - 1, d)):
            bad.append((d, D, k, c))
    return bad


def residual_identity(cases: int = 20, seed: int = 5):
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(cases):
        cfg = MixerConfig(int(rng.integers(1, 9)), int(rng.integers(1, 17)), int(rng.integers(1, 4)))
        p = random_params(cfg, rng)
        dead_mixer = MixerParams(p.W_h, p.W_s, np.zeros_like(p.W_o), p.alpha)
        ff = FeedForwardParams.init(cfg.d, rng=rng)
        dead_ff = FeedForwardParams(ff.W1, ff.b1, np.zeros_like(ff.W2), np.zeros_like(ff.b2))
        X = rng.standard_normal((cfg.d, int(rng.integers(1, 17))))
        out = polymorpher_forward(X, PolyMorpherParams(cfg, dead_mixer, dead_ff), MaskSpec.full())
        failures += not np.array_equal(out, X)
    return failures


def shipped_fixtures():
    reports, errors = [], []
    for path in fixtures.shipped_fixtures():
        try:
            reports.append(fixtures.fixture_roundtrip(path))
        except (ToleranceBreach, ValueError) as exc:
            errors.append(f"{path.name}: {exc}")
    return reports, errors


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    with nm.backend("exact"):
        passed, detail = fn()
    return CheckResult(name, passed, detail, time.perf_counter() - t0)


def run_all() -> list[CheckResult]:
    def eq():
        f, w = equivariance()
        return f == 0, f"{100 - f}/100 within 1e-10 (worst {w:.1e})"

    def st():
        f, w = streaming()
        return f == 0, f"{50 - f}/50 configurations within 1e-10 (worst {w:.1e})"

    def gr():
        f, w = gradients()
        return f == 0, f"{20 - f}/20 configurations within rel 1e-5 (worst {w:.1e})"

    def cp():
        f = contextual_probe()
        return f == 0, f"{1000 - f}/1000 pairs pairwise distinct"

    def cx():
        bad = crossover_identity()
        return not bad, f"crossover(d, 2d, 2) == d + 3 for d in 1..1024 ({len(bad)} mismatches)"

    def cc():
        bad = cost_consistency()
        detail = f"{200 - len(bad)}/200 triples strictly ordered around the crossover"
        if bad:
            detail += f"; ties at c e.g. {bad[:3]}"
        return not bad, detail

    def ri():
        f = residual_identity()
        return f == 0, f"{20 - f}/20 dead-branch blocks are the identity"

    def fx():
        reports, errors = shipped_fixtures()
        worst = max((r.max_abs_diff for r in reports), default=0.0)
        return not errors and bool(reports), (
            f"{len(reports)} fixtures verified (worst diff {worst:.1e})"
            + (f"; {errors}" if errors else ""))

    def mono():
        return _mask_monotonicity(), "adding a visible token changes only that row's column"

    return [
        _timed("equivariance", eq),
        _timed("streaming equivalence", st),
        _timed("mask monotonicity", mono),
        _timed("gradient check", gr),
        _timed("contextual probe", cp),
        _timed("crossover identity", cx),
        _timed("cost-model consistency", cc),
        _timed("residual identity", ri),
        _timed("fixture round-trip", fx),
    ]


def _mask_monotonicity(cases: int = 20, seed: int = 6) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(cases):
        cfg = MixerConfig(int(rng.integers(1, 6)), int(rng.integers(1, 9)), int(rng.integers(1, 4)))
        params = random_params(cfg, rng)
        n = int(rng.integers(2, 12))
        X = rng.standard_normal((cfg.d, n))
        M = (rng.random((n, n)) < 0.5).astype(float)
        zeros = np.argwhere(M == 0)
        if not len(zeros):
            continue
        s, t = zeros[rng.integers(len(zeros))]
        M2 = M.copy()
        M2[s, t] = 1.0
        before = pom_forward(X, MaskSpec.explicit(M), cfg, params)
        after = pom_forward(X, MaskSpec.explicit(M2), cfg, params)
        others = np.arange(n) != s
        if not np.array_equal(before[:, others], after[:, others]):
            return False
        # same check on the state itself
        if not np.array_equal(state_masked(X, MaskSpec.explicit(M), cfg, params)[:, others],
                              state_masked(X, MaskSpec.explicit(M2), cfg, params)[:, others]):
            return False
    return True
