"""Exit criteria. Each test prints one PASS/FAIL line, collected in the
terminal summary under "acceptance criteria"."""
import time

import numpy as np
import pytest

from polymixer import bench, checks, fixtures
from polymixer import numerics as nm
from polymixer.block import FeedForwardParams, PolyMorpherParams, polymorpher_forward
from polymixer.cost import crossover_n, flops_mha, flops_pom
from polymixer.gradcheck import check_gradients
from polymixer.mixer import (MaskSpec, MixerConfig, MixerParams, pom_forward,
                             stream_decode, stream_decode_blocks)

from conftest import ACCEPTANCE_LINES, make_params


def report(number, name, passed, detail, seconds):
    line = f"[{'PASS' if passed else 'FAIL'}] {number}. {name}: {detail} ({seconds:.2f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def test_1_equivariance():
    rng = np.random.default_rng(101)
    errs = []
    with Timer() as t:
        for _ in range(100):
            d, D, n = int(rng.integers(1, 17)), int(rng.integers(1, 17)), int(rng.integers(1, 33))
            cfg = MixerConfig(d, D, int(rng.integers(1, 5)))
            p = make_params(cfg, rng)
            X = rng.standard_normal((d, n))
            P = np.eye(n)[:, rng.permutation(n)]
            full = MaskSpec.full()
            errs.append(np.max(np.abs(pom_forward(X @ P, full, cfg, p)
                                      - pom_forward(X, full, cfg, p) @ P)))
    ok = sum(e <= 1e-10 for e in errs)
    passed = ok == 100 and t.seconds < 5
    report(1, "equivariance", passed, f"{ok}/100 within 1e-10, worst {max(errs):.1e}", t.seconds)
    assert passed


def test_2_streaming_equivalence():
    rng = np.random.default_rng(102)
    causal_ok = block_ok = 0
    worst = 0.0
    with Timer() as t:
        for _ in range(50):
            cfg = MixerConfig(int(rng.integers(1, 9)), int(rng.integers(1, 17)),
                              int(rng.integers(1, 4)),
                              activation=str(rng.choice(["tanh", "identity", "relu"])))
            p = make_params(cfg, rng)
            n = int(rng.integers(1, 33))
            X = rng.standard_normal((cfg.d, n))
            e = np.max(np.abs(stream_decode(X, cfg, p) - pom_forward(X, MaskSpec.causal(), cfg, p)))
            causal_ok += e <= 1e-10
            worst = max(worst, e)
            eb = 0.0
            for K in (1, 2, 4, 8):
                M = np.array([[float(tt < (s // K + 1) * K) for tt in range(n)] for s in range(n)])
                eb = max(eb, np.max(np.abs(stream_decode_blocks(X, K, cfg, p)
                                           - pom_forward(X, MaskSpec.explicit(M), cfg, p))))
            block_ok += eb <= 1e-10
            worst = max(worst, eb)
    passed = causal_ok == 50 and block_ok == 50 and t.seconds < 10
    report(2, "streaming equivalence", passed,
           f"causal {causal_ok}/50, block K in (1,2,4,8) {block_ok}/50, worst {worst:.1e}",
           t.seconds)
    assert passed


def test_3_crossover_identity():
    with Timer() as t:
        bad = [d for d in range(1, 1025) if crossover_n(d, 2 * d, 2) != d + 3]
    passed = not bad and t.seconds < 1
    report(3, "crossover identity", passed, f"{1024 - len(bad)}/1024 with c == d + 3", t.seconds)
    assert passed


def test_4_cost_model_consistency():
    rng = np.random.default_rng(4)
    bad, seen = [], 0
    with Timer() as t:
        while seen < 200:
            d, D, k = int(rng.integers(1, 1025)), int(rng.integers(1, 4097)), int(rng.integers(1, 9))
            c = crossover_n(d, D, k)
            if c <= 1:
                continue
            seen += 1
            if not (flops_pom(c, d, D, k) < flops_mha(c, d)
                    and flops_pom(c - 1, d, D, k) > flops_mha(c - 1, d)):
                bad.append((d, D, k, c))
    passed = not bad and t.seconds < 1
    report(4, "cost-model consistency", passed,
           f"{200 - len(bad)}/200 triples strictly ordered" + (f", failing {bad[:5]}" if bad else ""),
           t.seconds)
    assert passed


def test_5_gradient_verification():
    rng = np.random.default_rng(105)
    worst, ok = 0.0, 0
    with Timer() as t:
        for i in range(20):
            cfg = MixerConfig(int(rng.integers(1, 9)), int(rng.integers(1, 9)), 1 + i % 3,
                              activation=("tanh", "identity")[(i // 3) % 2])
            mask = (MaskSpec.full(), MaskSpec.causal())[i % 2]
            p = make_params(cfg, rng)
            n = int(rng.integers(1, 7))
            X = rng.standard_normal((cfg.d, n))
            passed_one, errs = check_gradients(X, mask, cfg, p, rng.standard_normal((cfg.d, n)),
                                               eps=1e-6, rtol=1e-5)
            ok += passed_one
            worst = max(worst, max(errs.values()))
    passed = ok == 20 and t.seconds < 30
    report(5, "gradient verification", passed, f"{ok}/20 within rel 1e-5, worst {worst:.1e}",
           t.seconds)
    assert passed


@pytest.mark.slow
def test_6_scaling_exponents():
    cfg = MixerConfig(64, 128, 2)
    with Timer() as t:
        pom = bench.run_bench([2 ** e for e in range(8, 15)], "pom", cfg, repeats=7, seed=0)
        mha = bench.run_bench([2 ** e for e in range(8, 13)], "mha", cfg, repeats=7, seed=0)
    s_pom, s_mha = bench.records_slope(pom), bench.records_slope(mha)
    passed = 0.85 <= s_pom <= 1.15 and 1.7 <= s_mha <= 2.3 and t.seconds < 300
    report(6, "scaling exponents", passed,
           f"pom slope {s_pom:.3f} in [0.85,1.15], mha slope {s_mha:.3f} in [1.7,2.3]", t.seconds)
    assert passed


def test_7_contextual_probe():
    cfg, params = checks.probe_config()
    rng = np.random.default_rng(107)
    full = MaskSpec.full()
    failures = 0
    with Timer() as t:
        for _ in range(1000):
            n = int(rng.integers(2, 17))
            X = rng.uniform(0.1, 1.0, (1, n))
            X2 = X.copy()
            X2[0, rng.integers(n)] = rng.uniform(0.1, 1.0)
            outs = np.concatenate([pom_forward(X, full, cfg, params).ravel(),
                                   pom_forward(X2, full, cfg, params).ravel()])
            gaps = np.abs(outs[:, None] - outs[None, :])[~np.eye(2 * n, dtype=bool)]
            failures += gaps.min() <= 1e-9
    passed = failures == 0 and t.seconds < 10
    report(7, "contextual-mapping probe", passed, f"{1000 - failures}/1000 pairs pairwise distinct",
           t.seconds)
    assert passed


def test_8_residual_identity():
    rng = np.random.default_rng(108)
    ok = 0
    with Timer() as t:
        for _ in range(20):
            cfg = MixerConfig(int(rng.integers(1, 9)), int(rng.integers(1, 17)), int(rng.integers(1, 4)))
            layer = PolyMorpherParams.init(cfg, rng)
            m, ff = layer.mixer, layer.ff
            dead = PolyMorpherParams(
                cfg, MixerParams(m.W_h, m.W_s, np.zeros_like(m.W_o), m.alpha),
                FeedForwardParams(ff.W1, ff.b1, np.zeros_like(ff.W2), np.zeros_like(ff.b2)))
            X = rng.standard_normal((cfg.d, int(rng.integers(1, 17))))
            ok += np.array_equal(polymorpher_forward(X, dead), X)
    passed = ok == 20 and t.seconds < 1
    report(8, "residual identity", passed, f"{ok}/20 bitwise identical", t.seconds)
    assert passed


def test_9_fixture_roundtrip():
    paths = fixtures.shipped_fixtures()
    with Timer() as t:
        reports = [fixtures.fixture_roundtrip(p) for p in paths]
    worst = max(r.max_abs_diff for r in reports)
    passed = bool(reports) and all(r.passed for r in reports) and t.seconds < 5
    report(9, "fixture round-trip", passed,
           f"{sum(r.passed for r in reports)}/{len(paths)} fixtures, worst diff {worst:.1e}",
           t.seconds)
    assert passed
