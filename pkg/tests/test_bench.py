import math

import numpy as np
import pytest

from polymixer import bench
from polymixer.mixer import MixerConfig


CFG = MixerConfig(8, 16, 2)


def test_single_point_record():
    (rec,) = bench.run_bench([32], "pom", CFG, repeats=3, seed=1)
    assert (rec.variant, rec.n, rec.repeats, rec.seed, rec.precision) == ("pom", 32, 3, 1, 64)
    assert rec.wall_seconds > 0 and not rec.skipped


def test_inputs_are_deterministic():
    assert np.array_equal(bench.make_input(64, 8, 3), bench.make_input(64, 8, 3))
    assert not np.array_equal(bench.make_input(64, 8, 3), bench.make_input(64, 8, 4))


@pytest.mark.parametrize("kw", [dict(ns=[64, 32]), dict(ns=[32], repeats=2),
                                dict(ns=[32], precision=16)])
def test_argument_validation(kw):
    ns = kw.pop("ns")
    with pytest.raises(ValueError):
        bench.run_bench(ns, "pom", CFG, **kw)


def test_unknown_variant():
    with pytest.raises(ValueError):
        bench.run_bench([8], "rnn", CFG)


def test_timeout_skips_rest():
    recs = bench.run_bench([16, 32, 64], "mha", CFG, repeats=3, timeout=0.0)
    assert [r.status for r in recs] == ["timeout"] * 3
    assert all(math.isnan(r.wall_seconds) for r in recs)


def test_oom_is_recorded(monkeypatch):
    real = bench._forward_fn

    def fake(*a, **k):
        fn = real(*a, **k)

        def run(X):
            if X.shape[1] > 16:
                raise MemoryError
            return fn(X)
        return run

    monkeypatch.setattr(bench, "_forward_fn", fake)
    recs = bench.run_bench([16, 32], "mha", CFG, repeats=3)
    assert [r.status for r in recs] == ["ok", "oom"]


def test_float32():
    (rec,) = bench.run_bench([32], "mha", CFG, repeats=3, precision=32, heads=2)
    assert rec.precision == 32


def test_csv_layout(tmp_path):
    recs = bench.run_bench([16, 32], "pom", CFG, repeats=3)
    path = bench.write_csv(recs, tmp_path / "out.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "variant,n,d,D,k,repeats,median_seconds"
    rows = bench.read_csv(path)
    assert [r["n"] for r in rows] == ["16", "32"]
    assert float(rows[0]["median_seconds"]) == recs[0].wall_seconds


def test_loglog_slope_exact():
    ns = [2 ** i for i in range(4, 10)]
    assert bench.loglog_slope(ns, [3e-6 * n ** 1.5 for n in ns]) == pytest.approx(1.5)


def test_parse_lengths():
    assert bench.parse_lengths("256,512") == [256, 512]
    assert bench.parse_lengths("2^8..2^10") == [256, 512, 1024]
    assert bench.parse_lengths("256..1024") == [256, 512, 1024]
