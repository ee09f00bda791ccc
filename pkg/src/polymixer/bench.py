"""Wall-clock sweeps over sequence length for the mixer and the attention
baseline, with CSV output and log-log slope fitting.

Only the scaling exponent is meaningful; absolute numbers depend entirely on
the host. Points run one after another in the calling thread.
"""
from __future__ import annotations

import csv
import logging
import math
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from . import numerics as nm
from .baseline import AttentionParams, mha_forward
from .mixer import MaskSpec, MixerConfig, MixerParams, pom_forward

log = logging.getLogger(__name__)

Variant = Literal["pom", "mha"]
CSV_COLUMNS = ("variant", "n", "d", "D", "k", "repeats", "median_seconds")
DTYPES = {64: np.float64, 32: np.float32}


@dataclass(frozen=True)
class BenchRecord:
    variant: str
    n: int
    wall_seconds: float  # median over repeats; nan when skipped
    repeats: int
    precision: int
    seed: int
    d: int = 0
    D: int = 0
    k: int = 0
    status: str = "ok"  # ok | oom | timeout

    @property
    def skipped(self) -> bool:
        return self.status != "ok"

    def csv_row(self) -> dict:
        return {
            "variant": self.variant,
            "n": self.n,
            "d": self.d,
            "D": self.D,
            "k": self.k,
            "repeats": self.repeats,
            "median_seconds": "nan" if self.skipped else repr(self.wall_seconds),
        }


def make_input(n: int, d: int, seed: int, dtype=np.float64) -> np.ndarray:
    """Benchmark input for length ``n``; depends only on ``(n, d, seed)``."""
    rng = np.random.default_rng([seed, n])
    return rng.standard_normal((d, n)).astype(dtype)


def _forward_fn(variant: Variant, cfg: MixerConfig, seed: int, dtype, heads: int):
    if variant == "pom":
        params = MixerParams.init(cfg, seed, dtype=dtype)
        mask = MaskSpec.full()
        return lambda X: pom_forward(X, mask, cfg, params)
    if variant == "mha":
        params = AttentionParams.init(cfg.d, heads, seed, dtype=dtype)
        return lambda X: mha_forward(X, params)
    raise ValueError(f"unknown variant {variant!r}")


def run_bench(ns: Sequence[int], variant: Variant, cfg: MixerConfig, repeats: int = 5,
              seed: int = 0, precision: int = 64, heads: int = 1,
              timeout: float | None = None, backend: str = "blas") -> list[BenchRecord]:
    """Median wall time of one forward pass per sequence length.

    A warm-up call precedes each point and is discarded. A point whose
    warm-up raises ``MemoryError`` is recorded as ``oom``; when the warm-up
    alone suggests ``repeats`` runs would exceed ``timeout`` seconds the
    point, and every longer one, is recorded as ``timeout``.
    """
    ns = list(ns)
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("sequence lengths must be strictly ascending")
    if repeats < 3:
        raise ValueError("need at least 3 repeats")
    if precision not in DTYPES:
        raise ValueError(f"precision must be 64 or 32, got {precision}")
    dtype = DTYPES[precision]
    fn = _forward_fn(variant, cfg, seed, dtype, heads)
    common = dict(variant=variant, repeats=repeats, precision=precision, seed=seed,
                  d=cfg.d, D=cfg.D, k=cfg.k)
    records = []
    timed_out = False
    with nm.backend(backend):
        for n in ns:
            if timed_out:
                records.append(BenchRecord(n=n, wall_seconds=math.nan, status="timeout", **common))
                continue
            X = make_input(n, cfg.d, seed, dtype)
            try:
                t0 = time.perf_counter()
                fn(X)
                warm = time.perf_counter() - t0
            except MemoryError:
                log.warning("%s n=%d: out of memory, skipped", variant, n)
                records.append(BenchRecord(n=n, wall_seconds=math.nan, status="oom", **common))
                continue
            if timeout is not None and warm * repeats > timeout:
                log.warning("%s n=%d: over the %.1fs budget, skipped", variant, n, timeout)
                timed_out = True
                records.append(BenchRecord(n=n, wall_seconds=math.nan, status="timeout", **common))
                continue
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                fn(X)
                times.append(time.perf_counter() - t0)
            median = statistics.median(times)
            log.info("%s n=%d: %.3es", variant, n, median)
            records.append(BenchRecord(n=n, wall_seconds=median, **common))
    return records


def loglog_slope(ns: Iterable[float], seconds: Iterable[float]) -> float:
    """Least-squares slope of log(seconds) against log(n)."""
    x = np.log(np.asarray(list(ns), dtype=float))
    y = np.log(np.asarray(list(seconds), dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def records_slope(records: Sequence[BenchRecord]) -> float:
    ok = [r for r in records if not r.skipped]
    return loglog_slope([r.n for r in ok], [r.wall_seconds for r in ok])


def write_csv(records: Sequence[BenchRecord], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow(r.csv_row())
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def parse_lengths(text: str) -> list[int]:
    """``"256,512,1024"`` or a power-of-two range ``"2^8..2^14"``."""
    text = text.strip()
    if ".." in text:
        lo, hi = (int(part.split("^")[1]) if "^" in part else int(math.log2(int(part)))
                  for part in text.split(".."))
        return [2 ** e for e in range(lo, hi + 1)]
    return [int(tok) for tok in text.split(",") if tok.strip()]
