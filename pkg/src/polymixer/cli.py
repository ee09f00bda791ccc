"""``pombench``: scaling sweeps, cost-model queries, the property suite and
golden fixtures from the command line."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench, checks, cost, fixtures
from .errors import FixtureSchemaError, ToleranceBreach
from .mixer import MaskSpec, MixerConfig


def _cmd_bench(args) -> int:
    cfg = MixerConfig(args.d, args.D, args.k)
    records = bench.run_bench(bench.parse_lengths(args.n), args.variant, cfg,
                              repeats=args.repeats, seed=args.seed, precision=args.precision,
                              heads=args.heads, timeout=args.timeout)
    out = bench.write_csv(records, args.out)
    print(f"wrote {out}")
    ok = [r for r in records if not r.skipped]
    if len(ok) >= 2:
        print(f"log-log slope: {bench.records_slope(records):.3f}")
    if not args.no_plot:
        from .plotting import plot_scaling

        fig = plot_scaling(records, Path(args.plot) if args.plot else out.with_suffix(".png"),
                           title=f"{args.variant}, d={args.d} D={args.D} k={args.k}")
        print(f"wrote {fig}")
    return 0


def _cmd_crossover(args) -> int:
    c = cost.crossover_n(args.d, args.D, args.k)
    report = cost.cost_report(c, args.d, args.D, args.k)
    print(c)
    print(f"pom_mults={report.pom_mults} mha_mults={report.mha_mults} at n={c}")
    if args.plot:
        from .plotting import plot_cost_model

        print(f"wrote {plot_cost_model(args.d, args.D, args.k, args.plot)}")
    return 0


def _cmd_check(args) -> int:
    results = checks.run_all()
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def _parse_mask(text: str | None) -> MaskSpec | None:
    if text is None:
        return None
    if text.startswith("block_causal"):
        _, _, K = text.partition(":")
        return MaskSpec.block_causal(int(K or 4))
    return MaskSpec(text)


def _cmd_fixture(args) -> int:
    if args.action == "gen":
        doc = fixtures.generate(args.kind, args.seed, mask=_parse_mask(args.mask))
        print(f"wrote {fixtures.write(doc, args.path)}")
        return 0
    try:
        report = fixtures.fixture_roundtrip(args.path)
    except FixtureSchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except ToleranceBreach as exc:
        print(f"tolerance breach: {exc}", file=sys.stderr)
        return 3
    print(f"ok {report.kind} max_abs_diff={report.max_abs_diff:.3e} "
          f"tolerance={report.tolerance:.1e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pombench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="time forward passes over a sweep of lengths")
    p.add_argument("--variant", choices=["pom", "mha"], required=True)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--D", type=int, default=128)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n", default="256,512,1024,2048,4096",
                   help="comma list, or a power-of-two range like 2^8..2^14")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--precision", type=int, choices=[64, 32], default=64)
    p.add_argument("--heads", type=int, default=1, help="attention heads (mha only)")
    p.add_argument("--timeout", type=float, default=None,
                   help="per-point budget in seconds; longer points are skipped")
    p.add_argument("--plot", default=None, help="figure path (default: CSV path with .png)")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("crossover", help="length from which PoM needs fewer multiplications")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--plot", default=None, help="optional figure of both cost curves")
    p.set_defaults(func=_cmd_crossover)

    p = sub.add_parser("check", help="run the randomised property suite")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("fixture", help="generate or verify a golden fixture")
    p.add_argument("action", choices=["gen", "verify"])
    p.add_argument("--path", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=list(fixtures.KINDS), default="mixer")
    p.add_argument("--mask", default=None,
                   help="full | causal | block_causal:K (default depends on kind)")
    p.set_defaults(func=_cmd_fixture)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
