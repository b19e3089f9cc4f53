"""Command-line interface: ``maxentrng {gen,test,bench,selftest}``.

Exit status: 0 success, 1 a test or check failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from typing import Sequence

import numpy as np

from . import stats
from .baselines import BaselineState, BoxMullerState
from .bench import METHODS, run_bench
from .chi2 import Chi2Method
from .errors import ConfigurationError, InvalidParameterError
from .generator import Generator, GeneratorConfig, Mixing, TransformFamily
from .selftest import FAULTS, run_checks

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

GEN_METHODS = ("wallace4", "rotation", "polar", "boxmuller")
CHI2_NAMES = {"sqrt": Chi2Method.SQRT_SHIFT, "wh": Chi2Method.WILSON_HILFERTY, "cubic": Chi2Method.CUBIC_A}
MIXING_NAMES = {"stride": Mixing.STRIDE_TRANSPOSE, "affine": Mixing.AFFINE}
TESTS = ("moments", "sqcorr", "crosspool", "sumsq", "rare")
_CHUNK = 1 << 16

MIN_SAMPLES = 10_000
MIN_TRIALS = 10_000
MIN_PAIRS = 1_000
MIN_POOLS = 1_000


class UsageError(Exception):
    pass


def _pool_flags_used(args) -> list[str]:
    used = []
    for flag, attr in (("--pool-size", "pool_size"), ("--chi2", "chi2"),
                       ("--mixing", "mixing"), ("--discard", "discard")):
        if getattr(args, attr) is not None:
            used.append(flag)
    return used


def make_stream(method: str, seed: int = 0, pool_size: int | None = None, chi2: str | None = None,
                mixing: str | None = None, discard: int | None = None, mean: float = 0.0,
                sigma: float = 1.0):
    """Return ``(fill_into, affine)``; ``affine`` says whether mean/sigma still
    need applying to the filled values."""
    if method in ("polar", "boxmuller"):
        state = BaselineState(seed) if method == "polar" else BoxMullerState(seed)
        return state.fill_into, (mean != 0.0 or sigma != 1.0)
    cfg = GeneratorConfig(
        pool_size=1024 if pool_size is None else pool_size,
        transform_family=TransformFamily.WALLACE4 if method == "wallace4" else TransformFamily.ROTATION,
        mixing=MIXING_NAMES[mixing or "stride"],
        chi2_method=CHI2_NAMES[chi2 or "cubic"],
        discard_every=1 if discard is None else discard,
        out_mean=mean,
        out_sigma=sigma,
        seed=seed,
    )
    return Generator(cfg).fill_into, False


def _write_values(fh, values: np.ndarray, fmt: str) -> None:
    if fmt == "f64le":
        fh.write(values.astype("<f8", copy=False).tobytes())
    else:
        fh.write("".join(f"{v:.17g}\n" for v in values.tolist()).encode("ascii"))


def cmd_gen(args) -> int:
    if args.method in ("polar", "boxmuller"):
        used = _pool_flags_used(args)
        if used:
            raise UsageError(f"{used[0]} is only valid with --method wallace4 or rotation")
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    fill_into, affine = make_stream(args.method, args.seed, args.pool_size, args.chi2, args.mixing,
                                    args.discard, args.mean, args.sigma)
    out = sys.stdout.buffer if args.out == "-" else open(args.out, "wb")
    try:
        buf = np.empty(_CHUNK, dtype=np.float64)
        remaining = args.n
        while remaining > 0:
            chunk = buf[: min(_CHUNK, remaining)]
            fill_into(chunk)
            vals = chunk * args.sigma + args.mean if affine else chunk
            _write_values(out, vals, args.format)
            remaining -= chunk.shape[0]
        out.flush()
    finally:
        if out is not sys.stdout.buffer:
            out.close()
    return EXIT_OK


def _read_f64le(path: str) -> np.ndarray:
    data = sys.stdin.buffer.read() if path == "-" else open(path, "rb").read()
    if len(data) % 8:
        raise UsageError(f"--input has {len(data)} bytes, not a multiple of 8")
    return np.frombuffer(data, dtype="<f8").astype(np.float64)


def cmd_test(args) -> int:
    for flag, value, minimum in (("--samples", args.samples, MIN_SAMPLES), ("--trials", args.trials, MIN_TRIALS),
                                 ("--pairs", args.pairs, MIN_PAIRS), ("--pools", args.pools, MIN_POOLS)):
        if value < minimum:
            raise UsageError(f"{flag} must be >= {minimum}, got {value}")
    if args.tests:
        selected = [t.strip() for t in args.tests.split(",") if t.strip()]
        bad = [t for t in selected if t not in TESTS]
        if bad:
            raise UsageError(f"--tests: unknown test(s) {bad}; choose from {','.join(TESTS)}")
    elif args.input is not None:
        selected = ["moments"]
    else:
        selected = list(TESTS)
    if args.fixed_transform and "crosspool" not in selected:
        selected.append("crosspool")

    reports: list[stats.TestReport] = []
    if "moments" in selected:
        if args.input is not None:
            data = _read_f64le(args.input)
            if data.shape[0] < MIN_SAMPLES:
                raise UsageError(f"--input holds {data.shape[0]} values; need >= {MIN_SAMPLES}")
            label = "moments.input"
        else:
            fill_into, _ = make_stream(args.method, args.seed, args.pool_size)
            data = np.empty(args.samples)
            fill_into(data)
            label = f"moments.{args.method}"
        reports += stats.moment_reports(data, label)
    if "sqcorr" in selected:
        reports.append(stats.squared_correlation_model(args.trials, seed=args.seed))
    if "crosspool" in selected:
        cfg = GeneratorConfig(pool_size=args.pool_size or 64, seed=args.seed)
        reports += stats.cross_pool_correlation(cfg, args.pairs, fixed_transform=args.fixed_transform,
                                                against_null=args.fixed_transform)
    if "sumsq" in selected:
        cfg = GeneratorConfig(pool_size=args.pool_size or 1024, seed=args.seed)
        reports += stats.pool_sum_squares_test(cfg, args.pools)
    if "rare" in selected:
        n = args.pool_size or 64
        null = BaselineState(args.seed).fill(10_000_000)
        reports.append(stats.rare_event_adjacency_stream(null, 64, 3.5, "rare.polar_null"))
        reports.append(stats.rare_event_adjacency(GeneratorConfig(pool_size=n, seed=args.seed), 10_000 * n))

    crosspool = [r for r in reports if r.name.startswith("crosspool.")]
    shown = [r for r in reports if not r.name.startswith("crosspool.")]
    if crosspool:
        # thousands of probes: print the summary line plus any failures
        worst = max(crosspool, key=lambda r: abs(r.z_score))
        failures = [r for r in crosspool if not r.ok]
        shown += failures[:20] if failures else [worst]
    for r in shown:
        print(stats.format_kv(r) if args.format == "kv" else stats.format_text(r))
    if crosspool:
        nfail = sum(not r.ok for r in crosspool)
        print(f"# crosspool: {len(crosspool)} probes, {nfail} failing, max |z| = "
              f"{max(abs(r.z_score) for r in crosspool):.2f}")
    passed = stats.suite_passed(reports)
    print(f"# suite {'PASS' if passed else 'FAIL'}: {sum(r.ok for r in reports)}/{len(reports)} as expected")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_bench(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"--methods: unknown method(s) {bad}; choose from {','.join(METHODS)}")
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        results = run_bench(methods, args.n, args.repeats, args.seed)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.format == "json":
        print(json.dumps([r.__dict__ | {"runs": list(r.runs)} for r in results], indent=2))
    elif args.format == "kv":
        for r in results:
            print(f"name={r.generator_name},samples={r.samples},elapsed={r.elapsed!r},"
                  f"throughput={r.throughput!r},relative={r.relative!r},repeats={r.repeats}")
    else:
        print(f"{'generator':<10s} {'samples':>11s} {'median s':>9s} {'Msamples/s':>11s} {'relative':>8s}")
        for r in results:
            print(f"{r.generator_name:<10s} {r.samples:>11d} {r.elapsed:>9.4f} "
                  f"{r.throughput / 1e6:>11.2f} {r.relative:>8.3f}")
        print(f"# median of {results[0].repeats} runs; relative = throughput / uniform throughput")
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_checks(args.inject_fault or ())
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name:<40s} {r.detail} ({r.seconds * 1e3:.0f} ms)")
    ok = all(r.passed for r in results)
    failed = [r.name for r in results if not r.passed]
    print(f"# {len(results)} checks, {len(failed)} failed" + (f": {', '.join(failed)}" if failed else ""))
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxentrng", description="Maximum-entropy normal generator toolkit")
    sub = p.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gen", help="write a stream of variates")
    g.add_argument("--method", choices=GEN_METHODS, default="wallace4")
    g.add_argument("--n", type=int, default=1000, help="number of values to write")
    g.add_argument("--pool-size", type=int, default=None)
    g.add_argument("--chi2", choices=tuple(CHI2_NAMES), default=None)
    g.add_argument("--mixing", choices=tuple(MIXING_NAMES), default=None)
    g.add_argument("--discard", type=int, default=None, help="emit only every k-th pool")
    g.add_argument("--mean", type=float, default=0.0)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=("text", "f64le"), default="text")
    g.add_argument("--out", default="-", help="output path, '-' for stdout")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("test", help="run the statistical suite")
    t.add_argument("--tests", default=None, help=f"comma list from {','.join(TESTS)}")
    t.add_argument("--method", choices=GEN_METHODS, default="wallace4", help="source for moments")
    t.add_argument("--input", default=None, help="f64le file ('-' = stdin) to test instead of generating")
    t.add_argument("--samples", type=int, default=1_000_000)
    t.add_argument("--trials", type=int, default=1_000_000)
    t.add_argument("--pairs", type=int, default=100_000)
    t.add_argument("--pools", type=int, default=10_000)
    t.add_argument("--pool-size", type=int, default=None)
    t.add_argument("--seed", type=int, default=12345)
    t.add_argument("--fixed-transform", action="store_true",
                   help="diagnostic: fixed transform per pass; correlation test is expected to FAIL")
    t.add_argument("--format", choices=("text", "kv"), default="text")
    t.set_defaults(func=cmd_test)

    b = sub.add_parser("bench", help="throughput table")
    b.add_argument("--methods", default=",".join(METHODS))
    b.add_argument("--n", type=int, default=10_000_000, help="samples per method per run")
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--format", choices=("text", "kv", "json"), default="text")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("selftest", help="fast invariant checks")
    s.add_argument("--inject-fault", action="append", choices=FAULTS, help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog} {args.verb}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, InvalidParameterError) as exc:
        print(f"{parser.prog} {args.verb}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
