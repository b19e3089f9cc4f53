"""Compare the compiled core with the pure-Python fallback, kernel by kernel.

Run ``python3 benchmarks/bench_backends.py [--n N]``. Prints ns/value for
each backend and the speedup. Both backends produce identical streams, so
the comparison is like for like.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from maxentrng import _backend, _pycore, baselines, generator
from maxentrng.generator import Generator, GeneratorConfig, Mixing, TransformFamily


def _gen_filler(family, mixing):
    def make(seed):
        return Generator(GeneratorConfig(seed=seed, transform_family=family, mixing=mixing)).fill_into
    return make


KERNELS = {
    "uniform": lambda seed: baselines.new_uniform(seed).fill,
    "polar": lambda seed: baselines.BaselineState(seed).fill_into,
    "boxmuller": lambda seed: baselines.BoxMullerState(seed).fill_into,
    "wallace4/stride": _gen_filler(TransformFamily.WALLACE4, Mixing.STRIDE_TRANSPOSE),
    "wallace4/affine": _gen_filler(TransformFamily.WALLACE4, Mixing.AFFINE),
    "rotation/stride": _gen_filler(TransformFamily.ROTATION, Mixing.STRIDE_TRANSPOSE),
}


def _use(core) -> None:
    generator.core = core
    baselines.core = core


def time_kernel(make, n: int, repeats: int) -> float:
    runs = []
    for r in range(repeats):
        fill = make(r)
        buf = np.empty(n)
        fill(buf[:1024])
        t0 = time.perf_counter()
        fill(buf)
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs) / n * 1e9


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2_000_000, help="values per compiled run")
    ap.add_argument("--pure-n", type=int, default=100_000, help="values per fallback run")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    if not _backend.compiled_available():
        raise SystemExit("compiled core not built; nothing to compare")
    from maxentrng import _core

    print(f"{'kernel':<18s} {'compiled ns':>12s} {'python ns':>12s} {'speedup':>9s}")
    for name, make in KERNELS.items():
        _use(_core)
        fast = time_kernel(make, args.n, args.repeats)
        _use(_pycore)
        slow = time_kernel(make, args.pure_n, args.repeats)
        print(f"{name:<18s} {fast:>12.2f} {slow:>12.2f} {slow / fast:>8.1f}x")
    _use(_core)


if __name__ == "__main__":
    main()
