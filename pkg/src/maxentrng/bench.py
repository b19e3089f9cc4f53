"""Throughput harness. Each method fills a reusable buffer until ``samples``
values are produced; the uniform helper is always timed as the reference row."""
from __future__ import annotations

import statistics
import time
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .baselines import BaselineState, BoxMullerState, new_uniform
from .generator import Generator, GeneratorConfig, TransformFamily

__all__ = ["BenchResult", "METHODS", "make_filler", "time_method", "run_bench", "MIN_RELIABLE"]

METHODS = ("uniform", "wallace4", "rotation", "polar", "boxmuller")
MIN_RELIABLE = 1_000_000
_CHUNK = 1 << 16


@dataclass(frozen=True)
class BenchResult:
    generator_name: str
    samples: int
    elapsed: float
    throughput: float
    relative: float
    repeats: int = 1
    runs: tuple[float, ...] = ()


def make_filler(method: str, seed: int = 0) -> Callable[[np.ndarray], None]:
    if method == "uniform":
        return new_uniform(seed).fill
    if method == "wallace4":
        return Generator(GeneratorConfig(seed=seed)).fill_into
    if method == "rotation":
        return Generator(GeneratorConfig(seed=seed, transform_family=TransformFamily.ROTATION)).fill_into
    if method == "polar":
        return BaselineState(seed).fill_into
    if method == "boxmuller":
        return BoxMullerState(seed).fill_into
    raise ValueError(f"unknown method {method!r}")


def time_method(method: str, samples: int, seed: int = 0) -> float:
    fill = make_filler(method, seed)
    buf = np.empty(_CHUNK, dtype=np.float64)
    fill(buf)  # warm-up: touch buffers, fault pages
    full, rest = divmod(samples, _CHUNK)
    tail = buf[:rest]
    t0 = time.perf_counter()
    for _ in range(full):
        fill(buf)
    if rest:
        fill(tail)
    return time.perf_counter() - t0


def run_bench(methods: Sequence[str] = METHODS, samples: int = 10_000_000, repeats: int = 5,
              seed: int = 0) -> list[BenchResult]:
    """Median-of-``repeats`` wall time per method, run sequentially."""
    if samples < MIN_RELIABLE:
        widened = max(repeats, 11)
        warnings.warn(f"samples={samples} < {MIN_RELIABLE} is too small to time reliably; "
                      f"repeats widened {repeats} -> {widened}")
        repeats = widened
    order = ["uniform"] + [m for m in methods if m != "uniform"]
    medians: dict[str, tuple[float, tuple[float, ...]]] = {}
    for m in order:
        runs = tuple(time_method(m, samples, seed) for _ in range(repeats))
        medians[m] = (statistics.median(runs), runs)
    base = samples / medians["uniform"][0]
    results = []
    for m in order:
        elapsed, runs = medians[m]
        tp = samples / elapsed
        results.append(BenchResult(m, samples, elapsed, tp, tp / base, repeats, runs))
    return results
