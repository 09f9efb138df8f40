"""Wall-clock timing of the contraction and SVD kernels."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from . import dense as D
from . import linalg as L
from .core import Context

OPS = ("contract", "svd")


@dataclass
class BenchRow:
    size: int
    mean_us: float
    min_us: float
    max_us: float


def _operands(ctx: Context, size: int, seed: int):
    rng = np.random.Generator(np.random.MT19937(seed))

    def gen():
        return rng.uniform(-1.0, 1.0)

    return D.random(ctx, (size, size), gen), D.random(ctx, (size, size), gen)


def time_kernel(ctx: Context, op: str, size: int, repeat: int, seed: int = 12345) -> list[float]:
    if op not in OPS:
        raise ValueError(f"unknown op {op!r}")
    a, b = _operands(ctx, size, seed)
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter_ns()
        if op == "contract":
            L.contract(ctx, a, "ij", b, "jk", "ik")
        else:
            L.svd(ctx, a, 1)
        samples.append((time.perf_counter_ns() - t0) / 1000.0)
    return samples


def run_bench(ctx: Context, op: str, sizes, repeat: int, seed: int = 12345) -> list[BenchRow]:
    rows = []
    with ctx.thread_scope():
        for n in sizes:
            s = time_kernel(ctx, op, n, repeat, seed)
            rows.append(BenchRow(n, statistics.fmean(s), min(s), max(s)))
    return rows
