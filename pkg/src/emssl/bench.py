"""Timing studies for the sampling phase.

Four strategies differ only in how the work is scheduled:

    none           per-sample inference, sequential forward model
    batch-only     batched inference,    sequential forward model
    parallel-only  per-sample inference, forward model on a worker pool
    both           batched inference,    forward model on a worker pool

All four must produce bitwise-identical sample sets before any time is
reported.
"""

import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import batch_infer, parallel_fm, sequential_fm

STRATEGIES = ("none", "batch-only", "parallel-only", "both")


class StrategyMismatch(RuntimeError):
    pass


@dataclass
class StrategyTiming:
    strategy: str
    median_s: float
    min_s: float
    max_s: float
    raw_s: list
    n_goals: int
    infer_batch: int
    workers: int
    layer_dims: list


@dataclass
class SweepPoint:
    x: int
    median_s: float
    raw_s: list = field(default_factory=list)


def _round_s(ns):
    # full precision here; CSV output rounds to milliseconds
    return ns / 1e9


def run_strategy(strategy, mlp, normalizers, chain, goals, infer_batch, workers, pool=None):
    batched = strategy in ("batch-only", "both")
    pooled = strategy in ("parallel-only", "both")
    Q = batch_infer(mlp, normalizers, goals, infer_batch if batched else 1)
    P = parallel_fm(chain, Q, workers, pool) if pooled else sequential_fm(chain, Q)
    return Q, P


def _time_call(fn, repeats):
    fn()  # warm-up: compilation, first-touch allocation
    raw = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        fn()
        raw.append(time.perf_counter_ns() - t0)
    return raw


def _same(a, b):
    return a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()


def time_strategies(mlp, normalizers, chain, goals, infer_batch, workers, repeats=3):
    if repeats < 3:
        raise ValueError("need at least 3 repeats for a median")
    goals = np.asarray(goals, dtype=np.float64)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outputs = {s: run_strategy(s, mlp, normalizers, chain, goals, infer_batch, workers, pool)
                   for s in STRATEGIES}
        ref = outputs["none"]
        for s in STRATEGIES[1:]:
            if not _same(ref, outputs[s]):
                raise StrategyMismatch(f"strategy {s!r} output differs from the unaccelerated run")
        timings = []
        for s in STRATEGIES:
            raw = _time_call(lambda: run_strategy(s, mlp, normalizers, chain, goals,
                                                  infer_batch, workers, pool), repeats)
            timings.append(StrategyTiming(s, _round_s(statistics.median(raw)), _round_s(min(raw)),
                                          _round_s(max(raw)), [_round_s(r) for r in raw],
                                          len(goals), infer_batch, workers, list(mlp.layer_dims)))
    return timings


def sweep_batch(mlp, normalizers, chain, goals, sizes, workers, repeats=3):
    """Both-strategy round time per inference batch size."""
    if not sizes:
        raise ValueError("no batch sizes given")
    points = []
    ref = None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for size in sizes:
            out = run_strategy("both", mlp, normalizers, chain, goals, size, workers, pool)
            if ref is None:
                ref = out
            elif not _same(ref, out):
                raise StrategyMismatch(f"batch size {size} changed the sampled data")
            raw = _time_call(lambda: run_strategy("both", mlp, normalizers, chain, goals, size,
                                                  workers, pool), repeats)
            points.append(SweepPoint(int(size), _round_s(statistics.median(raw)),
                                     [_round_s(r) for r in raw]))
    return points


def sweep_threads(mlp, normalizers, chain, goals, counts, infer_batch, repeats=3):
    """Both-strategy round time per worker count; returns ``(points, core_count)``."""
    if not counts:
        raise ValueError("no thread counts given")
    points = []
    ref = None
    for k in counts:
        with ThreadPoolExecutor(max_workers=k) as pool:
            out = run_strategy("both", mlp, normalizers, chain, goals, infer_batch, k, pool)
            if ref is None:
                ref = out
            elif not _same(ref, out):
                raise StrategyMismatch(f"{k} workers changed the sampled data")
            raw = _time_call(lambda: run_strategy("both", mlp, normalizers, chain, goals,
                                                  infer_batch, k, pool), repeats)
        points.append(SweepPoint(int(k), _round_s(statistics.median(raw)),
                                 [_round_s(r) for r in raw]))
    return points, os.cpu_count() or 1


def write_strategy_csv(path, timings):
    with open(path, "w") as fh:
        fh.write("strategy,median_s,min_s,max_s,raw_s,n_goals,infer_batch,workers\n")
        for t in timings:
            raw = ";".join(f"{r:.3f}" for r in t.raw_s)
            fh.write(f"{t.strategy},{t.median_s:.3f},{t.min_s:.3f},{t.max_s:.3f},{raw},"
                     f"{t.n_goals},{t.infer_batch},{t.workers}\n")


def write_sweep_csv(path, points, x_name="x"):
    with open(path, "w") as fh:
        fh.write(f"{x_name},median_s,raw_s\n")
        for p in points:
            fh.write(f"{p.x},{p.median_s:.3f},{';'.join(f'{r:.3f}' for r in p.raw_s)}\n")
