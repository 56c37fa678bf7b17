"""Benchmark harness for the coherence path (two transforms + coherence).

Times the full pair cost cwt + cwt + wavelet_coherence over seeded uniform
noise at a fixed analysis band, sweeping window length and scale count.
Because every FFT stage pads to the next power of two, runtime is expected
to be near-flat within a power-of-two plateau of n and to jump across the
boundary.
"""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from . import coherence as coh
from . import wavelet

CSV_HEADER = ("n", "q", "mean_s", "stddev_s", "reps")

DEFAULT_SAMPLE_RATE = 8000.0
DEFAULT_FMIN = 20.0
DEFAULT_FMAX = 2000.0


@dataclass(frozen=True)
class BenchRow:
    n: int
    q: int
    mean_s: float
    stddev_s: float
    reps: int


def benchmark_coherence(
    n_list: Sequence[int],
    q_list: Sequence[int],
    repetitions: int,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE,
    fmin_hz: float = DEFAULT_FMIN,
    fmax_hz: float = DEFAULT_FMAX,
    seed: int = 0,
) -> list[BenchRow]:
    """Wall-clock timing per (n, q); one warm-up iteration is excluded.

    The analysis band is held fixed across n so rows are comparable; noise
    inputs are seeded uniform in [-1, 1).
    """
    if not n_list or not q_list:
        raise ValueError("n_list and q_list must be non-empty")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    rows: list[BenchRow] = []
    for q in q_list:
        grid = wavelet.build_scale_grid(fmin_hz, fmax_hz, q, sample_rate_hz)
        transform = wavelet.MorletTransform(grid)
        for n in n_list:
            rng = np.random.default_rng(seed)
            x = rng.uniform(-1.0, 1.0, n)
            y = rng.uniform(-1.0, 1.0, n)
            spec = coh.SmoothingSpec()

            def one_pass() -> None:
                wi = transform.transform(x)
                wj = transform.transform(y)
                coh.wavelet_coherence(wi, wj, spec)

            one_pass()  # warm-up builds responses and smoothing plans
            times = []
            for _ in range(repetitions):
                t0 = time.perf_counter()
                one_pass()
                times.append(time.perf_counter() - t0)
            rows.append(BenchRow(
                n=n,
                q=q,
                mean_s=statistics.fmean(times),
                stddev_s=statistics.pstdev(times) if len(times) > 1 else 0.0,
                reps=repetitions,
            ))
    return rows


def write_csv(rows: Sequence[BenchRow], out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r.n, r.q, f"{r.mean_s:.9f}", f"{r.stddev_s:.9f}", r.reps])


def write_csv_path(rows: Sequence[BenchRow], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        write_csv(rows, f)
