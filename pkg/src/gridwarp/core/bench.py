"""Empirical scaling of grid matching on random square grids."""

import logging
import time
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from matplotlib.figure import Figure

from gridwarp.core.grid_match import column_distance_matrix, river_path_dp
from gridwarp.errors import InvalidInputError
from gridwarp.models.report import BenchRow
from gridwarp.models.warp import ColumnGrid, CostKind, EndpointMode

logger = logging.getLogger(__name__)

MIN_SIZE = 4
DEFAULT_SIZES = (8, 16, 32)


def time_match(n: int, rng: np.random.Generator, workers: Optional[int] = None) -> float:
    """Seconds for one distance landscape plus DP river path on random ``n x n`` grids."""
    A = ColumnGrid(data=rng.random((n, n)))
    B = ColumnGrid(data=rng.random((n, n)))
    start = time.perf_counter()
    D = column_distance_matrix(A, B, CostKind.ABSOLUTE, workers)
    river_path_dp(D, EndpointMode.FIXED)
    return time.perf_counter() - start


def run_bench(
    sizes: Sequence[int] = DEFAULT_SIZES,
    trials: int = 3,
    seed: int = 0,
    workers: Optional[int] = None,
) -> List[BenchRow]:
    """Mean match time per size. Inputs depend only on ``seed``."""
    if trials < 1:
        raise InvalidInputError(f"trials must be positive, got {trials}")
    bad = [n for n in sizes if n < MIN_SIZE]
    if bad:
        raise InvalidInputError(f"bench sizes must be at least {MIN_SIZE}, got {bad}")
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        times = [time_match(n, rng, workers) for _ in range(trials)]
        rows.append(BenchRow(n=n, trials=trials, mean_seconds=float(np.mean(times))))
        logger.info("N=%d: %.4f s mean over %d trial(s)", n, rows[-1].mean_seconds, trials)
    return rows


def fit_slope(rows: Sequence[BenchRow]) -> Optional[float]:
    """Least-squares slope of log(time) against log(N); None with fewer than two sizes."""
    sizes = {r.n for r in rows}
    if len(sizes) < 2 or any(r.mean_seconds <= 0 for r in rows):
        return None
    n = np.log([r.n for r in rows])
    t = np.log([r.mean_seconds for r in rows])
    slope, _ = np.polyfit(n, t, 1)
    return float(slope)


def write_bench_csv(path: Union[str, Path], rows: Sequence[BenchRow]) -> None:
    lines = ["n,trials,mean_seconds"]
    lines += [f"{r.n},{r.trials},{r.mean_seconds!r}" for r in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def plot_bench(path: Union[str, Path], rows: Sequence[BenchRow], slope: Optional[float]) -> None:
    """Log-log plot of the timings as SVG."""
    fig = Figure(figsize=(5, 4))
    ax = fig.add_subplot(1, 1, 1)
    n = np.array([r.n for r in rows], dtype=np.float64)
    t = np.array([r.mean_seconds for r in rows])
    ax.loglog(n, t, "o-", label="measured")
    if slope is not None:
        ref = t[0] * (n / n[0]) ** 4
        ax.loglog(n, ref, "--", label="N^4 reference")
        ax.set_title(f"fitted slope {slope:.2f}")
    ax.set_xlabel("grid size N")
    ax.set_ylabel("seconds")
    ax.legend()
    fig.savefig(Path(path), format="svg")
