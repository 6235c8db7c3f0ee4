"""Column-wise grid matching through the DTW distance landscape.

``D[i, j]`` is the DTW distance between column ``i`` of A and column ``j``
of B. A river path is a monotone valley through ``D``; averaging its
j-values per i gives the column correspondence. Rows are handled by
running the same procedure on the transposed grids.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from gridwarp.core.dtw import STEPS, accumulated_cost, backtrack, cost_matrix, rolling_cost
from gridwarp.errors import InvalidInputError, OracleSizeError
from gridwarp.models.warp import (
    ColumnGrid,
    ColumnMapping,
    CostKind,
    DistanceLandscape,
    EndpointMode,
    GridMatchResult,
    RiverMethod,
    RiverPath,
    WarpPath,
)

logger = logging.getLogger(__name__)

ORACLE_MAX_TOTAL = 14
THREADS_ENV = "GRIDWARP_THREADS"


class GridMatchOptions(BaseModel):
    """Knobs for ``match_grid``."""

    kind: CostKind = CostKind.ABSOLUTE
    mode: EndpointMode = EndpointMode.FIXED
    method: RiverMethod = RiverMethod.DP
    workers: Optional[int] = None

    model_config = {"frozen": True}


def worker_count(requested: Optional[int] = None) -> int:
    """Number of worker processes, from ``requested`` or ``GRIDWARP_THREADS``."""
    if requested is not None:
        return max(1, int(requested))
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return 1


def _distance_rows(
    a_cols: List[np.ndarray], b_cols: List[np.ndarray], kind: CostKind
) -> List[List[float]]:
    return [[rolling_cost(cost_matrix(a, b, kind).tolist()) for b in b_cols] for a in a_cols]


def column_distance_matrix(
    A: ColumnGrid,
    B: ColumnGrid,
    kind: CostKind = CostKind.ABSOLUTE,
    workers: Optional[int] = None,
) -> DistanceLandscape:
    """Pairwise DTW distances between the columns of A and B.

    Rows of ``D`` are independent, so with more than one worker they are
    computed in a process pool; the result does not depend on the split.
    """
    a_cols = [A.data[:, i].copy() for i in range(A.n_cols)]
    b_cols = [B.data[:, j].copy() for j in range(B.n_cols)]
    n_workers = min(worker_count(workers), len(a_cols))
    if n_workers <= 1:
        rows = _distance_rows(a_cols, b_cols, kind)
    else:
        chunks = [a_cols[k::n_workers] for k in range(n_workers)]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            parts = list(
                pool.map(_distance_rows, chunks, [b_cols] * n_workers, [kind] * n_workers)
            )
        rows = [[] for _ in a_cols]
        for k, part in enumerate(parts):
            for offset, row in enumerate(part):
                rows[k + offset * n_workers] = row
    logger.debug("distance landscape %dx%d computed with %d worker(s)", len(a_cols), len(b_cols), n_workers)
    return DistanceLandscape(values=np.array(rows, dtype=np.float64))


def local_min_mapping(D: DistanceLandscape) -> List[int]:
    """Row-wise argmin of ``D`` (first minimum), 1-based.

    This baseline can jump and is not guaranteed to be monotone.
    """
    return [int(j) + 1 for j in np.argmin(D.values, axis=1)]


def path_cost(D: DistanceLandscape, steps: List[Tuple[int, int]]) -> float:
    """Sum of ``D`` along a path, accumulated in path order."""
    total = 0.0
    for i, j in steps:
        total += float(D.values[i - 1, j - 1])
    return total


def river_path_dp(D: DistanceLandscape, mode: EndpointMode = EndpointMode.FIXED) -> RiverPath:
    """Globally optimal river path by dynamic programming.

    ``fixed`` runs from ``(1,1)`` to ``(q,s)``. ``free_j`` starts anywhere on
    row 1 (``F[1,j] = D[1,j]``) and ends at the smallest j minimizing ``F[q,j]``.
    """
    q, s = D.shape
    if mode == EndpointMode.FIXED:
        F = accumulated_cost(D.values)
        end_j = s - 1
    else:
        F = _free_start_accumulated(D.values)
        last = F[q - 1]
        end_j = min(range(s), key=lambda j: (last[j], j))
    steps = backtrack(F, q - 1, end_j, stop_at_first_row=mode == EndpointMode.FREE_J)
    path = WarpPath(steps=steps, dims=(q, s))
    return RiverPath(path=path, mode=mode, cost=F[q - 1][end_j])


def _free_start_accumulated(values: np.ndarray) -> List[List[float]]:
    c = values.tolist()
    q = len(c)
    s = len(c[0])
    F = [list(c[0])]
    for i in range(1, q):
        prev = F[i - 1]
        crow = c[i]
        row = [0.0] * s
        left = crow[0] + prev[0]
        row[0] = left
        for j in range(1, s):
            d = prev[j - 1]
            u = prev[j]
            best = d if d <= u else u
            if left < best:
                best = left
            left = crow[j] + best
            row[j] = left
        F.append(row)
    return F


def river_path_greedy(
    D: DistanceLandscape, start: Optional[Tuple[int, int]] = None
) -> RiverPath:
    """Follow the cheapest forward neighbor until ``(q, s)``.

    The default start is the first minimum of row 1. Ties prefer the
    diagonal, then ``(i+1, j)``, then ``(i, j+1)``.
    """
    q, s = D.shape
    if start is None:
        start = (1, int(np.argmin(D.values[0])) + 1)
    i, j = start
    if not (1 <= i <= q and 1 <= j <= s):
        raise InvalidInputError(f"start {start} outside the {q}x{s} landscape")
    values = D.values
    steps = [(i, j)]
    while (i, j) != (q, s):
        best: Optional[Tuple[int, int]] = None
        best_cost = np.inf
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            ni, nj = i + di, j + dj
            if ni <= q and nj <= s and values[ni - 1, nj - 1] < best_cost:
                best = (ni, nj)
                best_cost = values[ni - 1, nj - 1]
        assert best is not None
        i, j = best
        steps.append(best)
    mode = EndpointMode.FIXED if start == (1, 1) else EndpointMode.FREE_J
    return RiverPath(path=WarpPath(steps=steps, dims=(q, s)), mode=mode, cost=path_cost(D, steps))


def river_path(
    D: DistanceLandscape,
    mode: EndpointMode = EndpointMode.FIXED,
    method: RiverMethod = RiverMethod.DP,
) -> RiverPath:
    """Dispatch to the DP or greedy tracer; greedy honors ``fixed`` by starting at (1,1)."""
    if method == RiverMethod.GREEDY:
        return river_path_greedy(D, (1, 1) if mode == EndpointMode.FIXED else None)
    return river_path_dp(D, mode)


def path_to_mapping(path: RiverPath, q: int) -> ColumnMapping:
    """Average j per i along the path."""
    sums = [0.0] * q
    counts = [0] * q
    for i, j in path.steps:
        if not 1 <= i <= q:
            raise InvalidInputError(f"path row {i} outside 1..{q}")
        sums[i - 1] += j
        counts[i - 1] += 1
    if any(c == 0 for c in counts):
        missing = [k + 1 for k, c in enumerate(counts) if c == 0]
        raise InvalidInputError(f"path skips rows {missing}")
    return ColumnMapping(values=[t / c for t, c in zip(sums, counts)], s=path.path.dims[1])


def enumerate_paths_oracle(D: DistanceLandscape, mode: EndpointMode = EndpointMode.FIXED) -> float:
    """Exact optimal river cost by exhaustive enumeration; ``q + s <= 14``."""
    q, s = D.shape
    if q + s > ORACLE_MAX_TOTAL:
        raise OracleSizeError(f"oracle limited to q + s <= {ORACLE_MAX_TOTAL}, got {q} + {s}")
    c = D.values.tolist()
    starts = [0] if mode == EndpointMode.FIXED else list(range(s))
    best = np.inf
    for j0 in starts:
        stack = [(0, j0, c[0][j0])]
        while stack:
            i, j, acc = stack.pop()
            if i == q - 1 and (mode == EndpointMode.FREE_J or j == s - 1):
                best = min(best, acc)
            for di, dj in STEPS:
                ni, nj = i + di, j + dj
                if ni < q and nj < s:
                    stack.append((ni, nj, acc + c[ni][nj]))
    return float(best)


def match_grid(
    A: ColumnGrid, B: ColumnGrid, options: Optional[GridMatchOptions] = None
) -> GridMatchResult:
    """Column and row correspondences from A into B."""
    opts = options or GridMatchOptions()
    d_cols = column_distance_matrix(A, B, opts.kind, opts.workers)
    col_path = river_path(d_cols, opts.mode, opts.method)
    d_rows = column_distance_matrix(A.transposed(), B.transposed(), opts.kind, opts.workers)
    row_path = river_path(d_rows, opts.mode, opts.method)
    logger.info(
        "matched %dx%d grid to %dx%d: column cost %.4g, row cost %.4g",
        A.n_rows, A.n_cols, B.n_rows, B.n_cols, col_path.cost, row_path.cost,
    )
    return GridMatchResult(
        column_mapping=path_to_mapping(col_path, A.n_cols),
        row_mapping=path_to_mapping(row_path, A.n_rows),
        d_cols=d_cols,
        d_rows=d_rows,
        column_path=col_path,
        row_path=row_path,
    )
