"""One-dimensional dynamic time warping.

Paths use 1-based index pairs. The step set is {(1,0), (0,1), (1,1)} and
both endpoints are fixed. Backtracking prefers the diagonal predecessor,
then ``(i-1, j)``, then ``(i, j-1)``.
"""

import logging
import math
from typing import List, Sequence, Tuple, Union

import numpy as np

from gridwarp.errors import InvalidInputError, OracleSizeError
from gridwarp.models.warp import CostKind, EndpointMode, WarpPath

logger = logging.getLogger(__name__)

ArrayLike = Union[Sequence[float], np.ndarray]

STEPS: Tuple[Tuple[int, int], ...] = ((1, 0), (0, 1), (1, 1))
BRUTEFORCE_MAX_TOTAL = 16

_INF = math.inf


def as_sequence(values: ArrayLike, name: str = "sequence") -> np.ndarray:
    """Validate a 1D sample sequence: non-empty and finite."""
    seq = np.asarray(values, dtype=np.float64).reshape(-1)
    if seq.size == 0:
        raise InvalidInputError(f"{name} must not be empty")
    if not np.all(np.isfinite(seq)):
        raise InvalidInputError(f"{name} must contain only finite values")
    return seq


def local_cost(a: float, b: float, kind: CostKind = CostKind.ABSOLUTE) -> float:
    """``|a - b|`` or ``|a - b|^2``."""
    diff = abs(a - b)
    if kind == CostKind.SQUARED:
        return diff * diff
    return diff


def cost_matrix(x: np.ndarray, y: np.ndarray, kind: CostKind = CostKind.ABSOLUTE) -> np.ndarray:
    """All local costs ``c(k, l)`` as an ``m x n`` array."""
    diff = np.abs(np.subtract.outer(x, y))
    if kind == CostKind.SQUARED:
        return diff * diff
    return diff


def accumulated_cost(cost: np.ndarray) -> List[List[float]]:
    """Accumulated cost ``F`` for a fixed ``(1,1)`` start.

    ``F[i][j] = c[i][j] + min(F[i-1][j-1], F[i-1][j], F[i][j-1])`` with
    out-of-range predecessors at infinity. Returned as nested lists with
    0-based storage.
    """
    c = cost.tolist()
    m = len(c)
    n = len(c[0])
    F = [[_INF] * n for _ in range(m)]
    row = F[0]
    crow = c[0]
    acc = 0.0
    for j in range(n):
        acc += crow[j]
        row[j] = acc
    for i in range(1, m):
        prev = F[i - 1]
        row = F[i]
        crow = c[i]
        row[0] = crow[0] + prev[0]
        left = row[0]
        for j in range(1, n):
            d = prev[j - 1]
            u = prev[j]
            best = d if d <= u else u
            if left < best:
                best = left
            left = crow[j] + best
            row[j] = left
    return F


def backtrack(F: List[List[float]], i: int, j: int, stop_at_first_row: bool) -> List[Tuple[int, int]]:
    """Walk predecessors from 0-based ``(i, j)`` back to the start."""
    steps = [(i + 1, j + 1)]
    while i > 0 or (j > 0 and not stop_at_first_row):
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            d = F[i - 1][j - 1]
            u = F[i - 1][j]
            left = F[i][j - 1]
            if d <= u and d <= left:
                i -= 1
                j -= 1
            elif u <= left:
                i -= 1
            else:
                j -= 1
        steps.append((i + 1, j + 1))
    steps.reverse()
    return steps


def dtw(
    x: ArrayLike, y: ArrayLike, kind: CostKind = CostKind.ABSOLUTE
) -> Tuple[float, WarpPath]:
    """DTW distance and an optimal fixed-endpoint warping path."""
    xs = as_sequence(x, "x")
    ys = as_sequence(y, "y")
    F = accumulated_cost(cost_matrix(xs, ys, kind))
    m, n = len(xs), len(ys)
    steps = backtrack(F, m - 1, n - 1, stop_at_first_row=False)
    return F[m - 1][n - 1], WarpPath(steps=steps, dims=(m, n))


def dtw_cost(x: ArrayLike, y: ArrayLike, kind: CostKind = CostKind.ABSOLUTE) -> float:
    """``dtw(x, y)[0]`` with a rolling row; bitwise identical result."""
    xs = as_sequence(x, "x")
    ys = as_sequence(y, "y")
    return rolling_cost(cost_matrix(xs, ys, kind).tolist())


def rolling_cost(c: List[List[float]]) -> float:
    """Final accumulated cost of a local-cost matrix given as nested lists."""
    n = len(c[0])
    prev = [0.0] * n
    acc = 0.0
    crow = c[0]
    for j in range(n):
        acc += crow[j]
        prev[j] = acc
    for crow in c[1:]:
        row = [0.0] * n
        left = crow[0] + prev[0]
        row[0] = left
        for j in range(1, n):
            d = prev[j - 1]
            u = prev[j]
            best = d if d <= u else u
            if left < best:
                best = left
            left = crow[j] + best
            row[j] = left
        prev = row
    return prev[n - 1]


def dtw_bruteforce(x: ArrayLike, y: ArrayLike, kind: CostKind = CostKind.ABSOLUTE) -> float:
    """Exact DTW distance by enumerating every admissible path.

    Refuses problems with ``m + n > 16``.
    """
    xs = as_sequence(x, "x")
    ys = as_sequence(y, "y")
    m, n = len(xs), len(ys)
    if m + n > BRUTEFORCE_MAX_TOTAL:
        raise OracleSizeError(
            f"brute force limited to m + n <= {BRUTEFORCE_MAX_TOTAL}, got {m} + {n}"
        )
    c = cost_matrix(xs, ys, kind).tolist()
    best = _INF
    # explicit stack of (i, j, cost so far), 0-based
    stack = [(0, 0, c[0][0])]
    while stack:
        i, j, acc = stack.pop()
        if i == m - 1 and j == n - 1:
            if acc < best:
                best = acc
            continue
        for di, dj in STEPS:
            ni, nj = i + di, j + dj
            if ni < m and nj < n:
                stack.append((ni, nj, acc + c[ni][nj]))
    return best


def validate_path(path: WarpPath, mode: EndpointMode = EndpointMode.FIXED) -> bool:
    """Check boundary, monotonicity and step constraints.

    In ``free_j`` mode only the i-coordinate is pinned at both ends.
    """
    m, n = path.dims
    steps = path.steps
    if not steps or m < 1 or n < 1:
        return False
    for i, j in steps:
        if not (1 <= i <= m and 1 <= j <= n):
            return False
    (i0, j0), (i_end, j_end) = steps[0], steps[-1]
    if i0 != 1 or i_end != m:
        return False
    if mode == EndpointMode.FIXED and (j0 != 1 or j_end != n):
        return False
    for (i1, j1), (i2, j2) in zip(steps, steps[1:]):
        if (i2 - i1, j2 - j1) not in STEPS:
            return False
    return True
