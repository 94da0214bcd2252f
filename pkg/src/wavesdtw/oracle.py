"""Sequential subsequence DTW, used as ground truth for the wavefront engine.

Rows of the cost matrix are query samples, columns are reference samples.
Row 0 is ``d(q[0], r[j])`` (a match may start anywhere), column 0 only
accumulates downwards, and the alignment cost is the bottom-row minimum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .numerics import PrecisionMode, cell_f16, cell_f32, half_round
from .series import as_series


@dataclass(frozen=True)
class AlignmentResult:
    cost: float
    end_col: int


@njit(cache=True, nogil=True)
def _full_f32(q, r, out):
    m, n = out.shape
    zero = np.float32(0.0)
    for j in range(n):
        out[0, j] = cell_f32(zero, q[0], r[j])
    for i in range(1, m):
        out[i, 0] = cell_f32(out[i - 1, 0], q[i], r[0])
        for j in range(1, n):
            best = min(out[i - 1, j - 1], min(out[i - 1, j], out[i, j - 1]))
            out[i, j] = cell_f32(best, q[i], r[j])


@njit(cache=True, nogil=True)
def _full_f16(q, r, out):
    m, n = out.shape
    zero = np.float32(0.0)
    for j in range(n):
        out[0, j] = cell_f16(zero, q[0], r[j])
    for i in range(1, m):
        out[i, 0] = cell_f16(out[i - 1, 0], q[i], r[0])
        for j in range(1, n):
            best = min(out[i - 1, j - 1], min(out[i - 1, j], out[i, j - 1]))
            out[i, j] = cell_f16(best, q[i], r[j])


@njit(cache=True, nogil=True)
def _bottom_f32(q, r):
    n = r.shape[0]
    zero = np.float32(0.0)
    prev = np.empty(n, np.float32)
    curr = np.empty(n, np.float32)
    for j in range(n):
        prev[j] = cell_f32(zero, q[0], r[j])
    for i in range(1, q.shape[0]):
        curr[0] = cell_f32(prev[0], q[i], r[0])
        for j in range(1, n):
            best = min(prev[j - 1], min(prev[j], curr[j - 1]))
            curr[j] = cell_f32(best, q[i], r[j])
        prev, curr = curr, prev
    return prev


@njit(cache=True, nogil=True)
def _bottom_f16(q, r):
    n = r.shape[0]
    zero = np.float32(0.0)
    prev = np.empty(n, np.float32)
    curr = np.empty(n, np.float32)
    for j in range(n):
        prev[j] = cell_f16(zero, q[0], r[j])
    for i in range(1, q.shape[0]):
        curr[0] = cell_f16(prev[0], q[i], r[0])
        for j in range(1, n):
            best = min(prev[j - 1], min(prev[j], curr[j - 1]))
            curr[j] = cell_f16(best, q[i], r[j])
        prev, curr = curr, prev
    return prev


@njit(cache=True)
def _to_half(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = half_round(x[i])
    return out


def _prepare(query, reference, precision):
    precision = PrecisionMode.parse(precision)
    q = as_series(query)
    r = as_series(reference)
    if precision is PrecisionMode.PACKED16:
        q, r = _to_half(q), _to_half(r)
    return q, r, precision


def sdtw_full(query, reference, precision=PrecisionMode.FULL32) -> np.ndarray:
    """Materialize the whole ``(M, N)`` accumulated cost matrix. Test scale only."""
    q, r, precision = _prepare(query, reference, precision)
    out = np.empty((q.size, r.size), dtype=np.float32)
    (_full_f32 if precision is PrecisionMode.FULL32 else _full_f16)(q, r, out)
    return out


def bottom_row(query, reference, precision=PrecisionMode.FULL32) -> np.ndarray:
    q, r, precision = _prepare(query, reference, precision)
    return (_bottom_f32 if precision is PrecisionMode.FULL32 else _bottom_f16)(q, r)


def sdtw_min(query, reference, precision=PrecisionMode.FULL32) -> AlignmentResult:
    """Minimal subsequence alignment cost and the first column attaining it.

    Uses two rolling rows, so memory is O(N).
    """
    row = bottom_row(query, reference, precision)
    end = int(np.argmin(row))
    return AlignmentResult(row[end], end)
