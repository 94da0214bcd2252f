"""Z-normalization of series and query batches.

Statistics come from a sum and a sum of squares accumulated in binary32 by a
fixed reduction tree, the way a GPU block would compute them: each of
``slots`` workers first adds its ``coarsening`` strided elements, then the
slot partials are halved pairwise until one value is left. The tree shape
depends only on the plan, so results are bit-reproducible.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .series import QueryBatch, as_series

DEFAULT_SLOTS = 1024
DEFAULT_COARSENING = 2
DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True)
class SeriesStats:
    mean: np.float32
    std: np.float32
    n: int


@dataclass(frozen=True)
class ReductionPlan:
    slots: int = DEFAULT_SLOTS
    coarsening: int = DEFAULT_COARSENING

    def __post_init__(self):
        if self.slots < 1 or self.slots & (self.slots - 1):
            raise ValueError(f"slots must be a power of two, got {self.slots}")
        if self.coarsening < 1:
            raise ValueError(f"coarsening must be >= 1, got {self.coarsening}")

    @property
    def capacity(self) -> int:
        return self.slots * self.coarsening

    def check(self, n: int) -> None:
        if n > self.capacity:
            raise ValueError(
                f"plan with {self.slots} slots x {self.coarsening} covers {self.capacity} "
                f"elements, series has {n}"
            )

    @classmethod
    def for_length(cls, n: int, slots: int = DEFAULT_SLOTS,
                   coarsening: int = DEFAULT_COARSENING) -> "ReductionPlan":
        """Default plan, raising the coarsening when ``n`` exceeds the slot budget."""
        return cls(slots, max(coarsening, math.ceil(n / slots)))


def _tree_sums(mat: np.ndarray, plan: ReductionPlan) -> tuple[np.ndarray, np.ndarray]:
    """Sum and sum of squares per row of ``mat`` (Z, n), in binary32."""
    z, n = mat.shape
    plan.check(n)
    padded = np.zeros((z, plan.capacity), dtype=np.float32)
    padded[:, :n] = mat
    # row j of the (coarsening, slots) view holds element j*slots + s for slot s
    strided = padded.reshape(z, plan.coarsening, plan.slots)
    acc = strided[:, 0, :].copy()
    acc_sq = acc * acc
    for j in range(1, plan.coarsening):
        part = strided[:, j, :]
        acc = acc + part
        acc_sq = acc_sq + part * part
    width = plan.slots
    while width > 1:
        width //= 2
        acc = acc[:, :width] + acc[:, width:2 * width]
        acc_sq = acc_sq[:, :width] + acc_sq[:, width:2 * width]
    return acc[:, 0], acc_sq[:, 0]


def _stats_rows(mat: np.ndarray, plan: ReductionPlan) -> tuple[np.ndarray, np.ndarray]:
    n = mat.shape[1]
    total, total_sq = _tree_sums(mat, plan)
    nf = np.float32(n)
    mean = total / nf
    var = total_sq / nf - mean * mean
    std = np.sqrt(np.maximum(var, np.float32(0.0)))
    return mean.astype(np.float32), std.astype(np.float32)


def compute_stats(series, plan: Optional[ReductionPlan] = None) -> SeriesStats:
    series = as_series(series)
    plan = plan or ReductionPlan.for_length(series.size)
    mean, std = _stats_rows(series[None, :], plan)
    return SeriesStats(mean[0], std[0], series.size)


def _normalize_rows(mat: np.ndarray, plan: ReductionPlan, epsilon) -> np.ndarray:
    mean, std = _stats_rows(mat, plan)
    degenerate = std < np.float32(epsilon)
    safe_std = np.where(degenerate, np.float32(1.0), std)
    out = (mat - mean[:, None]) / safe_std[:, None]
    out[degenerate] = 0.0
    return out.astype(np.float32, copy=False)


def normalize_series(series, plan: Optional[ReductionPlan] = None,
                     epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Map each sample to ``(x - mean) / std``; all zeros when ``std < epsilon``."""
    series = as_series(series)
    plan = plan or ReductionPlan.for_length(series.size)
    return _normalize_rows(series[None, :], plan, epsilon)[0]


def normalize_batch(batch: QueryBatch, plan: Optional[ReductionPlan] = None,
                    epsilon: float = DEFAULT_EPSILON, workers: int = 1) -> QueryBatch:
    """Normalize every query of ``batch`` independently.

    Queries are split into contiguous chunks across ``workers`` threads; each
    row's reduction is the same regardless of the split.
    """
    plan = plan or ReductionPlan.for_length(batch.query_len)
    plan.check(batch.query_len)
    mat = batch.as_matrix()
    workers = max(1, min(workers, batch.batch_size))
    if workers == 1:
        out = _normalize_rows(mat, plan, epsilon)
    else:
        bounds = np.linspace(0, batch.batch_size, workers + 1).astype(int)
        out = np.empty_like(mat)

        def work(lo, hi):
            out[lo:hi] = _normalize_rows(mat[lo:hi], plan, epsilon)

        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, bounds[:-1], bounds[1:]))
    return QueryBatch(out.reshape(-1), batch.batch_size, batch.query_len)
