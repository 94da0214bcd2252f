"""Lane-scheduled subsequence DTW, emulating a single-wavefront GPU kernel.

A pass hands ``lanes * segment_width`` consecutive reference columns to the
lanes of one wavefront, ``segment_width`` columns per lane. Iteration ``t``
is one anti-diagonal of segments: lane ``k`` works on query row ``t - k``.
At the end of every iteration each lane shuffles its right-edge cell up to
lane ``k + 1``, which uses it as the left input of its next row (and keeps
the one before as the diagonal input). Lanes reaching the bottom row fold
their segment minimum into a running minimum that is shuffled up the same
way. The right edge of the last lane is recorded as a boundary column and
feeds lane 0 of the next pass.

Every lane computes on every iteration, like SIMT lanes under an execution
mask; a lane's row buffers are reset when it becomes active, so whatever it
computed while inactive is never observed. Per-lane state is kept
struct-of-arrays (``row_prev[w, k]``, ``row_curr[w, k]``, ``left_in[k]``,
``diag_in[k]``, ``run_min[k]``) so the lane loop vectorizes.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .numerics import PrecisionMode, cell_f16, half_round, round_to_half
from .series import QueryBatch, as_series

INF32 = np.float32(np.inf)


@dataclass(frozen=True)
class EngineConfig:
    lanes: int = 64
    segment_width: int = 14
    precision: PrecisionMode = PrecisionMode.FULL32
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "precision", PrecisionMode.parse(self.precision))
        if self.lanes < 1 or self.segment_width < 1:
            raise ValueError(
                f"lanes and segment_width must be >= 1 (got L={self.lanes}, W={self.segment_width})"
            )
        if self.precision is PrecisionMode.PACKED16 and self.segment_width % 2:
            raise ValueError(f"segment_width must be even in f16 mode, got {self.segment_width}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    @property
    def span(self) -> int:
        """Reference columns covered by one pass."""
        return self.lanes * self.segment_width

    def pass_count(self, n: int) -> int:
        return math.ceil(n / self.span)


@dataclass(frozen=True, eq=False)
class BatchResult:
    costs: np.ndarray

    def __len__(self):
        return self.costs.size

    def __getitem__(self, q):
        return self.costs[q]


# --------------------------------------------------------------------------
# kernels


@njit(cache=True, nogil=True)
def _fill_segments(r, off, seg):
    w_, l_ = seg.shape
    n = r.shape[0]
    for k in range(l_):
        for w in range(w_):
            c = off + k * w_ + w
            seg[w, k] = r[c] if c < n else np.float32(np.inf)


@njit(cache=True, nogil=True)
def _pass_f32(q, seg, first, incoming, incoming_min, boundary, activity):
    m = q.shape[0]
    w_, l_ = seg.shape
    inf = np.float32(np.inf)
    zero = np.float32(0.0)
    prev = np.zeros((w_, l_), np.float32)
    curr = np.zeros((w_, l_), np.float32)
    qlane = np.zeros(l_, np.float32)
    left = np.full(l_, inf, np.float32)
    diag = np.full(l_, inf, np.float32)
    shuf = np.full(l_, inf, np.float32)
    run_min = np.full(l_, inf, np.float32)

    for t in range(m + l_ - 1):
        # query samples move one lane up per iteration: lane k holds q[t - k]
        for k in range(l_ - 1, 0, -1):
            qlane[k] = qlane[k - 1]
        qlane[0] = q[t] if t < m else zero

        for k in range(l_):
            i = t - k
            if k == 0:
                if first or i >= m:
                    nl = inf
                else:
                    nl = incoming[i]
            else:
                nl = shuf[k - 1]
            if i == 0:
                # activation: virtual row -1 of zeros gives the free start
                diag[k] = zero
                for w in range(w_):
                    prev[w, k] = zero
            else:
                diag[k] = left[k]
            left[k] = nl

        c0 = curr[0]
        p0 = prev[0]
        s0 = seg[0]
        for k in range(l_):
            d = qlane[k] - s0[k]
            up = p0[k]
            lf = left[k]
            dg = diag[k]
            b = up if up < lf else lf
            b = dg if dg < b else b
            c0[k] = b + d * d
        for w in range(1, w_):
            cw = curr[w]
            cl = curr[w - 1]
            pw = prev[w]
            pl = prev[w - 1]
            sw = seg[w]
            for k in range(l_):
                d = qlane[k] - sw[k]
                up = pw[k]
                lf = cl[k]
                dg = pl[k]
                b = up if up < lf else lf
                b = dg if dg < b else b
                cw[k] = b + d * d

        last = curr[w_ - 1]
        for k in range(l_):
            shuf[k] = last[k]
        row = t - (l_ - 1)
        if 0 <= row < m:
            boundary[row] = last[l_ - 1]
        kb = t - (m - 1)
        if 0 <= kb < l_:
            seg_min = curr[0, kb]
            for w in range(1, w_):
                v = curr[w, kb]
                seg_min = v if v < seg_min else seg_min
            carried = incoming_min if kb == 0 else run_min[kb - 1]
            run_min[kb] = seg_min if seg_min < carried else carried
        activity[t] = min(t, l_ - 1) - max(0, t - m + 1) + 1
        prev, curr = curr, prev
    return run_min[l_ - 1]


@njit(cache=True, nogil=True)
def _pass_f16(q, seg, first, incoming, incoming_min, boundary, activity):
    # seg holds half values; columns (2p, 2p+1) of a segment form one packed pair
    m = q.shape[0]
    w_, l_ = seg.shape
    pairs = w_ // 2
    inf = np.float32(np.inf)
    zero = np.float32(0.0)
    prev = np.zeros((w_, l_), np.float32)
    curr = np.zeros((w_, l_), np.float32)
    qlane = np.zeros(l_, np.float32)
    left = np.full(l_, inf, np.float32)
    diag = np.full(l_, inf, np.float32)
    shuf = np.full(l_, inf, np.float32)
    min_lo = np.full(l_, inf, np.float32)
    min_hi = np.full(l_, inf, np.float32)

    for t in range(m + l_ - 1):
        for k in range(l_ - 1, 0, -1):
            qlane[k] = qlane[k - 1]
        qlane[0] = q[t] if t < m else zero
        klo = max(0, t - m + 1)
        khi = min(l_ - 1, t)
        for k in range(klo, khi + 1):
            i = t - k
            if k == 0:
                nl = inf if first else incoming[i]
            else:
                nl = shuf[k - 1]
            if i == 0:
                diag[k] = zero
                for w in range(w_):
                    prev[w, k] = zero
            else:
                diag[k] = left[k]
            left[k] = nl

        for k in range(klo, khi + 1):
            lf = left[k]
            dg = diag[k]
            qv = qlane[k]
            for p in range(pairs):
                lo = 2 * p
                hi = lo + 1
                # packed vertical min (__hmin2 of up pair and diagonal pair)
                up_lo = prev[lo, k]
                up_hi = prev[hi, k]
                v_lo = dg if dg < up_lo else up_lo
                v_hi = up_lo if up_lo < up_hi else up_hi
                b_lo = lf if lf < v_lo else v_lo
                c_lo = cell_f16(b_lo, qv, seg[lo, k])
                b_hi = c_lo if c_lo < v_hi else v_hi
                c_hi = cell_f16(b_hi, qv, seg[hi, k])
                curr[lo, k] = c_lo
                curr[hi, k] = c_hi
                lf = c_hi
                dg = up_hi
            shuf[k] = curr[w_ - 1, k]

        row = t - (l_ - 1)
        if 0 <= row < m:
            boundary[row] = curr[w_ - 1, l_ - 1]
        kb = t - (m - 1)
        if 0 <= kb < l_:
            s_lo = curr[0, kb]
            s_hi = curr[1, kb]
            for p in range(1, pairs):
                a = curr[2 * p, kb]
                b = curr[2 * p + 1, kb]
                s_lo = a if a < s_lo else s_lo
                s_hi = b if b < s_hi else s_hi
            c_lo = incoming_min if kb == 0 else min_lo[kb - 1]
            c_hi = incoming_min if kb == 0 else min_hi[kb - 1]
            min_lo[kb] = s_lo if s_lo < c_lo else c_lo
            min_hi[kb] = s_hi if s_hi < c_hi else c_hi
        activity[t] = khi - klo + 1
        prev, curr = curr, prev
    a = min_lo[l_ - 1]
    b = min_hi[l_ - 1]
    return a if a < b else b


@njit(cache=True, nogil=True)
def _align_f32(q, r, lanes, width):
    m = q.shape[0]
    span = lanes * width
    passes = (r.shape[0] + span - 1) // span
    seg = np.empty((width, lanes), np.float32)
    incoming = np.full(m, np.float32(np.inf), np.float32)
    boundary = np.empty(m, np.float32)
    activity = np.empty(m + lanes - 1, np.int64)
    best = np.float32(np.inf)
    for p in range(passes):
        _fill_segments(r, p * span, seg)
        best = _pass_f32(q, seg, p == 0, incoming, best, boundary, activity)
        incoming, boundary = boundary, incoming
    return best


@njit(cache=True, nogil=True)
def _align_f16(q, r, lanes, width):
    m = q.shape[0]
    span = lanes * width
    passes = (r.shape[0] + span - 1) // span
    seg = np.empty((width, lanes), np.float32)
    incoming = np.full(m, np.float32(np.inf), np.float32)
    boundary = np.empty(m, np.float32)
    activity = np.empty(m + lanes - 1, np.int64)
    best = np.float32(np.inf)
    for p in range(passes):
        _fill_segments(r, p * span, seg)
        best = _pass_f16(q, seg, p == 0, incoming, best, boundary, activity)
        incoming, boundary = boundary, incoming
    return best


@njit(cache=True)
def _half_array(x):
    out = np.empty(x.shape[0], np.float32)
    for i in range(x.shape[0]):
        out[i] = half_round(x[i])
    return out


# --------------------------------------------------------------------------
# public API


def ingest_packed(series) -> np.ndarray:
    """Round samples to binary16 and pack consecutive pairs.

    Returns a ``(ceil(n / 2), 2)`` float16 array; an odd-length input gets
    ``+inf`` in the final ``hi`` slot, which has infinite distance to every
    finite sample.
    """
    values = np.asarray(series, dtype=np.float32).reshape(-1)
    n = values.size
    out = np.full(((n + 1) // 2) * 2, np.inf, dtype=np.float16)
    if n:
        out[:n] = round_to_half(values)
    return out.reshape(-1, 2)


def _unpack(series) -> np.ndarray:
    n = np.asarray(series).size
    return ingest_packed(series).astype(np.float32).reshape(-1)[:n].copy()


def _prepare(query, reference, config: EngineConfig):
    q = as_series(query)
    r = as_series(reference)
    if config.precision is PrecisionMode.PACKED16:
        q, r = _unpack(q), _unpack(r)
    return q, r


def run_pass(query, ref_slice, incoming: Optional[np.ndarray] = None,
             incoming_min=np.inf, config: EngineConfig = EngineConfig(),
             activity: Optional[np.ndarray] = None):
    """Run one wavefront pass over ``ref_slice`` (at most ``L * W`` columns).

    ``incoming`` is the previous pass's boundary column, or ``None`` for the
    first pass, where column 0 takes the sequential boundary rule. Returns the
    pass's right-edge boundary column and ``min(incoming_min, bottom-row min)``.
    If given, ``activity`` (length ``M + L - 1``) receives the number of
    active lanes per iteration.
    """
    q, r = _prepare(query, ref_slice, config)
    if r.size > config.span:
        raise ValueError(f"reference slice of {r.size} exceeds the pass span {config.span}")
    m = q.size
    seg = np.empty((config.segment_width, config.lanes), np.float32)
    _fill_segments(r, 0, seg)
    first = incoming is None
    inc = np.full(m, INF32) if first else np.ascontiguousarray(incoming, dtype=np.float32)
    if inc.size != m:
        raise ValueError(f"incoming boundary has {inc.size} entries, query has {m}")
    boundary = np.empty(m, np.float32)
    if activity is None:
        activity = np.empty(m + config.lanes - 1, np.int64)
    kernel = _pass_f32 if config.precision is PrecisionMode.FULL32 else _pass_f16
    best = kernel(q, seg, first, inc, np.float32(incoming_min), boundary, activity)
    return boundary, np.float32(best)


def align_query(query, reference, config: EngineConfig = EngineConfig()) -> np.float32:
    """Minimal subsequence alignment cost of ``query`` against ``reference``."""
    q, r = _prepare(query, reference, config)
    kernel = _align_f32 if config.precision is PrecisionMode.FULL32 else _align_f16
    return np.float32(kernel(q, r, config.lanes, config.segment_width))


def align_batch(batch: QueryBatch, reference, config: EngineConfig = EngineConfig()) -> BatchResult:
    """Align every query of ``batch`` against ``reference``; one cost per query."""
    r = as_series(reference)
    if config.precision is PrecisionMode.PACKED16:
        r = _unpack(r)
        mat = _unpack(batch.values).reshape(batch.batch_size, batch.query_len)
        kernel = _align_f16
    else:
        mat = batch.as_matrix()
        kernel = _align_f32
    costs = np.empty(batch.batch_size, np.float32)
    lanes, width = config.lanes, config.segment_width

    def work(q):
        costs[q] = kernel(mat[q], r, lanes, width)

    workers = min(config.workers, batch.batch_size)
    if workers <= 1:
        for q in range(batch.batch_size):
            work(q)
    else:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, range(batch.batch_size)))
    return BatchResult(costs)
