"""Deterministic cylinder-bell-funnel (CBF) series generation.

Randomness comes from numpy's Philox counter-based bit generator keyed by
``(seed, stream)``, so every query of a batch has its own independent stream
and the output does not depend on generation order. Normal deviates use a
scalar Box-Muller transform over that stream.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .series import QueryBatch

MIN_LENGTH = 16
WINDOW = 128
# keeps the reference stream disjoint from query streams 0..Z-1
REFERENCE_STREAM = 1 << 63
_U53 = 2.0 ** -53


class Shape(enum.Enum):
    CYLINDER = "cylinder"
    BELL = "bell"
    FUNNEL = "funnel"


SHAPES = (Shape.CYLINDER, Shape.BELL, Shape.FUNNEL)


class Rng:
    """Counter-based random stream identified by ``(seed, stream)``."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = int(stream) & 0xFFFFFFFFFFFFFFFF
        self._bits = np.random.Philox(key=np.array([self.seed, self.stream], dtype=np.uint64))

    def spawn(self, stream: int) -> "Rng":
        return Rng(self.seed, stream)

    def raw(self, n: int) -> np.ndarray:
        return self._bits.random_raw(n)

    def uniform(self, n: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits of each draw."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _U53

    def integers(self, lo: int, hi: int) -> int:
        """Integer in the closed range [lo, hi] (multiply-shift on the high word)."""
        span = hi - lo + 1
        word = int(self.raw(1)[0]) >> 32
        return lo + ((word * span) >> 32)

    def normal(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        raw = self.raw(2 * pairs)
        out = np.empty(2 * pairs)
        for p in range(pairs):
            u1 = ((int(raw[2 * p]) >> 11) + 1) * _U53  # (0, 1], keeps log finite
            u2 = (int(raw[2 * p + 1]) >> 11) * _U53
            rad = math.sqrt(-2.0 * math.log(u1))
            ang = 2.0 * math.pi * u2
            out[2 * p] = rad * math.cos(ang)
            out[2 * p + 1] = rad * math.sin(ang)
        return out[:n]


@dataclass(frozen=True)
class CbfSpec:
    shape: Shape
    length: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))


def _check_length(length):
    if length < MIN_LENGTH:
        raise ValueError(f"CBF series need length >= {MIN_LENGTH}, got {length}")


def cbf_event(shape: Shape, length: int, rng: Rng) -> tuple[np.ndarray, int, int]:
    """One CBF series and its event interval ``[a, b]`` (inclusive)."""
    _check_length(length)
    a = rng.integers(math.ceil(length / 8), math.ceil(length / 4))
    b = min(a + rng.integers(math.ceil(length / 4), math.ceil(3 * length / 4)), length)
    amplitude = 6.0 + rng.normal(1)[0]
    noise = rng.normal(length)
    t = np.arange(length, dtype=np.float64)
    inside = (t >= a) & (t <= b)
    if shape is Shape.CYLINDER:
        profile = inside.astype(np.float64)
    elif shape is Shape.BELL:
        profile = np.where(inside, (t - a) / (b - a), 0.0)
    else:
        profile = np.where(inside, (b - t) / (b - a), 0.0)
    return (amplitude * profile + noise).astype(np.float32), a, b


def gen_cbf(spec: CbfSpec) -> np.ndarray:
    return cbf_event(spec.shape, spec.length, Rng(spec.seed))[0]


def _windows(length: int, rng: Rng) -> np.ndarray:
    _check_length(length)
    count = math.ceil(length / WINDOW)
    parts = []
    for _ in range(count):
        shape = SHAPES[rng.integers(0, 2)]
        parts.append(cbf_event(shape, WINDOW, rng)[0])
    return np.concatenate(parts)[:length]


def gen_reference(length: int, seed: int) -> np.ndarray:
    """Tiling of independent length-128 CBF windows, truncated to ``length``."""
    return _windows(length, Rng(seed, REFERENCE_STREAM))


def gen_query(length: int, seed: int, stream: int) -> np.ndarray:
    return _windows(length, Rng(seed, stream))


def gen_batch(batch_size: int, query_len: int, seed: int, workers: int = 1) -> QueryBatch:
    """``batch_size`` queries; query ``q`` is drawn from stream ``q``."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    _check_length(query_len)
    out = np.empty((batch_size, query_len), np.float32)

    def work(q):
        out[q] = gen_query(query_len, seed, q)

    if workers <= 1:
        for q in range(batch_size):
            work(q)
    else:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, range(batch_size)))
    return QueryBatch(out.reshape(-1), batch_size, query_len)
