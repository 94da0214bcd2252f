"""Precision modes, binary16 emulation and the per-cell distance kernel.

Half-precision values are carried in ``float32`` containers throughout the
engine; every arithmetic result in :attr:`PrecisionMode.PACKED16` is passed
through :func:`half_round` before it is reused, so no extra precision
survives between operations.
"""
from __future__ import annotations

import enum
import math
from typing import NamedTuple

import numpy as np
from numba import njit

HALF_MAX = 65504.0
_HALF_MIN_EXP = -24  # exponent of the smallest subnormal, 2**-24
_HALF_MANT_BITS = 11


class PrecisionMode(enum.Enum):
    FULL32 = "f32"
    PACKED16 = "f16"

    @classmethod
    def parse(cls, value: "PrecisionMode | str") -> "PrecisionMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown precision {value!r}; expected 'f32' or 'f16'") from None


class HalfPair(NamedTuple):
    """Two binary16 values operated on together, like a ``__half2``."""

    lo: np.float16
    hi: np.float16


@njit(cache=True, nogil=True)
def half_round(x):
    """Round a float to the nearest binary16 value (ties to even).

    Works on the exact binary64 value of ``x``; overflow gives a signed
    infinity, NaN and infinities pass through unchanged.
    """
    x = float(x)
    if x != x or x == 0.0 or math.isinf(x):
        return np.float32(x)
    _, e = math.frexp(x)
    # leading bit is 2**(e-1); 11 significant bits below it, floored at the subnormal ulp
    shift = e - _HALF_MANT_BITS
    if shift < _HALF_MIN_EXP:
        shift = _HALF_MIN_EXP
    y = math.ldexp(x, -shift)
    f = math.floor(y)
    frac = y - f
    if frac > 0.5 or (frac == 0.5 and math.floor(f * 0.5) * 2.0 != f):
        f += 1.0
    out = math.copysign(math.ldexp(f, shift), x)
    if abs(out) > HALF_MAX:
        return np.float32(math.copysign(math.inf, x))
    return np.float32(out)


@njit(cache=True, nogil=True)
def cell_f32(best, a, b):
    d = a - b
    return best + d * d


@njit(cache=True, nogil=True)
def cell_f16(best, a, b):
    # a, b, best are half values; their difference is exact in binary64.
    # diff*diff + best is exact in binary64 except where it cannot reach a half midpoint,
    # so rounding it once emulates the fused multiply-add.
    d = half_round(float(a) - float(b))
    return half_round(float(d) * float(d) + float(best))


@njit(cache=True, nogil=True)
def _round_array(src, dst):
    for i in range(src.shape[0]):
        dst[i] = half_round(src[i])


def round_to_half(x):
    """Round binary32 input (scalar or array) to binary16.

    Returns ``np.float16`` values. The conversion itself is done by the
    emulation in :func:`half_round`, not by numpy's cast.
    """
    arr = np.asarray(x, dtype=np.float32)
    flat = np.ascontiguousarray(arr).ravel()
    out = np.empty(flat.shape, dtype=np.float32)
    _round_array(flat, out)
    res = out.astype(np.float16).reshape(arr.shape)
    if res.ndim == 0:
        return res[()]
    return res


def to_binary32(h):
    """Widen binary16 values to binary32 (always exact)."""
    return np.asarray(h, dtype=np.float16).astype(np.float32)


def _lanewise_min(a, b):
    # NaN-propagating, matches the emulated __hmin2 used by the engine
    return np.minimum(a, b)


def pair_min(a, b):
    """Lanewise minimum of two half pairs.

    Accepts :class:`HalfPair` / 2-tuples or arrays whose last axis has size 2.
    """
    if isinstance(a, tuple) and isinstance(b, tuple):
        lo = _lanewise_min(np.float16(a[0]), np.float16(b[0]))
        hi = _lanewise_min(np.float16(a[1]), np.float16(b[1]))
        return HalfPair(np.float16(lo), np.float16(hi))
    a = np.asarray(a, dtype=np.float16)
    b = np.asarray(b, dtype=np.float16)
    if a.shape[-1:] != (2,) or b.shape[-1:] != (2,):
        raise ValueError("pair_min expects a trailing axis of length 2")
    return _lanewise_min(a, b)


def dist_sq(a, b, precision: PrecisionMode | str = PrecisionMode.FULL32):
    """Squared difference of two samples in the given precision."""
    precision = PrecisionMode.parse(precision)
    if precision is PrecisionMode.FULL32:
        return np.float32(cell_f32(np.float32(0.0), np.float32(a), np.float32(b)))
    ha = half_round(np.float32(a))
    hb = half_round(np.float32(b))
    return np.float16(cell_f16(np.float32(0.0), ha, hb))
