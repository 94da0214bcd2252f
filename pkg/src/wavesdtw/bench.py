"""Kernel timing, throughput in gigasamples per second, and segment-width sweeps."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np

from .engine import EngineConfig, align_batch
from .normalizer import normalize_batch
from .series import QueryBatch, as_series

KERNELS = ("normalizer", "sdtw")


class DeterminismError(RuntimeError):
    """Repeated kernel executions on identical inputs disagreed."""


def measure_gsps(floats_processed: int, elapsed_ms: float) -> float:
    """Throughput as ``floats / (ms * 1e9 / 1000)``."""
    if not elapsed_ms > 0:
        raise ValueError(f"elapsed_ms must be positive, got {elapsed_ms}")
    return floats_processed / (elapsed_ms * 1e9 / 1000)


@dataclass
class BenchInputs:
    batch: QueryBatch
    reference: np.ndarray
    config: EngineConfig = field(default_factory=EngineConfig)

    def __post_init__(self):
        self.reference = as_series(self.reference)


KernelFn = Callable[[BenchInputs], np.ndarray]


def _sdtw_kernel(inputs: BenchInputs) -> np.ndarray:
    return align_batch(inputs.batch, inputs.reference, inputs.config).costs


def _normalizer_kernel(inputs: BenchInputs) -> np.ndarray:
    return normalize_batch(inputs.batch, workers=inputs.config.workers).values


_KERNEL_FNS = {"sdtw": _sdtw_kernel, "normalizer": _normalizer_kernel}


@dataclass
class BenchReport:
    kernel: str
    runs: int
    warmups: int
    mean_ms: float
    mean_gsps: float
    batch_size: int
    query_len: int
    ref_len: int
    lanes: int
    segment_width: int
    precision: str
    times_ms: list = field(default_factory=list, repr=False)
    result: np.ndarray = field(default=None, repr=False)

    def row(self) -> dict:
        return {
            "kernel": self.kernel, "runs": self.runs, "warmups": self.warmups,
            "mean_ms": f"{self.mean_ms:.6f}", "mean_gsps": f"{self.mean_gsps:.9g}",
            "Z": self.batch_size, "M": self.query_len, "N": self.ref_len,
            "L": self.lanes, "W": self.segment_width, "precision": self.precision,
        }


@dataclass
class SweepReport:
    batch_size: int
    query_len: int
    ref_len: int
    lanes: int
    rows: list  # BenchReport per segment width, in sweep order

    def table_rows(self) -> list[dict]:
        return [{"W": r.segment_width, "mean_gsps": f"{r.mean_gsps:.9g}",
                 "mean_ms": f"{r.mean_ms:.6f}", "Z": self.batch_size, "M": self.query_len,
                 "N": self.ref_len, "L": self.lanes} for r in self.rows]


def format_rows(rows: Sequence[dict]) -> str:
    """Machine-readable form: one line of space-separated ``key=value`` per row."""
    return "".join(" ".join(f"{k}={v}" for k, v in row.items()) + "\n" for row in rows)


def format_table(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    keys = list(rows[0])
    widths = {k: max(len(k), *(len(str(r[k])) for r in rows)) for k in keys}
    lines = ["  ".join(k.rjust(widths[k]) for k in keys),
             "  ".join("-" * widths[k] for k in keys)]
    lines += ["  ".join(str(r[k]).rjust(widths[k]) for k in keys) for r in rows]
    return "\n".join(lines) + "\n"


def _same(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()


def run_benchmark(kernel: Union[str, KernelFn], inputs: BenchInputs, runs: int = 10,
                  warmups: int = 2, name: str = None) -> BenchReport:
    """Time ``runs`` executions of ``kernel`` after ``warmups`` untimed ones.

    Raises :class:`DeterminismError` if any execution (warm-up included)
    returns a result that differs bit-wise from the first one.
    """
    if runs < 1 or warmups < 0:
        raise ValueError(f"need runs >= 1 and warmups >= 0, got runs={runs}, warmups={warmups}")
    if isinstance(kernel, str):
        if kernel not in _KERNEL_FNS:
            raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
        name = name or kernel
        fn = _KERNEL_FNS[kernel]
    else:
        name = name or getattr(kernel, "__name__", "custom")
        fn = kernel

    reference_result = None

    def check(result):
        nonlocal reference_result
        if reference_result is None:
            reference_result = np.array(result, copy=True)
        elif not _same(result, reference_result):
            raise DeterminismError(f"kernel {name!r} returned different results on identical inputs")

    for _ in range(warmups):
        check(fn(inputs))
    times = []
    for _ in range(runs):
        start = time.perf_counter()
        result = fn(inputs)
        times.append((time.perf_counter() - start) * 1e3)
        check(result)

    floats = inputs.batch.batch_size * inputs.batch.query_len
    mean_ms = float(np.mean(times))
    cfg = inputs.config
    return BenchReport(
        kernel=name, runs=runs, warmups=warmups, mean_ms=mean_ms,
        mean_gsps=float(np.mean([measure_gsps(floats, t) for t in times])),
        batch_size=inputs.batch.batch_size, query_len=inputs.batch.query_len,
        ref_len=inputs.reference.size, lanes=cfg.lanes, segment_width=cfg.segment_width,
        precision=cfg.precision.value, times_ms=times, result=reference_result,
    )


def run_sweep(widths: Sequence[int], inputs: BenchInputs, runs: int = 10, warmups: int = 2,
              kernel: Union[str, KernelFn] = "sdtw") -> SweepReport:
    """One benchmark row per segment width on the same inputs.

    All rows must produce bit-identical costs; otherwise no report is returned.
    """
    widths = list(widths)
    if not widths or any(w < 1 for w in widths):
        raise ValueError(f"segment widths must be >= 1, got {widths}")
    rows = []
    for w in widths:
        cfg = replace(inputs.config, segment_width=w)
        rows.append(run_benchmark(kernel, replace(inputs, config=cfg), runs, warmups))
    first = rows[0].result
    for row in rows[1:]:
        if not _same(row.result, first):
            raise DeterminismError(
                f"segment width {row.segment_width} produced different costs than width {rows[0].segment_width}"
            )
    return SweepReport(inputs.batch.batch_size, inputs.batch.query_len,
                       inputs.reference.size, inputs.config.lanes, rows)
