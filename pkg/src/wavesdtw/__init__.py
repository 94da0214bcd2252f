"""Batched subsequence DTW with a lane-scheduled wavefront engine."""
from .engine import BatchResult, EngineConfig, align_batch, align_query, ingest_packed, run_pass
from .normalizer import ReductionPlan, SeriesStats, compute_stats, normalize_batch, normalize_series
from .numerics import HalfPair, PrecisionMode, dist_sq, pair_min, round_to_half
from .oracle import AlignmentResult, sdtw_full, sdtw_min
from .series import QueryBatch, load_dataset, slice_query, store_dataset

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult", "BatchResult", "EngineConfig", "HalfPair", "PrecisionMode", "QueryBatch",
    "ReductionPlan", "SeriesStats", "align_batch", "align_query", "compute_stats", "dist_sq",
    "ingest_packed", "load_dataset", "normalize_batch", "normalize_series", "pair_min",
    "round_to_half", "run_pass", "sdtw_full", "sdtw_min", "slice_query", "store_dataset",
]
