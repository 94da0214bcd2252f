"""Exit criteria for the build, one test per criterion.

Run alone with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per
criterion is printed in the terminal summary. Criterion 9 runs the full
512 x 2000 x 100000 benchmark and takes several minutes.
"""
import time

import numpy as np
import pytest

from wavesdtw.bench import (BenchInputs, DeterminismError, format_rows, measure_gsps,
                            run_benchmark, run_sweep)
from wavesdtw.cli import main, verify
from wavesdtw.datagen import gen_batch, gen_reference
from wavesdtw.engine import EngineConfig, align_batch, align_query
from wavesdtw.normalizer import normalize_batch, normalize_series
from wavesdtw.oracle import sdtw_full, sdtw_min
from wavesdtw.series import QueryBatch, load_dataset, manifest_for, slice_query, store_dataset

PAPER_Z, PAPER_M, PAPER_N = 512, 2000, 100_000


def stats64(mat):
    mat = np.asarray(mat, dtype=np.float64)
    mean = mat.mean(axis=-1)
    std = np.sqrt(((mat - mean[..., None]) ** 2).mean(axis=-1))
    return mean, std


@pytest.fixture(scope="module")
def paper_batch():
    return gen_batch(PAPER_Z, PAPER_M, seed=2024)


@pytest.fixture(scope="module")
def paper_reference():
    return gen_reference(PAPER_N, seed=2024)


@pytest.mark.criterion("AC1 oracle equivalence: verify, 100 random instances, bit-exact (f32)")
def test_ac1_oracle_equivalence(capsys):
    start = time.perf_counter()
    failures = verify(100, seed=7)
    assert failures == []
    assert main(["verify", "--instances", "100", "--seed", "7"]) == 0
    assert "100/100" in capsys.readouterr().out
    assert time.perf_counter() - start < 60


@pytest.mark.criterion("AC2 desk-scale batch Z=16 M=200 N=10000 L=64 W=14 matches oracle bit-exactly")
def test_ac2_desk_scale_batch():
    start = time.perf_counter()
    batch = normalize_batch(gen_batch(16, 200, seed=99))
    ref = normalize_series(gen_reference(10_000, seed=99))
    got = align_batch(batch, ref, EngineConfig(64, 14)).costs
    want = np.array([sdtw_min(batch.query(q), ref).cost for q in range(16)], dtype=np.float32)
    assert got.tobytes() == want.tobytes()
    assert time.perf_counter() - start < 120


@pytest.mark.criterion("AC3 hand fixture q=[1,2] r=[0,1,2]: matrix, cost 0 at end_col 2")
def test_ac3_hand_fixture():
    assert sdtw_full([1, 2], [0, 1, 2]).tolist() == [[1, 0, 1], [5, 1, 0]]
    res = sdtw_min([1, 2], [0, 1, 2])
    assert res.cost == 0 and res.end_col == 2
    assert align_query([1, 2], [0, 1, 2]) == 0


@pytest.mark.criterion("AC4 embedding: 50 references N=1000, slices M=64 align to exactly 0")
def test_ac4_embedding():
    rng = np.random.default_rng(4)
    for i in range(50):
        ref = gen_reference(1000, seed=1000 + i)
        start = int(rng.integers(0, 1000 - 64 + 1))
        assert align_query(slice_query(ref, start, 64), ref) == 0.0


@pytest.mark.criterion("AC5 reference-extension monotonicity over 50 instances (+100 samples)")
def test_ac5_reference_extension():
    rng = np.random.default_rng(5)
    for _ in range(50):
        m = int(rng.integers(4, 129))
        n = int(rng.integers(8, 1025))
        q = rng.standard_normal(m).astype(np.float32)
        r = rng.standard_normal(n).astype(np.float32)
        longer = np.concatenate([r, rng.standard_normal(100).astype(np.float32)])
        cfg = EngineConfig(int(rng.choice([1, 4, 64])), int(rng.integers(1, 17)))
        assert align_query(q, longer, cfg) <= align_query(q, r, cfg)


@pytest.mark.criterion("AC6 normalizer Z=512 M=2000: |mean|<=1e-5, |std-1|<=1e-4, affine 1e-4, zero-variance")
def test_ac6_normalizer(paper_batch):
    start = time.perf_counter()
    out = normalize_batch(paper_batch)
    elapsed = time.perf_counter() - start
    mean, std = stats64(out.as_matrix())
    assert np.abs(mean).max() <= 1e-5
    assert np.abs(std - 1).max() <= 1e-4

    scaled = QueryBatch(np.float32(2.5) * paper_batch.values + np.float32(-3.0), PAPER_Z, PAPER_M)
    diff = np.abs(normalize_batch(scaled).values - out.values)
    assert diff.max() <= 1e-4

    mat = paper_batch.as_matrix().copy()
    mat[[3, 100]] = [[7.25], [0.0]]
    flat = normalize_batch(QueryBatch.from_queries(mat)).as_matrix()
    assert not flat[[3, 100]].any()
    assert elapsed < 5


@pytest.mark.criterion("AC7 f16: within rel 1e-2 of f32 and bit-exact vs f16 oracle on 50 instances")
def test_ac7_packed16():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = int(rng.integers(4, 257))
        n = int(rng.integers(8, 1025))
        q = normalize_series(rng.standard_normal(m))
        r = normalize_series(rng.standard_normal(n))
        cfg16 = EngineConfig(64, 14, "f16")
        full = align_query(q, r, EngineConfig(64, 14))
        half = align_query(q, r, cfg16)
        assert abs(float(half) - float(full)) <= 1e-2 * abs(float(full))
        assert half.tobytes() == sdtw_min(q, r, "f16").cost.tobytes()


@pytest.mark.criterion("AC8 gsps(1024000, 1000) == 0.001024 exactly; injected nondeterminism detected")
def test_ac8_metric_and_self_test():
    assert measure_gsps(1_024_000, 1000) == 0.001024
    calls = iter(range(100))

    def flaky(inputs):
        return np.array([next(calls)], np.float32)

    inputs = BenchInputs(QueryBatch(np.zeros(4, np.float32), 1, 4), np.zeros(8, np.float32))
    with pytest.raises(DeterminismError):
        run_benchmark(flaky, inputs, runs=3, warmups=0)


@pytest.mark.criterion("AC9 paper-scale bench (runs=10, warmups=2) and 19-row W=2..20 sweep")
def test_ac9_paper_scale(paper_batch, paper_reference, capsys):
    batch = normalize_batch(paper_batch)
    ref = normalize_series(paper_reference)
    report = run_benchmark("sdtw", BenchInputs(batch, ref, EngineConfig(64, 14)), runs=10, warmups=2)
    assert report.runs == 10 and report.warmups == 2 and len(report.times_ms) == 10
    assert report.result.shape == (PAPER_Z,) and np.all(np.isfinite(report.result))
    assert report.mean_gsps == pytest.approx(
        np.mean([measure_gsps(PAPER_Z * PAPER_M, t) for t in report.times_ms]))

    # sweep on 8 of the paper's queries; widths must agree bit-for-bit
    sub = QueryBatch(batch.values[:8 * PAPER_M], 8, PAPER_M)
    sweep = run_sweep(range(2, 21), BenchInputs(sub, ref, EngineConfig(64, 14)), runs=2, warmups=1)
    rows = sweep.table_rows()
    assert len(rows) == 19 and [r["W"] for r in rows] == list(range(2, 21))
    assert all(r.result.tobytes() == report.result[:8].tobytes() for r in sweep.rows)
    with capsys.disabled():
        print()
        print(format_rows([report.row()]), end="")
        print(format_rows(rows), end="")


@pytest.mark.criterion("AC10 dataset round-trip of the Z=512 batch; gen_batch bit-identical across runs")
def test_ac10_round_trip(paper_batch, tmp_path):
    store_dataset(manifest_for(paper_batch, seed=2024), paper_batch, tmp_path / "batch")
    manifest, back = load_dataset(tmp_path / "batch")
    assert back.values.tobytes() == paper_batch.values.tobytes()
    assert manifest == manifest_for(paper_batch, seed=2024)
    assert gen_batch(PAPER_Z, PAPER_M, seed=2024).values.tobytes() == paper_batch.values.tobytes()
