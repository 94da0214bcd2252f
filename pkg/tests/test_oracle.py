import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavesdtw.oracle import sdtw_full, sdtw_min
from wavesdtw.series import slice_query


def brute_force_cost(q, r):
    """Minimum over every monotone warp path from row 0 to row M-1.

    Sums run along the path in binary32 from its start, the same order the
    recurrence accumulates in, so the result is exactly comparable.
    """
    q = np.asarray(q, np.float32)
    r = np.asarray(r, np.float32)
    m, n = q.size, r.size
    d = [[np.float32(q[i] - r[j]) * np.float32(q[i] - r[j]) for j in range(n)] for i in range(m)]
    best = np.float32(np.inf)

    def walk(i, j, acc):
        nonlocal best
        if i == m - 1:
            best = min(best, acc)
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            ni, nj = i + di, j + dj
            if ni < m and nj < n:
                walk(ni, nj, np.float32(acc + d[ni][nj]))

    for j0 in range(n):
        walk(0, j0, d[0][j0])
    return best


def test_hand_fixture():
    mat = sdtw_full([1, 2], [0, 1, 2])
    assert mat.tolist() == [[1, 0, 1], [5, 1, 0]]
    res = sdtw_min([1, 2], [0, 1, 2])
    assert res.cost == 0 and res.end_col == 2


def test_single_cell():
    assert sdtw_full([3.5], [1.0]).tolist() == [[6.25]]


def test_single_row():
    res = sdtw_min([5], [1, 2])
    assert res.cost == 9 and res.end_col == 1


def test_self_alignment_diagonal():
    x = np.random.default_rng(0).standard_normal(20).astype(np.float32)
    assert np.all(np.diag(sdtw_full(x, x)) == 0)


def test_tie_break_smallest_column():
    res = sdtw_min([1], [0, 2, 1, 1, 0])
    assert res.cost == 0 and res.end_col == 2


def test_empty_inputs():
    with pytest.raises(ValueError):
        sdtw_min([], [1, 2])
    with pytest.raises(ValueError):
        sdtw_full([1], [])


@pytest.mark.parametrize("precision", ["f32", "f16"])
def test_rolling_matches_full_matrix(precision):
    rng = np.random.default_rng(4)
    q = rng.standard_normal(17).astype(np.float32)
    r = rng.standard_normal(60).astype(np.float32)
    mat = sdtw_full(q, r, precision)
    res = sdtw_min(q, r, precision)
    assert res.cost == mat[-1].min()
    assert res.end_col == int(np.argmin(mat[-1]))


def test_recurrence_cellwise():
    rng = np.random.default_rng(8)
    q = rng.standard_normal(9).astype(np.float32)
    r = rng.standard_normal(13).astype(np.float32)
    mat = sdtw_full(q, r)
    for i in range(q.size):
        for j in range(r.size):
            d = np.float32(q[i] - r[j]) ** 2
            if i == 0:
                want = d
            elif j == 0:
                want = np.float32(mat[i - 1, 0] + d)
            else:
                want = np.float32(min(mat[i - 1, j - 1], mat[i - 1, j], mat[i, j - 1]) + d)
            assert mat[i, j] == want


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_brute_force_paths(m, n, seed):
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(m).astype(np.float32)
    r = rng.standard_normal(n).astype(np.float32)
    assert sdtw_min(q, r).cost == brute_force_cost(q, r)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(1, 80), st.integers(0, 2 ** 32 - 1))
def test_embedding_and_nonnegativity(m, n, seed):
    rng = np.random.default_rng(seed)
    r = (rng.standard_normal(max(n, m)) * 10).astype(np.float32)
    start = int(rng.integers(0, r.size - m + 1))
    assert sdtw_min(slice_query(r, start, m), r).cost == 0
    q = rng.standard_normal(m).astype(np.float32)
    assert sdtw_min(q, r).cost >= 0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(1, 60), st.integers(1, 40), st.integers(0, 2 ** 32 - 1))
def test_reference_extension_monotone(m, n, extra, seed):
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(m).astype(np.float32)
    r = rng.standard_normal(n).astype(np.float32)
    longer = np.concatenate([r, rng.standard_normal(extra).astype(np.float32)])
    assert sdtw_min(q, longer).cost <= sdtw_min(q, r).cost
    assert np.array_equal(sdtw_full(q, longer)[:, :n], sdtw_full(q, r))
