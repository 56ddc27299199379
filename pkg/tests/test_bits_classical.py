import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qexpander import bits
from qexpander.classical import (
    ClassicalCode,
    ParityMatrix,
    bitflip_decode,
    kernel_basis,
    min_distance_bruteforce,
    rank_gf2,
    syndrome,
)
from qexpander.errors import BudgetExceeded, DimensionMismatch
from qexpander.graphs import BipartiteGraph, sample_biregular


def dense_rank_gf2(a: np.ndarray) -> int:
    a = a.copy() % 2
    r = 0
    for c in range(a.shape[1]):
        piv = next((i for i in range(r, a.shape[0]) if a[i, c]), None)
        if piv is None:
            continue
        a[[r, piv]] = a[[piv, r]]
        for i in range(a.shape[0]):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        r += 1
    return r


matrices = st.integers(1, 7).flatmap(
    lambda r: st.integers(1, 9).flatmap(
        lambda c: st.lists(st.lists(st.integers(0, 1), min_size=c, max_size=c), min_size=r, max_size=r)
    )
)


@given(st.sets(st.integers(0, 200)))
def test_bits_roundtrip(idx):
    b = bits.from_indices(idx)
    assert bits.to_indices(b) == sorted(idx)
    assert bits.weight(b) == len(idx)
    arr = bits.to_bool_array(b, 201)
    assert bits.from_bool_array(arr) == b


@given(matrices)
def test_rank_matches_dense_elimination(rows):
    a = np.array(rows, dtype=np.uint8)
    assert rank_gf2(ParityMatrix.from_dense(a)) == dense_rank_gf2(a)


@given(matrices)
def test_kernel_basis_is_a_basis(rows):
    a = np.array(rows, dtype=np.uint8)
    m = ParityMatrix.from_dense(a)
    ker = kernel_basis(m)
    assert len(ker) == m.n_cols - rank_gf2(m)
    assert rank_gf2(ker) == len(ker)
    for v in ker:
        assert m.apply(v) == 0
        x = bits.to_bool_array(v, m.n_cols).astype(np.int64)
        assert not np.any((a.astype(np.int64) @ x) % 2)


@given(matrices, st.data())
def test_apply_matches_dense_product(rows, data):
    a = np.array(rows, dtype=np.uint8)
    m = ParityMatrix.from_dense(a)
    x = data.draw(st.lists(st.integers(0, 1), min_size=m.n_cols, max_size=m.n_cols))
    want = (a.astype(np.int64) @ np.array(x)) % 2
    assert m.apply(bits.from_bool_array(np.array(x, dtype=bool))) == bits.from_bool_array(want.astype(bool))


def test_text_roundtrip(tmp_path):
    m = ParityMatrix.from_dense([[1, 0, 1], [0, 1, 1]])
    m.write(tmp_path / "h.txt")
    assert ParityMatrix.read(tmp_path / "h.txt") == m
    assert ParityMatrix.loads(m.dumps()) == m


def test_row_overflow_rejected():
    with pytest.raises(DimensionMismatch):
        ParityMatrix(1, 2, (0b100,))


def test_repetition_code_distance_and_bitflip():
    # cyclic repetition code: every bit in two checks
    h = np.array([[1 if j in (i, (i + 1) % 5) else 0 for j in range(5)] for i in range(5)])
    g = BipartiteGraph.from_matrix(h)
    code = ClassicalCode(g)
    assert min_distance_bruteforce(code.matrix, 5) == 5
    for v in range(5):
        res = bitflip_decode(code, syndrome(code, 1 << v))
        assert res.converged and res.estimate == 1 << v


def test_bitflip_weights_strictly_decrease():
    g = sample_biregular(12, 9, 3, 4, seed=3)
    code = ClassicalCode(g)
    rng = np.random.default_rng(0)
    for _ in range(50):
        e = bits.from_bool_array(rng.random(12) < 0.2)
        res = bitflip_decode(code, syndrome(code, e))
        assert all(a > b for a, b in zip(res.weights, res.weights[1:]))
        assert res.outcome in ("converged", "stalled", "iteration_cap")


def test_distance_budget():
    m = ParityMatrix.from_dense(np.eye(30, dtype=np.uint8))
    with pytest.raises(BudgetExceeded):
        min_distance_bruteforce(m, 30, budget=100)
