import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modlie.gf import (Echelon, Fp, SparseMatrix, check_prime, in_span, inv, rank,
                       rank_nullspace, rref)

from conftest import oracle_rank


def test_inv_examples():
    assert inv(Fp(1, 5)) == Fp(1, 5)
    assert inv(Fp(2, 5)) == Fp(3, 5)
    assert (Fp(2, 5) * Fp(3, 5)).value == 1
    for p in (3, 5, 7, 11, 251):
        assert inv(Fp(p - 1, p)).value == p - 1


def test_inv_zero_raises():
    with pytest.raises(ZeroDivisionError, match="non-invertible"):
        inv(Fp(0, 7))


@pytest.mark.parametrize("p", [2, 4, 9, 1, 257])
def test_bad_moduli_rejected(p):
    with pytest.raises(ValueError):
        check_prime(p)
    with pytest.raises(ValueError):
        Fp(1, p)


@pytest.mark.parametrize("p", [3, 5, 7, 251])
def test_inverse_property_all_residues(p):
    for x in range(1, p):
        assert (Fp(x, p) * inv(Fp(x, p))).value == 1


def test_fp_arithmetic():
    a, b = Fp(3, 7), Fp(5, 7)
    assert (a + b).value == 1
    assert (a - b).value == 5
    assert (-a).value == 4
    assert (a / b * b) == a
    assert (a ** 6).value == 1


def test_rank_nullspace_examples():
    r, ns = rank_nullspace(SparseMatrix.from_dense(np.eye(3, dtype=int), 3))
    assert r == 3 and ns == []
    r, ns = rank_nullspace(SparseMatrix(2, 2, 5))
    assert r == 0 and len(ns) == 2
    M = SparseMatrix.from_dense([[1, 2], [2, 4]], 5)
    r, ns = rank_nullspace(M)
    assert r == 1 == oracle_rank([[1, 2], [2, 4]], 5)
    assert len(ns) == 1 and not M.matvec(ns[0]).any()


def test_sparse_matrix_rejects_out_of_range():
    with pytest.raises(IndexError):
        SparseMatrix(2, 2, 3, {(2, 0): 1})


def test_no_stored_zeros():
    M = SparseMatrix(2, 2, 3, {(0, 0): 3, (1, 1): 4})
    assert M.entries == {(1, 1): 1}


def test_in_span_examples():
    ok, c = in_span([1, 1], [[1, 0], [0, 2]], 3)
    assert ok and list(c) == [1, 2]
    ok, _ = in_span([1, 0, 2], [[1, 0, 2], [0, 1, 0]], 5)
    assert ok
    ok, _ = in_span([1, 0], [], 3)
    assert not ok
    with pytest.raises(ValueError):
        in_span([1, 0, 0], [[1, 0]], 3)


matrices = st.tuples(st.sampled_from([3, 5, 7]), st.integers(1, 9), st.integers(1, 9),
                     st.integers(0, 2 ** 32 - 1))


def _random(p, r, c, seed, density=0.5):
    g = np.random.default_rng(seed)
    A = g.integers(0, p, (r, c))
    A[g.random((r, c)) > density] = 0
    return A


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_rank_agrees_with_oracle(args):
    p, r, c, seed = args
    A = _random(p, r, c, seed)
    M = SparseMatrix.from_dense(A, p)
    want = oracle_rank(A.tolist(), p)
    got, ns = rank_nullspace(M)
    assert got == want == rank(M)
    assert got + len(ns) == c
    for v in ns:
        assert not M.matvec(v).any()
    if ns:
        assert oracle_rank(np.array(ns).tolist(), p) == len(ns)
    assert rank(M.transpose()) == got
    _, piv = rref(A, p)
    assert len(piv) == want


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_rank_nullspace_independent_of_insertion_order(args):
    p, r, c, seed = args
    A = _random(p, r, c, seed)
    M1 = SparseMatrix.from_dense(A, p)
    items = list(M1.entries.items())
    np.random.default_rng(seed).shuffle(items)
    M2 = SparseMatrix(r, c, p, dict(items))
    r1, n1 = rank_nullspace(M1)
    r2, n2 = rank_nullspace(M2)
    assert r1 == r2
    assert all(np.array_equal(a, b) for a, b in zip(n1, n2))


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_echelon_streaming_and_nullspace(args):
    p, r, c, seed = args
    A = _random(p, r, c, seed, density=0.4)
    ech = Echelon(c, p)
    ech.add_rows([{int(j): int(A[i, j]) for j in np.nonzero(A[i])[0]} for i in range(r)])
    assert ech.rank == oracle_rank(A.tolist(), p)
    N = ech.nullspace()
    assert N.shape == (c - ech.rank, c)
    assert not (A @ N.T % p).any()
    for row in A:
        assert ech.contains(row)


def test_echelon_limit_stops_early():
    p = 5
    A = np.eye(6, dtype=np.int64)
    ech = Echelon(6, p, limit=3)
    assert ech.add_rows(list(A))
    assert ech.rank == 3 and ech.rows_seen == 3


def test_echelon_grows_pool():
    p, n = 7, 300
    g = np.random.default_rng(3)
    A = g.integers(0, p, (n, n))
    ech = Echelon(n, p)
    ech.add_rows(list(A))
    assert ech.rank == oracle_rank(A.tolist(), p)


def test_numba_modulo_is_nonnegative():
    # reductions of negative intermediates must land in [0, p)
    ech = Echelon(2, 3)
    ech.add_rows([[1, 2]])
    out = ech.reduce([2, 0])
    assert out.min() >= 0 and out.max() < 3
    assert list(out) == [0, 2]
