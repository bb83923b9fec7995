import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stabrep import gf2
from stabrep.codes import builtin
from stabrep.gf2 import BitMatrix, PauliVector


def bitmats(max_rows=8, max_cols=12):
    return st.tuples(st.integers(1, max_rows), st.integers(1, max_cols)).flatmap(
        lambda s: arrays(np.uint8, s, elements=st.integers(0, 1)))


def paulis(n):
    return st.tuples(arrays(np.uint8, n, elements=st.integers(0, 1)),
                     arrays(np.uint8, n, elements=st.integers(0, 1))).map(lambda t: PauliVector(*t))


def brute_rank(m):
    # size of the row space by enumeration
    m = np.asarray(m)
    span = {tuple(np.bitwise_xor.reduce(m[list(c)], axis=0)) if c else tuple([0] * m.shape[1])
            for r in range(m.shape[0] + 1) for c in itertools.combinations(range(m.shape[0]), r)}
    return int(np.log2(len(span)))


def test_symplectic_examples():
    x1 = PauliVector.from_string("XI")
    z1 = PauliVector.from_string("ZI")
    assert gf2.symplectic_product(x1, z1) == 1
    assert gf2.symplectic_product(x1, x1) == 0
    assert gf2.symplectic_product(PauliVector.from_string("YY"), PauliVector.from_string("XX")) == 0


def test_symplectic_dimension_mismatch():
    with pytest.raises(ValueError):
        gf2.symplectic_product(PauliVector.from_string("X"), PauliVector.from_string("XX"))


def test_pauli_string_roundtrip():
    p = PauliVector.from_string("XIZY")
    assert list(p.x) == [1, 0, 0, 1] and list(p.z) == [0, 0, 1, 1]
    assert str(p) == "XIZY"
    assert p.weight == 3
    assert PauliVector.from_symplectic(p.symplectic()) == p


def test_row_reduce_examples():
    assert gf2.row_reduce(np.eye(3, dtype=np.uint8))[1] == 3
    assert gf2.row_reduce([[1, 1], [1, 1]])[1] == 1
    assert gf2.row_reduce(builtin("c422").h)[1] == 2


def test_solve_examples():
    b = np.array([1, 0, 1], dtype=np.uint8)
    assert np.array_equal(gf2.solve(np.eye(3, dtype=np.uint8), b), b)
    assert list(gf2.solve([[1, 1]], [1])) == [1, 0]
    assert gf2.solve([[1], [1]], [1, 0]) is None


def test_nullspace_examples():
    assert gf2.nullspace(np.eye(4, dtype=np.uint8)).shape[0] == 0
    assert gf2.nullspace([[1, 1]]).tolist() == [[1, 1]]


def test_bitmatrix_immutable_and_binary():
    m = BitMatrix([[1, 0, 1], [0, 1, 1]])
    assert m.shape == (2, 3)
    assert set(np.unique(m.to_array())) <= {0, 1}
    with pytest.raises(ValueError):
        m.to_array()[0, 0] = 0
    with pytest.raises(ValueError):
        BitMatrix([[2, 0]])
    assert BitMatrix.from_strings(m.to_strings()) == m
    assert m.T.shape == (3, 2)


def test_bitmatrix_wide_packing():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 2, (5, 130), dtype=np.uint8)
    assert np.array_equal(BitMatrix(a).to_array(), a)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(paulis(n), paulis(n), paulis(n))))
def test_symplectic_bilinear(uvw):
    u, v, w = uvw
    assert gf2.symplectic_product(u * w, v) == gf2.symplectic_product(u, v) ^ gf2.symplectic_product(w, v)


@settings(max_examples=60, deadline=None)
@given(bitmats())
def test_row_reduce_preserves_row_space(m):
    red, r, piv = gf2.row_reduce(m)
    red = red.to_array()
    assert r == brute_rank(m) == len(piv)
    for row in m:
        assert gf2.in_rowspace(row, red[:r]) if r else not row.any()
    # echelon: pivots strictly increase and pivot columns are unit vectors
    assert piv == sorted(piv)
    for i, p in enumerate(piv):
        assert red[i, p] == 1 and red[:, p].sum() == 1


@settings(max_examples=60, deadline=None)
@given(bitmats(), st.data())
def test_solve_satisfies_system(m, data):
    b = data.draw(arrays(np.uint8, m.shape[0], elements=st.integers(0, 1)))
    x = gf2.solve(m, b)
    consistent = any(np.array_equal(gf2.matmul(m, np.array(c, np.uint8)), b)
                     for c in itertools.product((0, 1), repeat=m.shape[1])) if m.shape[1] <= 10 else None
    if x is not None:
        assert np.array_equal(gf2.matmul(m, x), b)
    if consistent is not None:
        assert (x is not None) == consistent


@settings(max_examples=60, deadline=None)
@given(bitmats())
def test_nullspace_basis(m):
    ns = gf2.nullspace(m)
    assert ns.shape[0] == m.shape[1] - gf2.rank(m)
    if ns.shape[0]:
        assert not gf2.matmul(m, ns.T).any()
        assert gf2.rank(ns) == ns.shape[0]


@settings(max_examples=40, deadline=None)
@given(bitmats(6, 6))
def test_inverse(m):
    if m.shape[0] != m.shape[1] or gf2.rank(m) < m.shape[0]:
        return
    inv = gf2.inverse(m)
    assert np.array_equal(gf2.matmul(m, inv), np.eye(m.shape[0], dtype=np.uint8))


def test_sparse_matches_dense():
    rng = np.random.default_rng(1)
    a = (rng.random((30, 50)) < 0.1).astype(np.uint8)
    v = rng.integers(0, 2, 50, dtype=np.uint8)
    s = gf2.SparseBitMatrix(a)
    assert np.array_equal(s.matvec(v), gf2.matmul(a, v))
    assert np.array_equal(s.to_dense(), a)
    assert np.array_equal(s.T.to_dense(), a.T)
    assert np.array_equal(gf2.SparseBitMatrix.from_rows(s.rows_as_lists(), 50).to_dense(), a)


def test_complement_basis():
    space = np.eye(4, dtype=np.uint8)
    sub = np.array([[1, 1, 0, 0]], dtype=np.uint8)
    comp = gf2.complement_basis(space, sub)
    assert gf2.rank(np.vstack([sub, comp])) == 4
    assert comp.shape[0] == 3
