import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabrep import gf2
from stabrep.codes import validate
from stabrep.factory import build_family, classical_distance, girth, hgp, random_regular_ldpc


@pytest.mark.parametrize("nb,checks", [(20, 15), (24, 18), (12, 9)])
def test_regular_shape(nb, checks):
    cl = random_regular_ldpc(nb, seed=4)
    h = cl.h.to_array()
    assert h.shape == (checks, nb)
    assert set(h.sum(axis=0)) == {3}
    assert set(h.sum(axis=1)) == {4}
    assert cl.rank == checks


def test_divisibility_error():
    with pytest.raises(ValueError):
        random_regular_ldpc(7, 3, 4)


def test_deterministic_for_seed():
    a = random_regular_ldpc(16, seed=9)
    b = random_regular_ldpc(16, seed=9)
    assert a.h == b.h
    assert random_regular_ldpc(16, seed=10).h != a.h


def test_girth_constraint():
    cl = random_regular_ldpc(24, seed=1, min_girth=6)
    assert girth(cl.h) >= 6
    assert girth(np.array([[1, 1], [1, 1]])) == 4
    assert girth(np.eye(3, dtype=np.uint8)) is None


def test_classical_distance_small():
    # [7,4,3] Hamming code
    ham = np.array([[0, 0, 0, 1, 1, 1, 1], [0, 1, 1, 0, 0, 1, 1], [1, 0, 1, 0, 1, 0, 1]], dtype=np.uint8)
    assert classical_distance(ham) == 3
    assert classical_distance(np.eye(3, dtype=np.uint8)) is None


@settings(max_examples=12, deadline=None)
@given(st.sampled_from([8, 12, 16]), st.integers(0, 10**6))
def test_hgp_properties(nb, seed):
    cl = random_regular_ldpc(nb, seed=seed)
    code = hgp(cl)
    hx, hz = code.hx.to_array(), code.hz.to_array()
    assert not gf2.matmul(hx, hz.T).any()
    m = cl.n_checks
    assert code.n == nb * nb + m * m
    ha = cl.h.to_array()
    k_expected = (nb - gf2.rank(ha)) ** 2 + (m - gf2.rank(ha.T)) ** 2
    assert code.k == k_expected
    assert code.k * 25 == code.n  # full-rank (3,4) self-product
    assert max(hx.sum(axis=1).max(), hz.sum(axis=1).max()) <= 7
    assert validate(code).ok


def test_hgp_625():
    code = hgp(random_regular_ldpc(20, seed=0))
    assert (code.n, code.k) == (625, 25)
    assert code.rate == 0.04
    assert validate(code).ok
    # X-sector: ker(HZ) / rowspace(HX) has dimension k
    hx, hz = code.hx.to_array(), code.hz.to_array()
    assert gf2.nullspace(hz).shape[0] - gf2.rank(hx) == 25


def test_build_family_small():
    fam = build_family([8, 12], instances_per_size=3, seed=2)
    assert [c.n for c in fam] == [100, 225]
    again = build_family([8, 12], instances_per_size=3, seed=2)
    assert all(a.h == b.h for a, b in zip(fam, again))
    one = build_family([8], instances_per_size=1, seed=2)[0]
    first = build_family([8], instances_per_size=3, seed=2, selection="first")[0]
    assert one.h == first.h
    assert fam[0].metadata["instances_tried"] == 3
    assert fam[0].d == max(c.d for c in [build_family([8], 1, seed=2)[0]]) or fam[0].d >= one.d
