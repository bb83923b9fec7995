import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabrep import gf2
from stabrep.codes import builtin, make_code
from stabrep.gf2 import PauliVector
from stabrep.tableau import (
    Tableau, bell_measure, distillation_generators, fidelity_with_bell_pairs, holds, prepare_bell_pair,
    prepare_distillation_resource, prepare_from_generators, prepare_repeater_resource, raw_syndrome,
    repeater_generators, resource_by_measurement, run_protocol_reference, run_swap_reference,
)

BUILTINS = ["c422", "steane713", "five513", "repetition(3)", "repetition(5)"]


def trivial_code(n):
    # k = n: no stabilizers, single-qubit logicals
    return make_code(np.zeros((0, 2 * n), np.uint8))


def test_initial_state_and_single_qubit_measurements():
    t = Tableau(3, np.random.default_rng(0))
    assert t.check_invariants()
    assert t.peek([0], "Z") == 0
    assert t.peek([1], "X") is None
    t.apply_pauli([1], "X")
    assert t.measure([1], "Z") == 1
    assert t.measure([0, 1], "ZZ") == 1
    assert t.check_invariants()


def test_measurement_collapses():
    t = Tableau(1, np.random.default_rng(1))
    first = t.measure([0], "X")
    assert t.measure([0], "X") == first
    assert t.peek([0], "Z") is None


def test_bad_arguments():
    t = Tableau(2)
    with pytest.raises(ValueError):
        t.measure([0], "XX")
    with pytest.raises(IndexError):
        t.measure([5], "X")
    with pytest.raises(ValueError):
        t.measure([0, 0], "XX")
    with pytest.raises(ValueError):
        Tableau(100)
    with pytest.raises(ValueError):
        bell_measure(t, 0, 0)


@pytest.mark.parametrize("pauli,expected", [("I", (0, 0)), ("X", (0, 1)), ("Z", (1, 0)), ("Y", (1, 1))])
def test_bell_measure_examples(pauli, expected):
    # Pauli on one half of |Phi+> is read out as (s, t)
    t = Tableau(2, np.random.default_rng(2))
    prepare_bell_pair(t, 0, 1)
    t.apply_pauli([0], pauli)
    assert bell_measure(t, 0, 1) == expected


def test_bell_measure_uniform_on_mixed_input():
    # halves of two unrelated pairs: all four outcomes equally likely
    rng = np.random.default_rng(3)
    counts = np.zeros(4)
    runs = 4000
    for _ in range(runs):
        t = Tableau(4, rng)
        prepare_bell_pair(t, 0, 2)
        prepare_bell_pair(t, 1, 3)
        s, tt = bell_measure(t, 0, 1)
        counts[2 * s + tt] += 1
    chi2 = ((counts - runs / 4) ** 2 / (runs / 4)).sum()
    assert chi2 < 16.27  # 3 dof, p = 0.001


def test_bell_measure_teleports():
    # measuring (1,2) of |psi>_1 |Phi+>_23 leaves X^t Z^s |psi> on qubit 3
    rng = np.random.default_rng(4)
    for _ in range(20):
        t = Tableau(3, rng)
        t.measure([0], "X")
        want = t.peek([0], "X")
        prepare_bell_pair(t, 1, 2)
        s, tt = bell_measure(t, 0, 1)
        if s:
            t.apply_pauli([2], "Z")
        if tt:
            t.apply_pauli([2], "X")
        assert t.peek([2], "X") == want


@pytest.mark.parametrize("name", BUILTINS)
def test_resources_hold(name):
    code = builtin(name)
    rng = np.random.default_rng(5)
    t = prepare_distillation_resource(code, rng)
    assert t.check_invariants()
    assert holds(t, range(t.q), distillation_generators(code))
    t = prepare_repeater_resource(code, rng)
    assert holds(t, range(t.q), repeater_generators(code))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_trivial_code_resources_are_bell_pairs(n):
    code = trivial_code(n)
    assert code.k == n
    t = prepare_distillation_resource(code, np.random.default_rng(6))
    assert fidelity_with_bell_pairs(t, [(i, n + i) for i in range(n)]) == 1.0


@pytest.mark.parametrize("name", BUILTINS)
def test_generators_independent_and_commuting(name):
    code = builtin(name)
    for gens in (distillation_generators(code), repeater_generators(code)):
        assert gf2.rank(gens) == gens.shape[0] == gens.shape[1] // 2
        assert not gf2.symplectic_matrix(gens, gens).any()


@pytest.mark.parametrize("name", ["c422", "steane713", "five513"])
def test_swap_parity(name):
    code = builtin(name)
    rng = np.random.default_rng(7)
    for _ in range(10):
        r = run_swap_reference(code, rng)
        assert np.array_equal(r["a"] ^ r["b"], raw_syndrome(code, r["s"], r["t"]))


@pytest.mark.parametrize("name", ["c422", "steane713", "repetition(3)"])
@pytest.mark.parametrize("kind", ["repeater", "distill"])
def test_order_exchange(name, kind):
    # building the resource by measurement matches direct preparation
    code = builtin(name)
    gens = repeater_generators(code) if kind == "repeater" else distillation_generators(code)
    rng = np.random.default_rng(8)
    for _ in range(5):
        t, qubits = resource_by_measurement(code, kind, rng)
        assert t.check_invariants()
        assert holds(t, qubits, gens)


def test_fidelity_examples():
    rng = np.random.default_rng(9)
    t = Tableau(4, rng)
    prepare_bell_pair(t, 0, 1)
    prepare_bell_pair(t, 2, 3)
    assert fidelity_with_bell_pairs(t, [(0, 1), (2, 3)]) == 1.0
    t.apply_pauli([3], "Y")
    assert fidelity_with_bell_pairs(t, [(0, 1), (2, 3)]) == 0.0
    assert fidelity_with_bell_pairs(t, [(0, 1)]) == 1.0
    p = Tableau(2, rng)
    # |00> has overlap 1/2 with |Phi+>
    assert fidelity_with_bell_pairs(p, [(0, 1)]) == 0.5
    # one half of a different pair: maximally mixed on the pair
    m = Tableau(4, rng)
    prepare_bell_pair(m, 0, 2)
    prepare_bell_pair(m, 1, 3)
    assert fidelity_with_bell_pairs(m, [(0, 1)]) == 0.25


def test_no_correction_logical_error_drops_fidelity():
    code = builtin("steane713")
    lx = PauliVector.from_symplectic(code.logical_x.to_array()[0])
    rec = run_protocol_reference(code, lx, None, decoder=lambda s: np.zeros(14, np.uint8),
                                 rng=np.random.default_rng(10))
    assert rec.failure and rec.fidelity <= 0.5


def test_perfect_knowledge_restores_fidelity():
    code = builtin("c422")
    rng = np.random.default_rng(11)
    for pa, pb in itertools.product(["XIII", "IYII", "IIZZ"], repeat=2):
        rec = run_protocol_reference(code, pa, pb, rng=rng)
        assert not rec.failure and rec.fidelity == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.lists(st.tuples(st.integers(0, 5), st.sampled_from("XYZ")), max_size=12),
       st.integers(0, 2**32 - 1))
def test_random_measurements_keep_invariants(q, ops, seed):
    t = Tableau(q, np.random.default_rng(seed))
    for i, p in ops:
        i %= q
        if i % 2:
            t.apply_pauli([i], p)
        else:
            t.measure([i], p)
        j = (i + 1) % q
        if j != i:
            t.measure([i, j], p + p)
    assert t.check_invariants()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_prepare_random_css_state(seed):
    # any full commuting set is reachable, signs included
    code = builtin("steane713")
    gens = distillation_generators(code)
    rng = np.random.default_rng(seed)
    t = Tableau(8, rng)
    prepare_from_generators(t, range(8), gens)
    assert holds(t, range(8), gens)
    assert t.check_invariants()
