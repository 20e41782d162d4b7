import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import block_diag

from qsplit.decomp import canonical_decomposition, tuple_decomposition, unitary_part
from qsplit.errors import InvalidArg, NonUnimodularQ, UnsupportedSignature
from qsplit.genlab import (
    clock_shift,
    omega,
    planted_dc_tuple,
    planted_tuple,
    random_contraction,
    random_unitary,
    shift_phase_pair,
)
from qsplit.numkit import opnorm, principal_angle_distance
from qsplit.opmodel import classify, relation_residual, verify_contraction, verify_doubly

seeds = st.integers(0, 2**31 - 1)


def test_clock_shift_d2_is_pauli():
    Z, X = clock_shift(2).operators
    assert np.allclose(Z, np.diag([1, -1]))
    assert np.allclose(X, [[0, 1], [1, 0]])
    assert np.allclose(Z @ X, -X @ Z)


@pytest.mark.parametrize("d", range(2, 9))
def test_clock_shift_relations(d):
    tup = clock_shift(d)
    assert tup.commutation.q[0, 1] == pytest.approx(omega(d))
    assert relation_residual(tup, "plain").max() <= 1e-12
    assert verify_doubly(tup)
    assert all(classify(T).atom_A == "A1" for T in tup.operators)


def test_clock_shift_needs_d2():
    with pytest.raises(InvalidArg):
        clock_shift(1)


def test_shift_phase_pair():
    tup = shift_phase_pair(3, omega(3))
    assert relation_residual(tup, "doubly").max() <= 1e-14
    assert tuple_decomposition(tup).dims()["cu"] == 3
    J, D = tup.operators
    assert classify(J).atom_A == "A2" and classify(D).atom_A == "A1"
    c = classify(shift_phase_pair(3, omega(3), 0.5).operators[0])
    assert c.cnu and c.cni
    with pytest.raises(NonUnimodularQ):
        shift_phase_pair(3, 1.1)


def test_planted_pair_shape():
    p = planted_tuple(2, 3, seed=0)
    assert p.tuple.dim == 12
    W = p.conjugator
    assert opnorm(W.conj().T @ W - np.eye(12)) <= 1e-12
    frames = np.hstack([S.frame for S in p.ground_truth.values()])
    assert opnorm(frames.conj().T @ frames - np.eye(12)) <= 1e-12


def test_planted_single():
    p = planted_tuple(1, 2, {"u": 2, "c": 2}, seed=3)
    assert canonical_decomposition(p.tuple.operators[0]).dims() == {"u": 2, "c": 2}


def test_planted_is_deterministic():
    a = planted_tuple(2, 3, seed=7)
    b = planted_tuple(2, 3, seed=7)
    for A, B in zip(a.tuple.operators, b.tuple.operators):
        assert np.array_equal(A, B)


def test_planted_rejects_bad_signatures():
    with pytest.raises(UnsupportedSignature):
        planted_tuple(2, 3, {"ux": 3})
    with pytest.raises(UnsupportedSignature):
        planted_tuple(2, 3, {"uu": 4})
    with pytest.raises(InvalidArg):
        planted_tuple(4, 3)


@given(st.integers(1, 3), st.integers(2, 3), seeds)
def test_planted_ground_truth_recovered(n, d_block, seed):
    p = planted_tuple(n, d_block, seed=seed)
    assert verify_doubly(p.tuple)
    r = tuple_decomposition(p.tuple)
    for sig, S in p.ground_truth.items():
        assert principal_angle_distance(r.parts[sig].subspace, S) <= 1e-8


def test_planted_dc_tuple_blocks():
    p = planted_dc_tuple(3, 0)
    assert p.tuple.dim == 9
    assert relation_residual(p.tuple, "plain").max() <= 1e-12
    assert not verify_doubly(p.tuple)


@given(st.integers(1, 10), seeds)
def test_random_generators(d, seed):
    U = random_unitary(d, seed)
    assert opnorm(U.conj().T @ U - np.eye(d)) <= 1e-12
    T = random_contraction(d, seed)
    assert verify_contraction(T).ok
    assert np.array_equal(T, random_contraction(d, seed))


@pytest.mark.parametrize("seed", range(100))
def test_random_contraction_has_no_unitary_part(seed):
    assert unitary_part(random_contraction(6, seed)).dim == 0
