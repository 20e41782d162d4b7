import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import block_diag

from qsplit import decomp
from qsplit.decomp import (
    SlotSubspace,
    canonical_decomposition,
    cnu_tuple_decomposition,
    dc_part,
    defect_kernel_unitary_part,
    isometric_part,
    levan_decomposition,
    max_reducing_in,
    subspace_distance,
    tuple_decomposition,
    unitary_cnu_split,
    unitary_part,
    wold_decomposition,
)
from qsplit.errors import InvalidArg, NotAContraction, NotCNU, NotDoublyCommuting, NotQCommuting
from qsplit.genlab import (
    CNU_SCALE,
    clock,
    clock_shift,
    cyclic_shift,
    jordan,
    omega,
    phase_diag,
    planted_contraction,
    planted_dc_tuple,
    planted_tuple,
    random_contraction,
    random_unitary,
    shift_phase_pair,
)
from qsplit.numkit import Subspace, compress, containment_gap, opnorm, principal_angle_distance, reduction_residual
from qsplit.opmodel import CommutationData, OperatorTuple, ShiftBlock, StructuredOperator, classify, verify_doubly

from conftest import e

seeds = st.integers(0, 2**31 - 1)


def span(*vs):
    return Subspace.span(np.column_stack(vs))


def check_partition(result, ops, extra=()):
    d = result.diagnostics
    assert d.completeness_residual <= 1e-9
    assert d.orthogonality_residual <= 1e-10
    for part in result.parts.values():
        S = part.subspace
        if isinstance(S, SlotSubspace):
            continue
        for X in list(ops) + list(extra):
            assert reduction_residual(X, S) <= 1e-9


# -- max_reducing_in ---------------------------------------------------------


def test_max_reducing_full_space():
    K = max_reducing_in([np.diag([1, 0.5])], Subspace.full(2))
    assert K.dim == 2


def test_max_reducing_jordan_isometric_kernel():
    assert max_reducing_in([jordan(2)], span(e(2, 1))).dim == 0


def test_max_reducing_eigenvector():
    K = max_reducing_in([clock(3)], span(e(3, 0)))
    assert principal_angle_distance(K, span(e(3, 0))) < 1e-14


@given(st.integers(2, 8), seeds)
def test_max_reducing_result_reduces_and_is_contained(d, seed):
    T = random_contraction(d, seed)
    # plant a reducing subspace and search inside a slightly larger W
    W0 = random_unitary(d, seed + 1)
    k = d // 2
    T = W0 @ block_diag(random_contraction(k, seed + 2), random_contraction(d - k, seed + 3)) @ W0.conj().T
    W = Subspace(W0[:, : k + 1])
    K = max_reducing_in([T], W)
    assert K.dim >= k
    assert containment_gap(K, W) <= 1e-9
    assert reduction_residual(T, K) <= 1e-9


# -- unitary / isometric part ------------------------------------------------


def test_unitary_part_examples():
    assert principal_angle_distance(unitary_part(np.diag([1, 0.5])), span(e(2, 0))) < 1e-14
    assert unitary_part(jordan(3)).dim == 0


def test_unitary_part_planted_example():
    U = random_unitary(3, 1)
    W = random_unitary(5, 2)
    T = W @ block_diag(U, 0.5 * np.eye(2)) @ W.conj().T
    assert principal_angle_distance(unitary_part(T), Subspace(W[:, :3])) <= 1e-9


def test_unitary_part_rejects_noncontraction():
    with pytest.raises(NotAContraction):
        unitary_part(2 * np.eye(2))


def test_isometric_part_examples():
    assert principal_angle_distance(isometric_part(np.diag([1, 0.5])), span(e(2, 0))) < 1e-14
    assert isometric_part(jordan(3)).dim == 0
    T = StructuredOperator((ShiftBlock("shift", 1), 0.5 * np.eye(2)))
    P = isometric_part(T)
    assert P.shift_slots == [0] and P.dim == 0


@given(st.integers(1, 10), seeds)
def test_isometric_part_equals_unitary_part(d, seed):
    T, _ = planted_contraction(d // 2, d - d // 2, seed)
    assert principal_angle_distance(isometric_part(T), unitary_part(T)) <= 1e-9


# -- defect-kernel cross-oracle ----------------------------------------------


def test_defect_kernel_examples():
    K = defect_kernel_unitary_part(np.diag([1, 0.5]), max_n=1)
    assert principal_angle_distance(K, span(e(2, 0))) < 1e-12
    assert defect_kernel_unitary_part(jordan(3), max_n=3).dim == 0


@given(st.integers(1, 12), st.integers(0, 6), seeds)
def test_defect_kernel_matches_fixed_point(d, a, seed):
    a = min(a, d)
    T, _ = planted_contraction(a, d - a, seed)
    assert principal_angle_distance(defect_kernel_unitary_part(T), unitary_part(T)) <= 1e-8


# -- canonical / Levan -------------------------------------------------------


def test_canonical_examples():
    U = random_unitary(4, 0)
    r = canonical_decomposition(U)
    assert r.dims() == {"u": 4, "c": 0}
    assert canonical_decomposition(jordan(3)).dims() == {"u": 0, "c": 3}
    r = canonical_decomposition(np.diag([1, 0.5]))
    assert principal_angle_distance(r.parts["u"].subspace, span(e(2, 0))) < 1e-14
    assert principal_angle_distance(r.parts["c"].subspace, span(e(2, 1))) < 1e-14
    assert r.parts["u"].labels == ["A1"] and r.parts["c"].labels == ["A2"]


@given(st.integers(0, 6), st.integers(0, 6), seeds)
def test_canonical_planted(a, b, seed):
    if a + b == 0:
        return
    T, Hu = planted_contraction(a, b, seed)
    r = canonical_decomposition(T)
    assert r.dims() == {"u": a, "c": b}
    assert principal_angle_distance(r.parts["u"].subspace, Hu) <= 1e-8
    check_partition(r, [T])
    Tu, Tc = r.parts["u"].restrictions[0], r.parts["c"].restrictions[0]
    if a:
        assert opnorm(Tu.conj().T @ Tu - np.eye(a)) <= 1e-9
        assert canonical_decomposition(Tu).dims() == {"u": a, "c": 0}
    if b:
        assert classify(Tc).cnu
        assert canonical_decomposition(Tc).dims() == {"u": 0, "c": b}


def test_canonical_structured():
    T = StructuredOperator((ShiftBlock("shift", 1), ShiftBlock("phase", 1j), np.diag([1, 0.5])))
    r = canonical_decomposition(T)
    assert r.parts["u"].subspace.shift_slots == [1]
    assert r.parts["c"].subspace.shift_slots == [0]
    assert r.dims() == {"u": 1, "c": 1}


def test_levan_examples():
    T = StructuredOperator((ShiftBlock("shift", 1), ShiftBlock("scalar", 0.5)))
    r = levan_decomposition(T)
    assert r.parts["p"].subspace.shift_slots == [0]
    assert r.parts["n"].subspace.shift_slots == [1]
    assert levan_decomposition(jordan(3)).dims() == {"p": 0, "n": 3}
    with pytest.raises(NotCNU):
        levan_decomposition(np.diag([1, 0.5]))


# -- tuple decomposition -----------------------------------------------------


def test_tuple_clock_shift_all_unitary():
    r = tuple_decomposition(clock_shift(3))
    assert r.dims() == {"uu": 3, "uc": 0, "cu": 0, "cc": 0}


def test_tuple_jordan_phase_pair():
    w = omega(3)
    tup = OperatorTuple.dense([jordan(3), phase_diag(3, np.conj(w))], np.conj(w))
    assert tuple_decomposition(tup).dims() == {"uu": 0, "uc": 0, "cu": 3, "cc": 0}
    assert tuple_decomposition(shift_phase_pair(4, omega(4), 0.5)).dims()["cu"] == 4


@given(seeds)
def test_tuple_planted_pair(seed):
    p = planted_tuple(2, 3, seed=seed)
    r = tuple_decomposition(p.tuple)
    assert r.dims() == {"cc": 3, "cu": 3, "uc": 3, "uu": 3}
    for sig, truth in p.ground_truth.items():
        assert principal_angle_distance(r.parts[sig].subspace, truth) <= 1e-8
    check_partition(r, p.tuple.operators)


@given(st.integers(2, 4), seeds)
def test_tuple_planted_triple_and_permutation(d_block, seed):
    p = planted_tuple(3, d_block, seed=seed)
    r = tuple_decomposition(p.tuple)
    for sig, truth in p.ground_truth.items():
        assert principal_angle_distance(r.parts[sig].subspace, truth) <= 1e-8
    for perm in itertools.permutations(range(3)):
        rp = tuple_decomposition(p.tuple.permuted(perm))
        for sig, part in r.parts.items():
            psig = "".join(sig[k] for k in perm)
            assert principal_angle_distance(rp.parts[psig].subspace, part.subspace) <= 1e-8


def test_tuple_n1_matches_canonical():
    T, _ = planted_contraction(2, 3, 4)
    a = tuple_decomposition(OperatorTuple.dense([T]))
    b = canonical_decomposition(T)
    for sig in "uc":
        assert principal_angle_distance(a.parts[sig].subspace, b.parts[sig].subspace) <= 1e-10


def test_tuple_requires_doubly():
    with pytest.raises(NotDoublyCommuting):
        tuple_decomposition(OperatorTuple.dense([jordan(2), jordan(2)], 1))


def test_tuple_dense_arity_limit():
    ops = [np.eye(2)] * 9
    with pytest.raises(InvalidArg):
        tuple_decomposition(OperatorTuple.dense(ops))


def test_tuple_q_family_scalar_consistency():
    p = planted_tuple(2, 3, seed=11)
    tup = p.tuple
    lifted = OperatorTuple(tup.operators, tup.commutation.as_unitary_family(tup.dim))
    a, b = tuple_decomposition(tup), tuple_decomposition(lifted)
    for sig in a.parts:
        assert principal_angle_distance(a.parts[sig].subspace, b.parts[sig].subspace) <= 1e-9


def test_tuple_block_phases_reduce_q():
    p = planted_tuple(2, 3, seed=5, block_phases=True)
    r = tuple_decomposition(p.tuple)
    assert set(r.dims().values()) == {3}
    check_partition(r, p.tuple.operators, p.tuple.q_family())


def test_tuple_structured_slots():
    S1 = ShiftBlock("shift", 1)
    tup = OperatorTuple(
        [
            StructuredOperator((S1, ShiftBlock("scalar", 1j), jordan(2))),
            StructuredOperator((ShiftBlock("scalar", 1), S1, np.eye(2))),
        ],
        CommutationData.trivial(2),
    )
    r = tuple_decomposition(tup)
    assert r.parts["cu"].subspace.shift_slots == [0]
    assert r.parts["uc"].subspace.shift_slots == [1]
    assert r.parts["cu"].subspace.dim == 2
    assert r.diagnostics.completeness_residual == 0


# -- Levan tuples --------------------------------------------------------------


def test_cnu_tuple_dense():
    w = omega(3)
    tup = OperatorTuple.dense([jordan(3), CNU_SCALE * phase_diag(3, w)], w)
    assert cnu_tuple_decomposition(tup).dims()["nn"] == 3


def test_cnu_tuple_rejects_unitary_member():
    S = StructuredOperator((ShiftBlock("shift", 1),))
    D = StructuredOperator((ShiftBlock("phase", 1j),))
    tup = OperatorTuple([S, D], CommutationData.pair(-1j))
    with pytest.raises(NotCNU):
        cnu_tuple_decomposition(tup)


def test_cnu_tuple_structured_grouping():
    A = StructuredOperator((ShiftBlock("shift", 1), ShiftBlock("scalar", 0.5)))
    B = StructuredOperator((ShiftBlock("shift", 1), ShiftBlock("scalar", 0.3)))
    r = cnu_tuple_decomposition(OperatorTuple([A, B], CommutationData.trivial(2)))
    assert r.parts["pp"].subspace.shift_slots == [0]
    assert r.parts["nn"].subspace.shift_slots == [1]
    assert r.parts["pn"].subspace.is_zero and r.parts["np"].subspace.is_zero


# -- Wold --------------------------------------------------------------------


def test_wold_dense_isometries():
    r = wold_decomposition(clock_shift(4))
    assert r.dims()["uu"] == 4
    assert "finite-dimensional isometries are unitary" in r.warnings


def test_wold_structured_excludes_shifts():
    A = StructuredOperator((ShiftBlock("shift", 1), ShiftBlock("phase", 1j)))
    B = StructuredOperator((ShiftBlock("scalar", 1), ShiftBlock("scalar", -1)))
    r = wold_decomposition(OperatorTuple([A, B], CommutationData.trivial(2)))
    assert r.parts["uu"].subspace.shift_slots == [1]
    assert r.parts["cu"].subspace.shift_slots == [0]
    assert not r.warnings


def test_wold_rejects_non_isometry():
    with pytest.raises(NotAContraction):
        wold_decomposition(OperatorTuple.dense([jordan(2)]))


# -- H^dc and the unitary / c.n.u. split ---------------------------------------


def test_dc_part_doubly_tuple_is_full():
    assert dc_part(clock_shift(3)).dim == 3


def test_dc_part_jordan_pair_is_zero():
    tup = OperatorTuple.dense([jordan(2), jordan(2)], 1)
    assert dc_part(tup).dim == 0
    assert unitary_cnu_split(tup).dims()["uu"] == 0


def test_dc_part_requires_q_commuting():
    with pytest.raises(NotQCommuting):
        dc_part(OperatorTuple.dense([clock(3), cyclic_shift(3)], 1))


@given(st.integers(2, 4), seeds)
def test_dc_part_planted(d_block, seed):
    p = planted_dc_tuple(d_block, seed)
    H = dc_part(p.tuple)
    assert principal_angle_distance(H, p.ground_truth["dc"]) <= 1e-8
    sub = [compress(T, H) for T in p.tuple.operators]
    assert verify_doubly(OperatorTuple.dense(sub, p.tuple.commutation.q[0, 1]))
    r = unitary_cnu_split(p.tuple)
    assert principal_angle_distance(r.parts["uu"].subspace, p.ground_truth["u"]) <= 1e-8
    check_partition(r, p.tuple.operators)


def test_split_small_block_example():
    w = omega(3)
    A = block_diag(clock(3), jordan(3))
    B = block_diag(cyclic_shift(3), CNU_SCALE * phase_diag(3, w))
    r = unitary_cnu_split(OperatorTuple.dense([A, B], w))
    assert r.dims() == {"uu": 3, "cnu-tuple": 3}
    assert principal_angle_distance(r.parts["uu"].subspace, Subspace.coordinates(6, range(3))) <= 1e-10


def test_split_all_unitary_is_full():
    assert unitary_cnu_split(clock_shift(5)).dims()["uu"] == 5


def test_split_q_blocks_are_unitary():
    p = planted_tuple(2, 3, seed=2, block_phases=True)
    r = unitary_cnu_split(p.tuple)
    assert r.q_blocks
    for Q1, Q2 in r.q_blocks.values():
        for M in (Q1, Q2):
            assert opnorm(M.conj().T @ M - np.eye(M.shape[0])) <= 1e-9
    check_partition(r, p.tuple.operators, p.tuple.q_family())


def test_split_rejects_structured():
    S = StructuredOperator((ShiftBlock("shift", 1),))
    with pytest.raises(InvalidArg):
        unitary_cnu_split(OperatorTuple([S, S], CommutationData.trivial(2)))


def test_subspace_distance_slot_mismatch():
    a = SlotSubspace((("shift", 1),), (True,))
    b = SlotSubspace((("shift", 1),), (False,))
    assert subspace_distance(a, b) == 1.0
    assert subspace_distance(a, a) == 0.0
