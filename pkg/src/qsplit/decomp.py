"""Canonical, Wold and Levan decompositions of contractions and tuples.

Every "largest reducing subspace inside W" question (unitary part, isometric
part, doubly-commuting part) goes through :func:`max_reducing_in`, a greatest
fixed point over a strictly decreasing chain of subspaces.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimMismatch,
    InternalError,
    InvalidArg,
    NotAContraction,
    NotCNU,
    NotDoublyCommuting,
    NotQCommuting,
)
from .numkit import (
    DEFAULT_TOL,
    Subspace,
    Tolerance,
    as_matrix,
    complement,
    compress,
    containment_gap,
    fix_phases,
    intersect,
    null_space,
    opnorm,
    principal_angle_distance,
    reduction_residual,
)
from .opmodel import (
    OperatorTuple,
    ShiftBlock,
    StructuredOperator,
    _check_q_hypothesis,
    check_unimodular,
    classify,
    defect,
    is_structured,
    relation_threshold,
    verify_contraction,
    verify_doubly,
    verify_q_commuting,
)

MAX_DENSE_ARITY = 8
CANONICAL = ("u", "c")
LEVAN = ("p", "n")
_LABELS = {"u": "A1", "c": "A2", "p": "B1", "n": "B2"}


@dataclass(frozen=True, eq=False)
class SlotSubspace:
    """Subspace of a structured space: a dense Subspace per dense slot and an
    in/out flag per shift slot (shift slots are never split)."""

    layout: tuple
    pieces: tuple

    @property
    def dim(self) -> int:
        """Finite part of the dimension (dense slots only)."""
        return sum(p.dim for p in self.pieces if isinstance(p, Subspace))

    @property
    def shift_slots(self) -> list[int]:
        return [k for k, p in enumerate(self.pieces) if p is True]

    @property
    def is_zero(self) -> bool:
        return self.dim == 0 and not self.shift_slots

    def __repr__(self):
        return f"SlotSubspace(dim={self.dim}, shift_slots={self.shift_slots})"


def slot_complement(S: SlotSubspace) -> SlotSubspace:
    return SlotSubspace(
        S.layout,
        tuple(complement(p) if isinstance(p, Subspace) else not p for p in S.pieces),
    )


def subspace_distance(S1, S2) -> float:
    """Projector distance for dense or slot subspaces."""
    if isinstance(S1, SlotSubspace) != isinstance(S2, SlotSubspace):
        raise DimMismatch("cannot compare dense and slot subspaces")
    if not isinstance(S1, SlotSubspace):
        return principal_angle_distance(S1, S2)
    if S1.layout != S2.layout:
        raise DimMismatch("slot layouts differ")
    out = 0.0
    for a, b in zip(S1.pieces, S2.pieces):
        if isinstance(a, Subspace):
            out = max(out, principal_angle_distance(a, b))
        elif a != b:
            out = 1.0
    return out


def subspace_dim(S) -> int:
    return S.dim


@dataclass
class Part:
    subspace: object
    restrictions: list
    labels: list


@dataclass
class Diagnostics:
    max_reduction_residual: float = 0.0
    completeness_residual: float = 0.0
    orthogonality_residual: float = 0.0
    iterations: int = 0


@dataclass
class DecompositionResult:
    parts: dict
    diagnostics: Diagnostics
    q_blocks: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def dims(self) -> dict:
        return {sig: p.subspace.dim for sig, p in self.parts.items()}

    def nonzero(self) -> dict:
        return {
            sig: p for sig, p in self.parts.items()
            if not (p.subspace.is_zero if isinstance(p.subspace, SlotSubspace) else p.subspace.dim == 0)
        }


# --------------------------------------------------------------------------
# fixed-point kernel


def _max_reducing_in(ops, W: Subspace, tol: Tolerance) -> tuple[Subspace, int]:
    mats = [as_matrix(T, square=True) for T in ops]
    d = W.ambient_dim
    if any(T.shape[0] != d for T in mats):
        raise DimMismatch("operators and subspace live in different spaces")
    gens = mats + [T.conj().T for T in mats]
    scale = max([1.0] + [opnorm(T) for T in mats])
    B = W.frame
    for it in range(1, d + 2):
        k = B.shape[1]
        if k == 0:
            return Subspace.zero(d), it
        rows = [X @ B - B @ (B.conj().T @ (X @ B)) for X in gens]
        N = null_space(np.vstack(rows), tol, scale=scale) if rows else Subspace.full(k)
        if N.dim == k:
            K = Subspace(B)
            thr = 2 * np.sqrt(len(gens)) * tol.threshold(scale)
            if containment_gap(K, W) > thr or any(reduction_residual(T, K) > thr for T in mats):
                raise InternalError("fixed point failed its postcondition checks")
            return K, it
        B = B @ N.frame
    raise InternalError("reducing-subspace iteration did not stabilise")


def max_reducing_in(ops, W: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Largest K inside W with ``T K ⊆ K`` and ``T* K ⊆ K`` for every T in ``ops``.

    Starts from W and repeatedly discards the directions that some T or T*
    maps out of the current subspace; the dimension drops strictly until it
    stabilises, so at most ``dim W + 1`` passes are needed.
    """
    return _max_reducing_in(ops, W, tol)[0]


def _require_contraction(T, tol):
    rep = verify_contraction(T, tol)
    if not rep.ok:
        raise NotAContraction(f"operator norm {rep.norm:.6g} exceeds 1")


def _unitary_kernel(T: np.ndarray, tol: Tolerance) -> Subspace:
    eye = np.eye(T.shape[0])
    Ts = T.conj().T
    return null_space(np.vstack([eye - Ts @ T, eye - T @ Ts]), tol, scale=1.0)


def _isometric_kernel(T: np.ndarray, tol: Tolerance) -> Subspace:
    return null_space(np.eye(T.shape[0]) - T.conj().T @ T, tol, scale=1.0)


def _dense_unitary_part(T, tol):
    return _max_reducing_in([T], _unitary_kernel(T, tol), tol)


def _dense_isometric_part(T, tol):
    return _max_reducing_in([T], _isometric_kernel(T, tol), tol)


def _slotwise(T: StructuredOperator, dense_fn, shift_flag, tol) -> SlotSubspace:
    pieces = []
    for b in T.blocks:
        if isinstance(b, ShiftBlock):
            pieces.append(bool(shift_flag(b)))
        else:
            pieces.append(dense_fn(b, tol)[0])
    return SlotSubspace(T.layout, tuple(pieces))


def unitary_part(T, tol: Tolerance = DEFAULT_TOL):
    """Largest reducing subspace on which T is unitary."""
    _require_contraction(T, tol)
    if is_structured(T):
        return _slotwise(T, _dense_unitary_part, lambda b: b.is_unitary, tol)
    return _dense_unitary_part(as_matrix(T, square=True), tol)[0]


def isometric_part(T, tol: Tolerance = DEFAULT_TOL):
    """Largest reducing subspace on which T is an isometry.

    For a dense T this always coincides with the unitary part.
    """
    _require_contraction(T, tol)
    if is_structured(T):
        return _slotwise(T, _dense_isometric_part, lambda b: b.is_isometry, tol)
    return _dense_isometric_part(as_matrix(T, square=True), tol)[0]


def defect_kernel_unitary_part(T, max_n: int | None = None, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Unitary part as the common kernel of the defect operators D_T(n), |n| <= max_n.

    Independent of :func:`max_reducing_in`; used as a cross-check.
    """
    A = as_matrix(T, square=True)
    _require_contraction(A, tol)
    d = A.shape[0]
    max_n = d if max_n is None else max_n
    if max_n < 1:
        raise InvalidArg("max_n must be at least 1")
    # D = H^(1/2): sigma(D) <= sqrt(rel) exactly when sigma(H) <= rel
    ktol = Tolerance(np.sqrt(tol.rel), np.sqrt(tol.abs_floor))
    K = Subspace.full(d)
    prev = None
    for n in range(1, max_n + 1):
        fwd = null_space(defect(A, n, tol), ktol, scale=1.0)
        bwd = null_space(defect(A, -n, tol), ktol, scale=1.0)
        K = intersect(K, intersect(fwd, bwd, tol), tol)
        dims = (fwd.dim, bwd.dim)
        # each one-sided chain is decreasing and, once flat, flat for good
        if prev == dims:
            break
        prev = dims
    return K


# --------------------------------------------------------------------------
# assembling results


def _restrict(T, S):
    if isinstance(S, SlotSubspace):
        blocks = []
        for b, p in zip(T.blocks, S.pieces):
            if isinstance(p, Subspace):
                if p.dim:
                    blocks.append(compress(b, p))
            elif p:
                blocks.append(b)
        return StructuredOperator(tuple(blocks)) if blocks else None
    return compress(T, S)


def _normalize(S):
    if isinstance(S, SlotSubspace):
        return SlotSubspace(S.layout, tuple(_normalize(p) if isinstance(p, Subspace) else p for p in S.pieces))
    return Subspace(fix_phases(S.frame))


def _dense_diagnostics(subspaces, ops, diag: Diagnostics):
    d = subspaces[0].ambient_dim
    total = sum((S.projector() for S in subspaces), np.zeros((d, d), dtype=complex))
    diag.completeness_residual = max(diag.completeness_residual, opnorm(total - np.eye(d)))
    for a, b in itertools.combinations(subspaces, 2):
        if a.dim and b.dim:
            diag.orthogonality_residual = max(
                diag.orthogonality_residual, opnorm(a.frame.conj().T @ b.frame)
            )
    for S in subspaces:
        for T in ops:
            diag.max_reduction_residual = max(diag.max_reduction_residual, reduction_residual(T, S))


def _build(ops, extra, parts: dict, labels: dict, iterations: int) -> DecompositionResult:
    """``parts``: signature -> subspace; ``extra``: additional operators (Q family)
    that every part must reduce."""
    parts = {sig: _normalize(S) for sig, S in parts.items()}
    diag = Diagnostics(iterations=iterations)
    subs = list(parts.values())
    if isinstance(subs[0], SlotSubspace):
        layout = subs[0].layout
        for k, (kind, _) in enumerate(layout):
            if kind == "dense":
                _dense_diagnostics([S.pieces[k] for S in subs], [T.blocks[k] for T in ops], diag)
            elif sum(bool(S.pieces[k]) for S in subs) != 1:
                diag.completeness_residual = 1.0
    else:
        _dense_diagnostics(subs, list(ops) + list(extra), diag)
    out = {
        sig: Part(S, [_restrict(T, S) for T in ops], labels[sig])
        for sig, S in parts.items()
    }
    return DecompositionResult(out, diag)


def canonical_decomposition(T, tol: Tolerance = DEFAULT_TOL) -> DecompositionResult:
    """``H = H_u (+) H_c``: T is unitary on H_u and completely non-unitary on H_c."""
    _require_contraction(T, tol)
    if is_structured(T):
        u, it = unitary_part(T, tol), 0
        c = slot_complement(u)
    else:
        A = as_matrix(T, square=True)
        u, it = _dense_unitary_part(A, tol)
        c = complement(u)
        T = A
    return _build([T], [], {"u": u, "c": c}, {"u": ["A1"], "c": ["A2"]}, it)


def levan_decomposition(T, tol: Tolerance = DEFAULT_TOL) -> DecompositionResult:
    """Split a c.n.u. contraction into a pure isometry and a c.n.i. part.

    Dense inputs always land entirely in ``"n"``: an isometric reducing part of
    a finite matrix is unitary, which a c.n.u. operator does not have.
    """
    _require_contraction(T, tol)
    if not classify(T, tol).cnu:
        raise NotCNU("operator has a non-trivial unitary part")
    if is_structured(T):
        p, it = isometric_part(T, tol), 0
        n = slot_complement(p)
    else:
        T = as_matrix(T, square=True)
        p, it = _dense_isometric_part(T, tol)
        n = complement(p)
    return _build([T], [], {"p": p, "n": n}, {"p": ["B1"], "n": ["B2"]}, it)


# --------------------------------------------------------------------------
# tuples


def _split_dense(ops, extra, splitter, letters, tol: Tolerance):
    """Split by each operator in turn; every half must reduce all of ops + extra."""
    d = ops[0].shape[0]
    leaves = [("", Subspace.full(d))]
    base = tol.rel * (1 + max(opnorm(T) for T in ops))
    checks = list(ops) + list(extra)
    iterations = 0
    for level, T in enumerate(ops, start=1):
        thr = base * 10 ** level
        grown = []
        for sig, K in leaves:
            if K.dim == 0:
                grown += [(sig + letters[0], K), (sig + letters[1], K)]
                continue
            F, it = splitter(compress(T, K), tol)
            iterations += it
            halves = (Subspace(K.frame @ F.frame), Subspace(K.frame @ complement(F).frame))
            for half in halves:
                for k, X in enumerate(checks):
                    r = reduction_residual(X, half)
                    if r > thr:
                        what = f"T{k + 1}" if k < len(ops) else "a Q(i,j)"
                        raise NotDoublyCommuting(
                            f"splitting by T{level} left a part that does not reduce {what} "
                            f"(residual {r:.3e} > {thr:.1e})"
                        )
            grown += [(sig + letters[0], halves[0]), (sig + letters[1], halves[1])]
        leaves = grown
    return dict(leaves), iterations


def _tuple_split(tup: OperatorTuple, letters, tol: Tolerance) -> DecompositionResult:
    splitter = _dense_unitary_part if letters == CANONICAL else _dense_isometric_part
    flag = (lambda b: b.is_unitary) if letters == CANONICAL else (lambda b: b.is_isometry)
    sigs = ["".join(s) for s in itertools.product(letters, repeat=tup.n)]
    labels = {s: [_LABELS[ch] for ch in s] for s in sigs}
    if not tup.structured:
        parts, it = _split_dense(tup.operators, tup.q_family(), splitter, letters, tol)
        return _build(tup.operators, tup.q_family(), parts, labels, it)

    layout = tup.operators[0].layout
    pieces = {s: [None] * len(layout) for s in sigs}
    it = 0
    for k, (kind, size) in enumerate(layout):
        blocks = [T.blocks[k] for T in tup.operators]
        if kind == "shift":
            owner = "".join(letters[0] if flag(b) else letters[1] for b in blocks)
            for s in sigs:
                pieces[s][k] = s == owner
        else:
            sub, n_it = _split_dense(blocks, [], splitter, letters, tol)
            it += n_it
            for s in sigs:
                pieces[s][k] = sub[s]
    parts = {s: SlotSubspace(layout, tuple(p)) for s, p in pieces.items()}
    return _build(tup.operators, [], parts, labels, it)


def _tuple_preconditions(tup: OperatorTuple, tol: Tolerance):
    if not tup.structured and tup.n > MAX_DENSE_ARITY:
        raise InvalidArg(f"dense tuples are limited to {MAX_DENSE_ARITY} operators")
    for T in tup.operators:
        _require_contraction(T, tol)
    if not verify_doubly(tup, tol):
        raise NotDoublyCommuting("tuple is not doubly q-commuting")


def tuple_decomposition(tup: OperatorTuple, tol: Tolerance = DEFAULT_TOL) -> DecompositionResult:
    """2^n-part canonical decomposition of a doubly q- (or Q-) commuting tuple.

    Signature letter k is ``u`` where T_k restricts to a unitary and ``c``
    where it restricts to a c.n.u. contraction; empty parts are kept.
    """
    _tuple_preconditions(tup, tol)
    return _tuple_split(tup, CANONICAL, tol)


def cnu_tuple_decomposition(tup: OperatorTuple, tol: Tolerance = DEFAULT_TOL) -> DecompositionResult:
    """Levan-type 2^n split (``p`` pure isometry, ``n`` c.n.i.) of a c.n.u. tuple."""
    _tuple_preconditions(tup, tol)
    for k, T in enumerate(tup.operators, start=1):
        if not classify(T, tol).cnu:
            raise NotCNU(f"T{k} is not completely non-unitary")
    return _tuple_split(tup, LEVAN, tol)


class NotIsometry(NotAContraction):
    pass


def wold_decomposition(tup: OperatorTuple, tol: Tolerance = DEFAULT_TOL) -> DecompositionResult:
    """Tuple decomposition restricted to tuples of isometries."""
    for k, T in enumerate(tup.operators, start=1):
        if not classify(T, tol).isometry:
            raise NotIsometry(f"T{k} is not an isometry")
    result = tuple_decomposition(tup, tol)
    if not tup.structured:
        result.warnings.append("finite-dimensional isometries are unitary")
    return result


def _q_mode_preconditions(tup: OperatorTuple, tol: Tolerance):
    if tup.structured:
        raise InvalidArg("this decomposition supports dense tuples only")
    check_unimodular(tup)
    _check_q_hypothesis(tup, tol)
    for T in tup.operators:
        _require_contraction(T, tol)
    if not verify_q_commuting(tup, tol):
        raise NotQCommuting("tuple is not q-commuting")


def _dc_part(tup: OperatorTuple, tol: Tolerance) -> tuple[Subspace, int]:
    ops = tup.operators
    rows = []
    for i in range(tup.n):
        for j in range(i + 1, tup.n):
            Ts = ops[j].conj().T
            rows.append(ops[i] @ Ts - tup.q_operator(i, j).conj().T @ Ts @ ops[i])
    d = tup.dim
    W = null_space(np.vstack(rows), tol, scale=1.0) if rows else Subspace.full(d)
    return _max_reducing_in(list(ops) + tup.q_family(), W, tol)


def dc_part(tup: OperatorTuple, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Largest joint reducing subspace on which a q-commuting tuple is doubly q-commuting."""
    _q_mode_preconditions(tup, tol)
    return _dc_part(tup, tol)[0]


def unitary_cnu_split(tup: OperatorTuple, tol: Tolerance = DEFAULT_TOL) -> DecompositionResult:
    """``H = H1 (+) H1'`` with every T_i unitary on H1 and the tuple c.n.u. on H1'.

    In operator-Q mode the blocks ``Q(i,j) = Q1(i,j) (+) Q2(i,j)`` are reported
    in ``q_blocks``; a Q that does not split into unitary blocks raises
    NotDoublyCommuting.
    """
    _q_mode_preconditions(tup, tol)
    ops = tup.operators
    H_dc, it = _dc_part(tup, tol)
    W = H_dc
    for T in ops:
        W = intersect(W, _unitary_kernel(T, tol), tol)
    H1, it2 = _max_reducing_in(ops, W, tol)
    H2 = complement(H1)
    n = tup.n
    labels = {"u" * n: ["A1"] * n}
    rest = []
    for T in ops:
        if H2.dim == 0:
            rest.append("A2")
            continue
        c = classify(compress(T, H2), tol)
        rest.append(c.atom_A or "non-atom")
    labels["cnu-tuple"] = rest
    result = _build(ops, tup.q_family(), {"u" * n: H1, "cnu-tuple": H2}, labels, it + it2)
    if not tup.commutation.is_scalar:
        thr = relation_threshold(tup, tol)
        H1n = result.parts["u" * n].subspace
        H2n = result.parts["cnu-tuple"].subspace
        for i in range(n):
            for j in range(i + 1, n):
                Q = tup.commutation.Q[i][j]
                Q1, Q2 = compress(Q, H1n), compress(Q, H2n)
                result.q_blocks[(i, j)] = (Q1, Q2)
                bad = max(_unitarity_defect(Q1), _unitarity_defect(Q2))
                if bad > thr or reduction_residual(Q, H1n) > thr:
                    raise NotDoublyCommuting(f"Q({i + 1},{j + 1}) does not split along H1")
    return result


def _unitarity_defect(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    eye = np.eye(M.shape[0])
    return max(opnorm(M.conj().T @ M - eye), opnorm(M @ M.conj().T - eye))
