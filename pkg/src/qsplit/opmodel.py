"""Operator tuples, commutation relations, defect operators, classification.

Relation convention used everywhere in the package::

    T_i T_j  = q[i, j] T_j T_i          T_i T_j  = Q(i, j) T_j T_i
    T_i T_j* = conj(q[i, j]) T_j* T_i   T_i T_j* = Q(i, j)* T_j* T_i

with ``q[j, i] = 1 / q[i, j]`` and ``Q(j, i) = Q(i, j)*``, so that
``Q(i, j) = q[i, j] I`` reproduces the scalar relations exactly.

Structured operators are finite direct sums of slots. A dense slot holds a
matrix; a shift slot holds one of ``c S``, ``D_p`` or ``c I`` acting on
``l2(N^s) (x) C^m``, where ``s`` is the number of operators in the tuple whose
block in that slot is a shift. The k-th such shift acts on the k-th tensor
axis and ``D_p`` multiplies ``e_(k1..ks)`` by ``p**(k1+..+ks)``. With a single
shift this is the plain ``S (x) I_m`` / ``diag(1, p, p^2, ...) (x) I_m`` model;
with several it is the model in which distinct shifts doubly commute.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import (
    DimMismatch,
    InvalidArg,
    NonUnimodularQ,
    NotAContraction,
    QNotCommutingWithOperators,
)
from .numkit import DEFAULT_TOL, Tolerance, as_matrix, opnorm, psd_sqrt

SHIFT_KINDS = ("shift", "phase", "scalar")
MODULUS_TOL = 1e-12
UNIMODULAR_TOL = 1e-8


@dataclass(frozen=True)
class ShiftBlock:
    """Symbolic block on a shift slot.

    ``shift``: ``value * S``; ``phase``: ``diag(value**k)``; ``scalar``: ``value * I``.
    """

    kind: str
    value: complex
    multiplicity: int = 1

    def __post_init__(self):
        if self.kind not in SHIFT_KINDS:
            raise InvalidArg(f"unknown shift-slot kind {self.kind!r}")
        if self.multiplicity < 1:
            raise InvalidArg("multiplicity must be positive")
        v = complex(self.value)
        if not np.isfinite(v):
            raise InvalidArg("non-finite block value")
        if self.kind == "phase" and abs(abs(v) - 1) > MODULUS_TOL:
            raise InvalidArg(f"phase block needs |p| = 1, got |p| = {abs(v)}")
        if self.kind != "phase" and abs(v) > 1 + MODULUS_TOL:
            raise InvalidArg(f"{self.kind} block needs |c| <= 1, got |c| = {abs(v)}")
        object.__setattr__(self, "value", v)

    @property
    def norm(self) -> float:
        return 1.0 if self.kind == "phase" else abs(self.value)

    @property
    def _unimodular(self) -> bool:
        return abs(abs(self.value) - 1) <= MODULUS_TOL

    @property
    def is_unitary(self) -> bool:
        return self.kind == "phase" or (self.kind == "scalar" and self._unimodular)

    @property
    def is_isometry(self) -> bool:
        return self.kind == "phase" or self._unimodular

    @property
    def is_pure_isometry(self) -> bool:
        return self.kind == "shift" and self._unimodular

    @property
    def coefficient(self) -> complex:
        return 1.0 + 0j if self.kind == "phase" else self.value

    def tag(self) -> str:
        v = self.value
        return f"{self.kind}({v.real:.12g}{v.imag:+.12g}j)x{self.multiplicity}"


Block = Union[np.ndarray, ShiftBlock]


@dataclass(frozen=True, eq=False)
class StructuredOperator:
    """Direct sum of dense blocks and symbolic shift-slot blocks."""

    blocks: tuple

    def __post_init__(self):
        blocks = []
        for b in self.blocks:
            blocks.append(b if isinstance(b, ShiftBlock) else as_matrix(b, square=True))
        if not blocks:
            raise InvalidArg("structured operator needs at least one slot")
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def layout(self) -> tuple:
        return tuple(
            ("shift", b.multiplicity) if isinstance(b, ShiftBlock) else ("dense", b.shape[0])
            for b in self.blocks
        )

    @property
    def norm(self) -> float:
        return max(b.norm if isinstance(b, ShiftBlock) else opnorm(b) for b in self.blocks)

    def dense_slots(self) -> list[int]:
        return [k for k, b in enumerate(self.blocks) if not isinstance(b, ShiftBlock)]

    def shift_slots(self) -> list[int]:
        return [k for k, b in enumerate(self.blocks) if isinstance(b, ShiftBlock)]


Operator = Union[np.ndarray, StructuredOperator]


def is_structured(T) -> bool:
    return isinstance(T, StructuredOperator)


class CommutationData:
    """Scalar phases ``q`` (n x n) or a unitary family ``Q`` (n x n of matrices)."""

    def __init__(self, q=None, Q=None):
        if (q is None) == (Q is None):
            raise InvalidArg("exactly one of q or Q must be given")
        self.q = None
        self.Q = None
        if q is not None:
            q = np.array(q, dtype=complex)
            if q.ndim != 2 or q.shape[0] != q.shape[1]:
                raise InvalidArg("q must be a square matrix")
            if not np.all(np.isfinite(q)) or np.any(q == 0):
                raise InvalidArg("q entries must be finite and non-zero")
            n = q.shape[0]
            if np.max(np.abs(np.diag(q) - 1), initial=0) > MODULUS_TOL:
                raise InvalidArg("q[i, i] must equal 1")
            if np.max(np.abs(q * q.T - 1), initial=0) > MODULUS_TOL:
                raise InvalidArg("q[j, i] must equal 1 / q[i, j]")
            q.setflags(write=False)
            self.q = q
        else:
            n = len(Q)
            mats = [[as_matrix(Q[i][j], square=True) for j in range(n)] for i in range(n)]
            d = mats[0][0].shape[0] if n else 0
            eye = np.eye(d)
            for i in range(n):
                if len(Q[i]) != n:
                    raise InvalidArg("Q must be an n x n array of matrices")
                for j in range(n):
                    M = mats[i][j]
                    if M.shape != (d, d):
                        raise DimMismatch("Q blocks must share one size")
                    if opnorm(M.conj().T @ M - eye) > 1e-10:
                        raise InvalidArg(f"Q({i},{j}) is not unitary")
                    if i == j and opnorm(M - eye) > 1e-10:
                        raise InvalidArg("Q(i, i) must be the identity")
                    if opnorm(M - mats[j][i].conj().T) > 1e-10:
                        raise InvalidArg(f"Q({i},{j}) must equal Q({j},{i})*")
            self.Q = mats
        self.n = n

    @classmethod
    def pair(cls, q12: complex) -> "CommutationData":
        return cls(q=[[1, q12], [1 / q12, 1]])

    @classmethod
    def trivial(cls, n: int) -> "CommutationData":
        return cls(q=np.ones((n, n), dtype=complex))

    @property
    def is_scalar(self) -> bool:
        return self.q is not None

    def as_unitary_family(self, d: int) -> "CommutationData":
        """Same relations with ``Q(i, j) = q[i, j] I_d``."""
        if not self.is_scalar:
            return self
        eye = np.eye(d)
        return CommutationData(Q=[[self.q[i, j] * eye for j in range(self.n)] for i in range(self.n)])

    def permuted(self, perm: Sequence[int]) -> "CommutationData":
        if self.is_scalar:
            return CommutationData(q=self.q[np.ix_(perm, perm)])
        return CommutationData(Q=[[self.Q[a][b] for b in perm] for a in perm])

    def max_modulus_defect(self) -> float:
        if not self.is_scalar:
            return 0.0
        return float(np.max(np.abs(np.abs(self.q) - 1), initial=0.0))


@dataclass(eq=False)
class OperatorTuple:
    operators: list
    commutation: CommutationData

    def __post_init__(self):
        ops = [T if is_structured(T) else as_matrix(T, square=True) for T in self.operators]
        if not ops:
            raise InvalidArg("empty operator tuple")
        kinds = {is_structured(T) for T in ops}
        if len(kinds) != 1:
            raise DimMismatch("cannot mix dense and structured operators")
        if self.commutation.n != len(ops):
            raise DimMismatch(f"commutation data is {self.commutation.n}-ary, tuple has {len(ops)}")
        if self.structured:
            layout = ops[0].layout
            if any(T.layout != layout for T in ops):
                raise DimMismatch("structured operators have different slot layouts")
            if not self.commutation.is_scalar:
                raise InvalidArg("operator-valued Q is supported for dense tuples only")
        else:
            d = ops[0].shape[0]
            if any(T.shape != (d, d) for T in ops):
                raise DimMismatch("operators have different sizes")
            if not self.commutation.is_scalar and self.commutation.Q[0][0].shape[0] != d:
                raise DimMismatch("Q blocks and operators act on different spaces")
        self.operators = ops

    @classmethod
    def dense(cls, operators, q=None) -> "OperatorTuple":
        """Dense tuple; ``q`` may be an n x n matrix, a pair phase, or None (commuting)."""
        n = len(operators)
        if q is None:
            cd = CommutationData.trivial(n)
        elif isinstance(q, CommutationData):
            cd = q
        elif np.ndim(q) == 0:
            if n != 2:
                raise InvalidArg("a scalar phase needs exactly two operators")
            cd = CommutationData.pair(complex(q))
        else:
            cd = CommutationData(q=q)
        return cls(list(operators), cd)

    @property
    def n(self) -> int:
        return len(self.operators)

    @property
    def structured(self) -> bool:
        return is_structured(self.operators[0])

    @property
    def dim(self) -> int:
        if self.structured:
            raise InvalidArg("structured tuples have no finite dimension")
        return self.operators[0].shape[0]

    def q_operator(self, i: int, j: int) -> np.ndarray:
        c = self.commutation
        if c.is_scalar:
            return c.q[i, j] * np.eye(self.dim)
        return c.Q[i][j]

    def q_family(self) -> list[np.ndarray]:
        """Distinct off-diagonal Q(i, j), i < j (empty in scalar mode)."""
        if self.commutation.is_scalar:
            return []
        return [self.commutation.Q[i][j] for i in range(self.n) for j in range(i + 1, self.n)]

    def permuted(self, perm: Sequence[int]) -> "OperatorTuple":
        return OperatorTuple([self.operators[k] for k in perm], self.commutation.permuted(perm))

    def max_norm(self) -> float:
        return max(T.norm if is_structured(T) else opnorm(T) for T in self.operators)


@dataclass(frozen=True)
class ContractionReport:
    norm: float
    ok: bool


@dataclass(frozen=True)
class Classification:
    unitary: bool
    cnu: bool
    isometry: bool
    pure_isometry: bool
    cni: bool
    atom_A: str | None
    atom_B: str | None

    @property
    def is_atom(self) -> bool:
        return self.atom_A is not None

    def flags(self) -> list[str]:
        names = ("unitary", "cnu", "isometry", "pure_isometry", "cni")
        return [k for k in names if getattr(self, k)]


def verify_contraction(T, tol: Tolerance = DEFAULT_TOL) -> ContractionReport:
    if is_structured(T):
        norm = T.norm
        ok = all(
            (b.kind == "phase" or b.norm <= 1 + MODULUS_TOL) if isinstance(b, ShiftBlock)
            else opnorm(b) <= 1 + 10 * tol.rel
            for b in T.blocks
        )
        return ContractionReport(norm, ok)
    norm = opnorm(as_matrix(T, square=True))
    return ContractionReport(norm, norm <= 1 + 10 * tol.rel)


def _symbolic_phase(x: ShiftBlock, y: ShiftBlock, doubly: bool) -> complex:
    """Exact t with ``XY = t YX`` (plain) or ``XY* = t Y*X`` (doubly) on unit parts."""
    if x.kind == "shift" and y.kind == "phase":
        return y.value if doubly else np.conj(y.value)
    if x.kind == "phase" and y.kind == "shift":
        return np.conj(x.value) if doubly else x.value
    return 1.0 + 0j


def _slot_residual(a: Block, b: Block, q: complex, doubly: bool) -> float:
    if isinstance(a, ShiftBlock):
        t = _symbolic_phase(a, b, doubly)
        target = np.conj(q) if doubly else q
        return abs(a.coefficient) * abs(b.coefficient) * abs(t - target)
    if doubly:
        return opnorm(a @ b.conj().T - np.conj(q) * (b.conj().T @ a))
    return opnorm(a @ b - q * (b @ a))


def relation_residual(tup: OperatorTuple, mode: str = "plain") -> np.ndarray:
    """n x n matrix of relation defects; the diagonal is zero by definition."""
    if mode not in ("plain", "doubly"):
        raise InvalidArg(f"unknown mode {mode!r}")
    doubly = mode == "doubly"
    n = tup.n
    out = np.zeros((n, n))
    ops = tup.operators
    c = tup.commutation
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if tup.structured:
                out[i, j] = max(
                    _slot_residual(a, b, c.q[i, j], doubly)
                    for a, b in zip(ops[i].blocks, ops[j].blocks)
                )
                continue
            A, B = ops[i], ops[j]
            if c.is_scalar:
                out[i, j] = _slot_residual(A, B, c.q[i, j], doubly)
            elif doubly:
                Bs = B.conj().T
                out[i, j] = opnorm(A @ Bs - c.Q[i][j].conj().T @ Bs @ A)
            else:
                out[i, j] = opnorm(A @ B - c.Q[i][j] @ B @ A)
    return out


def q_commutation_residual(tup: OperatorTuple) -> np.ndarray:
    """Entry (i, j): ``max(||[Q(i,j), T_i]||, ||[Q(i,j), T_j]||)``; zeros in scalar mode."""
    n = tup.n
    out = np.zeros((n, n))
    if tup.commutation.is_scalar:
        return out
    for i in range(n):
        for j in range(n):
            Q = tup.commutation.Q[i][j]
            out[i, j] = max(
                opnorm(Q @ tup.operators[k] - tup.operators[k] @ Q) for k in (i, j)
            )
    return out


def relation_threshold(tup: OperatorTuple, tol: Tolerance) -> float:
    return tol.rel * (1 + tup.max_norm())


def _check_q_hypothesis(tup: OperatorTuple, tol: Tolerance):
    bad = q_commutation_residual(tup)
    if bad.size and bad.max() > relation_threshold(tup, tol):
        i, j = np.unravel_index(np.argmax(bad), bad.shape)
        raise QNotCommutingWithOperators(
            f"Q({i + 1},{j + 1}) does not commute with T{i + 1}, T{j + 1} (residual {bad.max():.3e})"
        )


def check_unimodular(tup: OperatorTuple):
    defect = tup.commutation.max_modulus_defect()
    if defect > UNIMODULAR_TOL:
        raise NonUnimodularQ(f"| |q_ij| - 1 | = {defect:.3e}: doubly relations need |q| = 1")


def verify_q_commuting(tup: OperatorTuple, tol: Tolerance = DEFAULT_TOL) -> bool:
    _check_q_hypothesis(tup, tol)
    return bool(relation_residual(tup, "plain").max() <= relation_threshold(tup, tol))


def verify_doubly(tup: OperatorTuple, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Plain and doubly relations both hold. Scalar |q| != 1 raises."""
    check_unimodular(tup)
    _check_q_hypothesis(tup, tol)
    thr = relation_threshold(tup, tol)
    return bool(
        relation_residual(tup, "plain").max() <= thr
        and relation_residual(tup, "doubly").max() <= thr
    )


def defect(T, n: int, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``(I - T*^n T^n)^(1/2)`` for n >= 0, ``(I - T^|n| T*^|n|)^(1/2)`` for n < 0."""
    A = as_matrix(T, square=True)
    d = A.shape[0]
    if n == 0:
        return np.zeros((d, d), dtype=complex)
    P = np.linalg.matrix_power(A, abs(n))
    H = np.eye(d) - (P.conj().T @ P if n > 0 else P @ P.conj().T)
    return psd_sqrt(H, tol)


def _dense_unitary(T, tol: Tolerance) -> tuple[bool, bool]:
    eye = np.eye(T.shape[0])
    thr = 10 * tol.rel
    iso = opnorm(T.conj().T @ T - eye) <= thr
    co_iso = opnorm(T @ T.conj().T - eye) <= thr
    return iso and co_iso, iso


def _classify_dense(T: np.ndarray, tol: Tolerance) -> tuple[bool, bool, bool, bool]:
    """(unitary, isometry, has unitary part, has isometric part)."""
    from .decomp import isometric_part, unitary_part

    if T.shape[0] == 0:
        raise InvalidArg("cannot classify an operator on the zero space")
    unitary, isometry = _dense_unitary(T, tol)
    if unitary:
        return True, True, True, True
    if opnorm(T) <= 1 - tol.rel:
        return False, False, False, False
    return (
        False,
        isometry,
        unitary_part(T, tol).dim > 0,
        isometric_part(T, tol).dim > 0,
    )


def classify(T, tol: Tolerance = DEFAULT_TOL) -> Classification:
    if not verify_contraction(T, tol).ok:
        raise NotAContraction(f"operator norm {verify_contraction(T, tol).norm:.6g} exceeds 1")
    if is_structured(T):
        rows = []
        for b in T.blocks:
            if isinstance(b, ShiftBlock):
                rows.append((b.is_unitary, b.is_isometry, b.is_unitary, b.is_isometry))
            else:
                rows.append(_classify_dense(b, tol))
    else:
        rows = [_classify_dense(as_matrix(T, square=True), tol)]
    unitary = all(r[0] for r in rows)
    isometry = all(r[1] for r in rows)
    cnu = not any(r[2] for r in rows)
    cni = not any(r[3] for r in rows)
    pure = isometry and cnu
    atom_A = "A1" if unitary else ("A2" if cnu else None)
    atom_B = None
    if cnu:
        atom_B = "B1" if pure else ("B2" if cni else None)
    return Classification(unitary, cnu, isometry, pure, cni, atom_A, atom_B)


def infer_phase(T1, T2, tol: Tolerance = DEFAULT_TOL) -> complex | None:
    """Least-squares q with ``T1 T2 ~ q T2 T1``; None when ``T2 T1`` vanishes.

    The fit always returns a number; re-check it with ``relation_residual``.
    """
    A = as_matrix(T1, square=True)
    B = as_matrix(T2, square=True)
    if A.shape != B.shape:
        raise DimMismatch("operators have different sizes")
    BA = B @ A
    denom = np.vdot(BA, BA).real
    if np.sqrt(denom) <= tol.abs_floor:
        return None
    return complex(np.vdot(BA, A @ B) / denom)
