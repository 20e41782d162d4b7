"""Seeded generators for tuples with known decompositions.

Random draws use ``numpy.random.default_rng(seed)`` (PCG64); results are
bit-identical across runs of one build.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .errors import InvalidArg, NonUnimodularQ, UnsupportedSignature
from .numkit import Subspace
from .opmodel import CommutationData, OperatorTuple, relation_residual, verify_doubly

BUILD_TOL = 1e-12
CNU_SCALE = 0.5


@dataclass(eq=False)
class PlantedTuple:
    tuple: OperatorTuple
    ground_truth: dict
    conjugator: np.ndarray
    seed: int


def omega(d: int) -> complex:
    return np.exp(2j * np.pi / d)


def jordan(d: int) -> np.ndarray:
    """Nilpotent Jordan block: ``J e_(k+1) = e_k``."""
    return np.eye(d, k=1, dtype=complex)


def phase_diag(d: int, q: complex) -> np.ndarray:
    return np.diag(q ** np.arange(d)).astype(complex)


def clock(d: int, power: int = 1) -> np.ndarray:
    return phase_diag(d, omega(d) ** power)


def cyclic_shift(d: int) -> np.ndarray:
    """``X e_k = e_(k+1 mod d)``."""
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def _checked(tup: OperatorTuple) -> OperatorTuple:
    for mode in ("plain", "doubly"):
        r = relation_residual(tup, mode)
        if r.max() > BUILD_TOL:
            raise RuntimeError(f"generator produced a tuple with {mode} residual {r.max():.3e}")
    return tup


def clock_shift(d: int) -> OperatorTuple:
    """(Z, X) with ``Z X = omega X Z``, omega = exp(2 pi i / d)."""
    if d < 2:
        raise InvalidArg("clock_shift needs d >= 2")
    return _checked(OperatorTuple.dense([clock(d), cyclic_shift(d)], omega(d)))


def shift_phase_pair(d: int, q: complex, scale: float = 1.0) -> OperatorTuple:
    """(scale J_d, D_q) with ``J D_q = q D_q J``; stored phase q[0, 1] = q."""
    if d < 2:
        raise InvalidArg("shift_phase_pair needs d >= 2")
    if abs(abs(q) - 1) > 1e-12:
        raise NonUnimodularQ(f"|q| = {abs(q)} != 1")
    if not 0 < scale <= 1:
        raise InvalidArg("scale must lie in (0, 1]")
    return _checked(OperatorTuple.dense([scale * jordan(d), phase_diag(d, q)], q))


def random_unitary(d: int, seed: int) -> np.ndarray:
    """Haar unitary: QR of a complex Ginibre sample, R's diagonal made positive."""
    rng = np.random.default_rng(seed)
    G = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(G)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_contraction(d: int, seed: int) -> np.ndarray:
    """Ginibre sample divided by ``sigma_max * (1 + u)``, u ~ U[0, 1]."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    u = rng.uniform(0.0, 1.0)
    return G / (np.linalg.norm(G, 2) * (1 + u))


def _pair_block(sig: str, m: int, d_block: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Block of size m for signature ``sig`` with phase ``omega(d_block)**k``."""
    w = omega(d_block) ** k
    if sig == "uu":
        if m % d_block:
            raise UnsupportedSignature(f"'uu' blocks need a multiple of {d_block} dimensions, got {m}")
        return clock(m, k * (m // d_block)), cyclic_shift(m)
    if sig == "uc":
        return phase_diag(m, np.conj(w)), jordan(m)
    if sig == "cu":
        return jordan(m), phase_diag(m, w)
    if sig == "cc":
        return jordan(m), CNU_SCALE * phase_diag(m, w)
    raise UnsupportedSignature(sig)


def planted_tuple(
    n: int,
    d_block: int,
    signature_dims: dict | None = None,
    seed: int = 0,
    block_phases: bool = False,
) -> PlantedTuple:
    """Direct sum of blocks with prescribed signatures, conjugated by a random unitary.

    n = 1: ``u`` blocks are random unitaries, ``c`` blocks ``0.5 J``.
    n = 2: ``uu`` clock-shift, ``uc`` (D, J), ``cu`` (J, D), ``cc`` (J, 0.5 D), all
    sharing q = exp(2 pi i / d_block). With ``block_phases`` every block gets its
    own phase and the commutation data becomes a block-diagonal unitary Q.
    n = 3: the first two operators as for n = 2 and a third that is ``e^{it} I``
    (``u``) or ``0.5 e^{it} I`` (``c``) on each block.
    """
    if n not in (1, 2, 3):
        raise InvalidArg("planted_tuple supports n in {1, 2, 3}")
    if d_block < 2:
        raise InvalidArg("d_block must be at least 2")
    if signature_dims is None:
        signature_dims = {"".join(s): d_block for s in itertools.product("uc", repeat=n)}
    for sig, m in signature_dims.items():
        if len(sig) != n or set(sig) - {"u", "c"}:
            raise UnsupportedSignature(f"bad signature {sig!r} for n = {n}")
        if m < 0:
            raise InvalidArg("block dimensions must be non-negative")
    sigs = [s for s in sorted(signature_dims) if signature_dims[s] > 0]
    if not sigs:
        raise UnsupportedSignature("no non-empty signature requested")
    rng = np.random.default_rng(seed)
    ops_blocks = [[] for _ in range(n)]
    phases = []
    for idx, sig in enumerate(sigs):
        m = signature_dims[sig]
        k = idx + 1 if block_phases else 1
        if n == 1:
            sub = int(rng.integers(0, 2**31))
            ops_blocks[0].append(random_unitary(m, sub) if sig == "u" else CNU_SCALE * jordan(m))
        else:
            A, B = _pair_block(sig[:2], m, d_block, k)
            ops_blocks[0].append(A)
            ops_blocks[1].append(B)
            if n == 3:
                t = np.exp(2j * np.pi * rng.uniform())
                ops_blocks[2].append((1.0 if sig[2] == "u" else CNU_SCALE) * t * np.eye(m))
        phases.append((m, omega(d_block) ** k))
    W = random_unitary(sum(signature_dims[s] for s in sigs), int(rng.integers(0, 2**31)))
    ops = [W @ block_diag(*blocks) @ W.conj().T for blocks in ops_blocks]
    d = W.shape[0]

    if block_phases and n >= 2:
        q12 = W @ np.diag(np.concatenate([np.full(m, w) for m, w in phases])) @ W.conj().T
        eye = np.eye(d, dtype=complex)
        Q = [[eye] * n for _ in range(n)]
        Q = [row[:] for row in Q]
        Q[0][1], Q[1][0] = q12, q12.conj().T
        comm = CommutationData(Q=Q)
    else:
        q = np.ones((n, n), dtype=complex)
        if n >= 2:
            q[0, 1], q[1, 0] = omega(d_block), 1 / omega(d_block)
        comm = CommutationData(q=q)
    tup = OperatorTuple(ops, comm)
    if not verify_doubly(tup):
        raise RuntimeError("planted tuple failed its build-time relation check")
    _checked(tup)

    truth = {}
    offset = 0
    for sig in sorted(signature_dims):
        m = signature_dims[sig] if sig in sigs else 0
        truth[sig] = Subspace(W[:, offset:offset + m])
        offset += m
    for s in itertools.product("uc", repeat=n):
        truth.setdefault("".join(s), Subspace.zero(d))
    return PlantedTuple(tup, truth, W, seed)


def planted_contraction(unitary_dim: int, cnu_dim: int, seed: int, cnu_norm: float = 0.9):
    """``W (U (+) C) W*`` with Haar U and a strict contraction C (``||C|| <= cnu_norm``).

    Returns ``(T, H_u)`` where H_u is the planted unitary subspace.
    """
    rng = np.random.default_rng(seed)
    s1, s2, s3 = (int(x) for x in rng.integers(0, 2**31, size=3))
    blocks = []
    if unitary_dim:
        blocks.append(random_unitary(unitary_dim, s1))
    if cnu_dim:
        blocks.append(cnu_norm * random_contraction(cnu_dim, s2))
    W = random_unitary(unitary_dim + cnu_dim, s3)
    T = W @ block_diag(*blocks) @ W.conj().T
    return T, Subspace(W[:, :unitary_dim])


def planted_dc_tuple(d_block: int, seed: int) -> PlantedTuple:
    """q-commuting pair ``W (D (+) N) W*`` where D is doubly q-commuting and N is not.

    D = (Z (+) J, X (+) 0.5 D_w) on 2 d_block dims, N = (J, J D_w) on d_block dims,
    with w = exp(2 pi i / d_block). Ground truth: ``"dc"`` (all of D) and ``"u"``
    (the clock-shift block, the joint unitary part).
    """
    if d_block < 2:
        raise InvalidArg("d_block must be at least 2")
    w = omega(d_block)
    J = jordan(d_block)
    A = block_diag(clock(d_block), J, J)
    B = block_diag(cyclic_shift(d_block), CNU_SCALE * phase_diag(d_block, w), J @ phase_diag(d_block, w))
    W = random_unitary(3 * d_block, seed)
    tup = OperatorTuple.dense([W @ A @ W.conj().T, W @ B @ W.conj().T], w)
    if relation_residual(tup, "plain").max() > BUILD_TOL:
        raise RuntimeError("planted dc tuple is not q-commuting")
    truth = {
        "dc": Subspace(W[:, : 2 * d_block]),
        "u": Subspace(W[:, :d_block]),
    }
    return PlantedTuple(tup, truth, W, seed)
