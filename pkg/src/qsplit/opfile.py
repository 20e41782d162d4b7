"""JSON operator files.

Dense::

    {"dim": 3,
     "operators": [{"name": "Z", "matrix": [[[re, im], ...], ...]}, ...],
     "q": [[[re, im], ...], ...],          # optional, n x n
     "Q": [[matrix, ...], ...],            # optional, n x n matrices
     "meta": {...}}

Structured::

    {"slots": [{"kind": "dense", "dim": 2}, {"kind": "shift", "multiplicity": 1}],
     "operators": [{"name": "T1", "blocks": [{"matrix": ...}, {"shift": [1, 0]}]}, ...]}

Shift-slot blocks are ``{"shift": c}``, ``{"phase": p}`` or ``{"scalar": c}``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArg, QSplitError
from .opmodel import CommutationData, OperatorTuple, ShiftBlock, StructuredOperator, is_structured


class ParseError(InvalidArg):
    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}")
        self.where = where


@dataclass
class OperatorFile:
    operators: list
    names: list
    q: np.ndarray | None = None
    Q: list | None = None
    meta: dict = field(default_factory=dict)

    @property
    def structured(self) -> bool:
        return is_structured(self.operators[0])

    def to_tuple(self, q=None) -> OperatorTuple:
        if self.Q is not None:
            return OperatorTuple(self.operators, CommutationData(Q=self.Q))
        q = self.q if q is None else q
        if q is None:
            q = np.ones((len(self.operators),) * 2, dtype=complex)
        return OperatorTuple(self.operators, CommutationData(q=q))


def _complex(v, where) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        z = complex(float(v[0]), float(v[1]))
    elif isinstance(v, (int, float)) and not isinstance(v, bool):
        z = complex(float(v))
    else:
        raise ParseError(where, "expected a [re, im] pair")
    if not np.isfinite(z):
        raise ParseError(where, "non-finite value")
    return z


def _matrix(v, where, side=None) -> np.ndarray:
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ParseError(where, "expected a non-empty list of rows")
    rows = len(v)
    if any(len(r) != rows for r in v):
        raise ParseError(where, "matrix must be square")
    if side is not None and rows != side:
        raise ParseError(where, f"expected side {side}, got {rows}")
    return np.array(
        [[_complex(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(v)],
        dtype=complex,
    )


def _slot_block(v, slot, where):
    kind, size = slot
    if not isinstance(v, dict):
        raise ParseError(where, "expected an object")
    if kind == "dense":
        if "matrix" not in v:
            raise ParseError(where, "dense slot needs 'matrix'")
        return _matrix(v["matrix"], f"{where}.matrix", size)
    keys = [k for k in ("shift", "phase", "scalar") if k in v]
    if len(keys) != 1:
        raise ParseError(where, "shift slot needs exactly one of 'shift', 'phase', 'scalar'")
    try:
        return ShiftBlock(keys[0], _complex(v[keys[0]], f"{where}.{keys[0]}"), size)
    except QSplitError as exc:
        raise ParseError(where, str(exc)) from None


def parse_operator_file(data: dict) -> OperatorFile:
    if not isinstance(data, dict):
        raise ParseError("$", "top level must be an object")
    ops_raw = data.get("operators")
    if not isinstance(ops_raw, list) or not ops_raw:
        raise ParseError("$.operators", "expected a non-empty array")
    has_dim, has_slots = "dim" in data, "slots" in data
    if has_dim == has_slots:
        raise ParseError("$", "exactly one of 'dim' or 'slots' is required")
    names, ops = [], []
    if has_dim:
        d = data["dim"]
        if not isinstance(d, int) or isinstance(d, bool) or d < 1:
            raise ParseError("$.dim", "expected a positive integer")
        for k, op in enumerate(ops_raw):
            where = f"$.operators[{k}]"
            if not isinstance(op, dict) or "matrix" not in op:
                raise ParseError(where, "expected an object with 'matrix'")
            ops.append(_matrix(op["matrix"], f"{where}.matrix", d))
            names.append(str(op.get("name", f"T{k + 1}")))
    else:
        slots_raw = data["slots"]
        if not isinstance(slots_raw, list) or not slots_raw:
            raise ParseError("$.slots", "expected a non-empty array")
        layout = []
        for k, s in enumerate(slots_raw):
            where = f"$.slots[{k}]"
            kind = s.get("kind") if isinstance(s, dict) else None
            if kind == "dense":
                size = s.get("dim")
            elif kind == "shift":
                size = s.get("multiplicity", 1)
            else:
                raise ParseError(where, "kind must be 'dense' or 'shift'")
            if not isinstance(size, int) or isinstance(size, bool) or size < 1:
                raise ParseError(where, "size must be a positive integer")
            layout.append((kind, size))
        for k, op in enumerate(ops_raw):
            where = f"$.operators[{k}]"
            blocks = op.get("blocks", op.get("block")) if isinstance(op, dict) else None
            if not isinstance(blocks, list) or len(blocks) != len(layout):
                raise ParseError(where, f"expected 'blocks' with {len(layout)} entries")
            ops.append(StructuredOperator(tuple(
                _slot_block(b, layout[j], f"{where}.blocks[{j}]") for j, b in enumerate(blocks)
            )))
            names.append(str(op.get("name", f"T{k + 1}")))
    n = len(ops)
    q = Q = None
    if "q" in data and "Q" in data:
        raise ParseError("$", "give at most one of 'q' and 'Q'")
    if "q" in data:
        raw = data["q"]
        if not isinstance(raw, list) or len(raw) != n or any(not isinstance(r, list) or len(r) != n for r in raw):
            raise ParseError("$.q", f"expected a {n} x {n} array")
        q = np.array([[_complex(x, f"$.q[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(raw)])
        try:
            CommutationData(q=q)
        except QSplitError as exc:
            raise ParseError("$.q", str(exc)) from None
    if "Q" in data:
        if has_slots:
            raise ParseError("$.Q", "operator-valued Q needs a dense file")
        raw = data["Q"]
        if not isinstance(raw, list) or len(raw) != n or any(not isinstance(r, list) or len(r) != n for r in raw):
            raise ParseError("$.Q", f"expected a {n} x {n} array of matrices")
        Q = [[_matrix(x, f"$.Q[{i}][{j}]", data["dim"]) for j, x in enumerate(r)] for i, r in enumerate(raw)]
        try:
            CommutationData(Q=Q)
        except QSplitError as exc:
            raise ParseError("$.Q", str(exc)) from None
    meta = data.get("meta", {})
    if not isinstance(meta, dict):
        raise ParseError("$.meta", "expected an object")
    return OperatorFile(ops, names, q, Q, meta)


def load_operator_file(path) -> OperatorFile:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(str(path), f"cannot read file ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    except UnicodeDecodeError:
        raise ParseError(str(path), "file is not UTF-8") from None
    return parse_operator_file(data)


def _pair(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def matrix_to_json(M) -> list:
    return [[_pair(x) for x in row] for row in np.asarray(M)]


def _block_to_json(b) -> dict:
    if isinstance(b, ShiftBlock):
        return {b.kind: _pair(b.value)}
    return {"matrix": matrix_to_json(b)}


def dump_operator_file(tup: OperatorTuple, names=None, meta=None) -> dict:
    names = names or [f"T{k + 1}" for k in range(tup.n)]
    out: dict = {}
    if tup.structured:
        out["slots"] = [
            {"kind": "dense", "dim": s} if kind == "dense" else {"kind": "shift", "multiplicity": s}
            for kind, s in tup.operators[0].layout
        ]
        out["operators"] = [
            {"name": nm, "blocks": [_block_to_json(b) for b in T.blocks]}
            for nm, T in zip(names, tup.operators)
        ]
    else:
        out["dim"] = tup.dim
        out["operators"] = [{"name": nm, "matrix": matrix_to_json(T)} for nm, T in zip(names, tup.operators)]
    c = tup.commutation
    if c.is_scalar:
        out["q"] = matrix_to_json(c.q)
    else:
        out["Q"] = [[matrix_to_json(M) for M in row] for row in c.Q]
    if meta:
        out["meta"] = meta
    return out


def dumps(data: dict) -> str:
    return json.dumps(data, indent=1, sort_keys=False) + "\n"
