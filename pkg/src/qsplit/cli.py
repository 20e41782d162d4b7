"""``qsplit`` command line: verify, classify, decompose and generate operator files.

Exit codes: 0 ok, 1 verification failed, 2 input/parse error, 3 non-unimodular
q, 4 classification precondition failed, 5 doubly-commutation violation
detected during a decomposition.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import decomp, genlab
from .errors import InvalidArg, QSplitError
from .numkit import Subspace, Tolerance, compress, opnorm, reduction_residual
from .opfile import OperatorFile, dump_operator_file, dumps, load_operator_file, matrix_to_json
from .opmodel import (
    CommutationData,
    OperatorTuple,
    check_unimodular,
    classify,
    infer_phase,
    is_structured,
    q_commutation_residual,
    relation_residual,
    relation_threshold,
    verify_contraction,
)

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2
DIGITS = 12
BASIS_DIGITS = 15


def num(x: float) -> float:
    """Round to the report precision; text and JSON print the same value."""
    return float(f"{float(x):.{DIGITS}g}")


def _fmt(x) -> str:
    return f"{x:.{DIGITS}g}"


def _cnum(z) -> list:
    return [num(z.real), num(z.imag)]


def _grid(M) -> list:
    return [[num(x) for x in row] for row in np.asarray(M)]


# --------------------------------------------------------------------------


def _tuple_from_file(f: OperatorFile, tol: Tolerance):
    """Tuple plus a note on where q came from; q is inferred pairwise when absent."""
    if f.q is not None or f.Q is not None:
        return f.to_tuple(), "file"
    n = len(f.operators)
    if n == 1:
        return f.to_tuple(), "trivial"
    if f.structured:
        return f.to_tuple(), "assumed-commuting"
    q = np.ones((n, n), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            z = infer_phase(f.operators[i], f.operators[j], tol)
            if z is None or abs(z) <= tol.abs_floor:
                z = 1.0 + 0j
            q[i, j], q[j, i] = z, 1 / z
    return f.to_tuple(q), "inferred"


def _classification_record(T, tol):
    rep = verify_contraction(T, tol)
    rec = {"norm": num(rep.norm), "contraction": rep.ok}
    if rep.ok:
        c = classify(T, tol)
        rec.update(
            flags=c.flags(),
            atom_A=c.atom_A,
            atom_B=c.atom_B,
            atom=c.is_atom,
        )
    return rec


def run_verify(f: OperatorFile, mode: str, tol: Tolerance) -> tuple[dict, int]:
    tup, source = _tuple_from_file(f, tol)
    report = {"command": "verify", "mode": mode, "tol": tol.rel, "n": tup.n, "q_source": source}
    if tup.commutation.is_scalar:
        report["q"] = [[_cnum(z) for z in row] for row in tup.commutation.q]
    if mode == "doubly":
        check_unimodular(tup)
    thr = relation_threshold(tup, tol)
    res = {"plain": relation_residual(tup, "plain")}
    if mode == "doubly":
        res["doubly"] = relation_residual(tup, "doubly")
    if not tup.commutation.is_scalar:
        res["q_commutation"] = q_commutation_residual(tup)
    report["threshold"] = num(thr)
    report["residuals"] = {k: _grid(v) for k, v in res.items()}
    bad = set()
    for M in res.values():
        for i, j in zip(*np.nonzero(M > thr)):
            bad.add((int(min(i, j)) + 1, int(max(i, j)) + 1))
    report["offending_pairs"] = [list(p) for p in sorted(bad)]
    ops = []
    for name, T in zip(f.names, tup.operators):
        rec = {"name": name}
        rec.update(_classification_record(T, tol))
        ops.append(rec)
    report["operators"] = ops
    passed = not bad and all(o["contraction"] for o in ops)
    report["passed"] = passed
    return report, EXIT_OK if passed else EXIT_FAILED


def run_classify(f: OperatorFile, tol: Tolerance) -> tuple[dict, int]:
    ops = []
    for name, T in zip(f.names, f.operators):
        rec = {"name": name}
        rep = verify_contraction(T, tol)
        if not rep.ok:
            from .errors import NotAContraction

            raise NotAContraction(f"{name}: operator norm {rep.norm:.6g} exceeds 1")
        rec.update(_classification_record(T, tol))
        ops.append(rec)
    return {"command": "classify", "tol": tol.rel, "operators": ops}, EXIT_OK


def _basis_json(S) -> object:
    def frame(F):
        return [[[float(f"{z.real:.{BASIS_DIGITS}g}"), float(f"{z.imag:.{BASIS_DIGITS}g}")] for z in row] for row in F]

    if isinstance(S, decomp.SlotSubspace):
        return [frame(p.frame) if isinstance(p, Subspace) else bool(p) for p in S.pieces]
    return frame(S.frame)


def _part_residuals(tup: OperatorTuple, ops, S) -> dict:
    """Reduction and restricted-relation residuals of one part (dense tuples)."""
    if isinstance(S, decomp.SlotSubspace):
        red = 0.0
        for k, p in enumerate(S.pieces):
            if isinstance(p, Subspace):
                red = max([red] + [reduction_residual(T.blocks[k], p) for T in ops])
        return {"reduction": num(red)}
    extra = tup.q_family() if tup is not None else []
    red = max([0.0] + [reduction_residual(X, S) for X in list(ops) + extra])
    out = {"reduction": num(red)}
    if S.dim == 0:
        return out
    rest = [compress(T, S) for T in ops]
    eye = np.eye(S.dim)
    out["unitarity"] = [
        num(max(opnorm(R.conj().T @ R - eye), opnorm(R @ R.conj().T - eye))) for R in rest
    ]
    if tup is not None and tup.n > 1:
        c = tup.commutation
        if c.is_scalar:
            sub = OperatorTuple(rest, CommutationData(q=c.q))
        else:
            sub = OperatorTuple(rest, CommutationData(
                Q=[[compress(c.Q[i][j], S) for j in range(tup.n)] for i in range(tup.n)]))
        out["relation_plain"] = num(relation_residual(sub, "plain").max())
        out["relation_doubly"] = num(relation_residual(sub, "doubly").max())
    return out


def run_decompose(f: OperatorFile, mode: str, tol: Tolerance, emit_bases: bool, operator: int) -> tuple[dict, int]:
    tup, source = _tuple_from_file(f, tol)
    report = {"command": "decompose", "mode": mode, "tol": tol.rel, "n": tup.n, "q_source": source}
    if mode == "canonical":
        if not 1 <= operator <= tup.n:
            raise InvalidArg(f"--operator must lie in 1..{tup.n}")
        T = tup.operators[operator - 1]
        report["operator"] = f.names[operator - 1]
        result = decomp.canonical_decomposition(T, tol)
        ops, ctx = [T], None
    else:
        fn = {
            "tuple": decomp.tuple_decomposition,
            "levan": decomp.cnu_tuple_decomposition,
            "split": decomp.unitary_cnu_split,
            "wold": decomp.wold_decomposition,
        }[mode]
        result = fn(tup, tol)
        ops, ctx = tup.operators, tup
    parts = []
    for sig, part in result.parts.items():
        S = part.subspace
        rec = {"signature": sig, "dim": S.dim}
        if isinstance(S, decomp.SlotSubspace):
            rec["shift_slots"] = S.shift_slots
        rec["labels"] = part.labels
        rec["residuals"] = _part_residuals(ctx, ops, S)
        if emit_bases:
            rec["basis"] = _basis_json(S)
        parts.append(rec)
    report["parts"] = parts
    d = result.diagnostics
    report["diagnostics"] = {
        "max_reduction_residual": num(d.max_reduction_residual),
        "completeness_residual": num(d.completeness_residual),
        "orthogonality_residual": num(d.orthogonality_residual),
        "iterations": d.iterations,
    }
    if result.q_blocks:
        report["q_blocks"] = [
            {"pair": [i + 1, j + 1], "Q1": matrix_to_json(Q1), "Q2": matrix_to_json(Q2)}
            for (i, j), (Q1, Q2) in result.q_blocks.items()
        ]
    report["warnings"] = result.warnings
    return report, EXIT_OK


# --------------------------------------------------------------------------
# generate

FAMILIES = ("clock-shift", "shift-phase", "planted", "random")


def _parse_params(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise InvalidArg(f"parameter {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _int(params, key, default):
    try:
        return int(params.pop(key, default))
    except ValueError:
        raise InvalidArg(f"{key} must be an integer") from None


def _float(params, key, default):
    try:
        return float(params.pop(key, default))
    except ValueError:
        raise InvalidArg(f"{key} must be a number") from None


def run_generate(family: str, params: dict, seed: int) -> tuple[dict, str]:
    params = dict(params)
    seed = _int(params, "seed", seed)
    meta = {"family": family, "seed": seed}
    summary = ""
    if family == "clock-shift":
        d = _int(params, "d", 3)
        tup = genlab.clock_shift(d)
        names = ["Z", "X"]
        meta.update(d=d, mode="doubly", decompose="tuple")
    elif family == "shift-phase":
        d = _int(params, "d", 3)
        phase = _float(params, "phase", 1.0 / d)
        scale = _float(params, "scale", 1.0)
        tup = genlab.shift_phase_pair(d, np.exp(2j * np.pi * phase), scale)
        names = ["J", "D"]
        meta.update(d=d, phase=phase, scale=scale, mode="doubly", decompose="tuple")
    elif family == "planted":
        n = _int(params, "n", 2)
        d_block = _int(params, "d_block", 3)
        sigs = params.pop("signatures", None)
        block_phases = params.pop("block_phases", "0") not in ("0", "false", "no")
        dims = None
        if sigs:
            dims = {}
            for tok in sigs.split(","):
                sig, _, m = tok.partition(":")
                dims[sig.strip()] = int(m) if m else d_block
        p = genlab.planted_tuple(n, d_block, dims, seed, block_phases=block_phases)
        tup = p.tuple
        names = [f"T{k + 1}" for k in range(n)]
        truth = {s: S.dim for s, S in p.ground_truth.items()}
        meta.update(n=n, d_block=d_block, block_phases=block_phases, mode="doubly", decompose="tuple",
                    ground_truth=truth, conjugator=matrix_to_json(p.conjugator))
        summary = "ground truth: " + ", ".join(f"{s}={m}" for s, m in truth.items())
    elif family == "random":
        d = _int(params, "d", 4)
        tup = OperatorTuple.dense([genlab.random_contraction(d, seed)])
        names = ["T"]
        meta.update(d=d, mode="plain", decompose="canonical")
    else:
        raise InvalidArg(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    if params:
        raise InvalidArg(f"unused parameters for {family}: {', '.join(sorted(params))}")
    return dump_operator_file(tup, names, meta), summary


# --------------------------------------------------------------------------
# text rendering


def _render(report: dict) -> str:
    lines = []
    cmd = report.get("command")
    if cmd == "verify":
        lines.append(f"mode: {report['mode']}   n: {report['n']}   q: {report['q_source']}")
        if "q" in report:
            for row in report["q"]:
                lines.append("  q  " + "  ".join(f"{_fmt(re)}{im:+.{DIGITS}g}j" for re, im in row))
        lines.append(f"threshold: {_fmt(report['threshold'])}")
        for name, grid in report["residuals"].items():
            lines.append(f"{name} residuals:")
            lines.extend("  " + "  ".join(_fmt(x) for x in row) for row in grid)
        if report["offending_pairs"]:
            lines.append("offending pairs: " + ", ".join(f"({i},{j})" for i, j in report["offending_pairs"]))
    if cmd in ("verify", "classify"):
        for o in report["operators"]:
            if not o["contraction"]:
                lines.append(f"{o['name']}: norm {_fmt(o['norm'])}  NOT a contraction")
                continue
            atom = o["atom_A"] or "non-atom"
            extra = f" {o['atom_B']}" if o["atom_B"] else ""
            lines.append(f"{o['name']}: norm {_fmt(o['norm'])}  {atom}{extra}  [{', '.join(o['flags'])}]")
    if cmd == "verify":
        lines.append("PASS" if report["passed"] else "FAIL")
    if cmd == "decompose":
        head = f"mode: {report['mode']}   n: {report['n']}   q: {report['q_source']}"
        if "operator" in report:
            head += f"   operator: {report['operator']}"
        lines.append(head)
        for p in report["parts"]:
            extra = f"  shift slots {p['shift_slots']}" if "shift_slots" in p else ""
            res = "  ".join(
                f"{k}={_fmt(v)}" if not isinstance(v, list) else f"{k}=[{', '.join(_fmt(x) for x in v)}]"
                for k, v in p["residuals"].items()
            )
            lines.append(f"  {p['signature']:<10} dim {p['dim']:<4} {' '.join(p['labels'])}{extra}  {res}")
            if "basis" in p:
                lines.append("    basis: " + json.dumps(p["basis"]))
        for k, v in report["diagnostics"].items():
            lines.append(f"{k}: {v if isinstance(v, int) else _fmt(v)}")
        for w in report["warnings"]:
            lines.append(f"warning: {w}")
    return "\n".join(lines)


def _emit(report: dict, as_json: bool):
    if as_json:
        print(json.dumps(report, indent=1))
    else:
        print(_render(report))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsplit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file")
        sp.add_argument("--tol", type=float, default=1e-10)
        sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("verify", help="check q-commuting / doubly q-commuting relations")
    common(sp)
    sp.add_argument("--mode", choices=("plain", "doubly"), default="plain")

    sp = sub.add_parser("classify", help="classify each operator")
    common(sp)

    sp = sub.add_parser("decompose", help="decompose the space into reducing parts")
    common(sp)
    sp.add_argument("--mode", choices=("canonical", "tuple", "levan", "split", "wold"), default="tuple")
    sp.add_argument("--emit-bases", action="store_true")
    sp.add_argument("--operator", type=int, default=1, help="1-based operator index (canonical mode)")

    sp = sub.add_parser("generate", help="write a generated operator file")
    sp.add_argument("family")
    sp.add_argument("params", nargs="*", help="key=value, e.g. d=4 n=2 d_block=3")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if args.command == "generate":
            data, summary = run_generate(args.family, _parse_params(args.params), args.seed)
            text = dumps(data)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
                if summary:
                    print(summary)
            else:
                sys.stdout.write(text)
                if summary:
                    print(summary, file=sys.stderr)
            return EXIT_OK
        tol = Tolerance(rel=args.tol)
        f = load_operator_file(args.file)
        if args.command == "verify":
            report, code = run_verify(f, args.mode, tol)
        elif args.command == "classify":
            report, code = run_classify(f, tol)
        else:
            report, code = run_decompose(f, args.mode, tol, args.emit_bases, args.operator)
        report["exit_code"] = code
        _emit(report, args.json)
        return code
    except QSplitError as exc:
        print(f"qsplit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"qsplit: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
