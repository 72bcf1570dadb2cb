"""Command-line front end.

Every command reads a k-graph description (``-i FILE``, or ``-`` for
standard input), prints a JSON document on standard output and a one-line
summary on standard error.  Exit codes: 0 success, 1 validation error,
2 numerical non-convergence, 3 resource cap.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys
from numbers import Integral

import numpy as np

from . import bratteli as br
from . import laplacian as lap
from . import spectral as sp
from . import wavelets as wv
from .cylinder import CylinderFunction, indicator, integral_M, refine
from .errors import (
    KBratteliError,
    NoConvergence,
    ParseError,
    ResourceCap,
    SchemaError,
    ValidationError,
)
from .kgraph import DEFAULT_TOL, KGraph, perron_data, validate_kgraph

INPUT_FIELDS = ("k", "num_vertices", "matrices", "labels")


# ---------------------------------------------------------------- input


def _loads_strict(text: str):
    def no_constants(name):
        raise ValueError(f"non-standard JSON constant {name}")

    try:
        return json.loads(text, parse_constant=no_constants)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def _decode(data) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not UTF-8 ({exc.reason} at byte {exc.start})") from None


def _is_int(v) -> bool:
    return isinstance(v, Integral) and not isinstance(v, bool)


def parse_input(data) -> dict:
    """Strictly parse and shape-check a k-graph document.

    Semantic checks (commutation, sources, connectivity) are left to
    :func:`validate_kgraph`.
    """
    doc = _loads_strict(_decode(data))
    if not isinstance(doc, dict):
        raise SchemaError("<document>", "top level must be a JSON object")
    for key in doc:
        if key not in INPUT_FIELDS:
            raise SchemaError(key, "unknown field")
    for key in ("k", "num_vertices", "matrices"):
        if key not in doc:
            raise SchemaError(key, "missing required field")
    k, n, mats = doc["k"], doc["num_vertices"], doc["matrices"]
    if not _is_int(k) or k < 1:
        raise SchemaError("k", "must be a positive integer")
    if not _is_int(n) or n < 1:
        raise SchemaError("num_vertices", "must be a positive integer")
    if not isinstance(mats, list) or len(mats) != k:
        raise SchemaError("matrices", f"must be a list of k={k} matrices")
    for i, m in enumerate(mats):
        if not isinstance(m, list) or len(m) != n:
            raise SchemaError(f"matrices[{i}]", f"must have {n} rows")
        for r, row in enumerate(m):
            if not isinstance(row, list) or len(row) != n:
                raise SchemaError(f"matrices[{i}][{r}]", f"ragged row: expected {n} entries")
            for c, v in enumerate(row):
                if not _is_int(v):
                    raise SchemaError(f"matrices[{i}][{r}][{c}]", f"{v!r} is not an integer")
    if "labels" in doc:
        labels = doc["labels"]
        if not isinstance(labels, list) or len(labels) != n or not all(isinstance(s, str) for s in labels):
            raise SchemaError("labels", f"must be a list of {n} strings")
    return doc


def load_graph(doc: dict) -> KGraph:
    return validate_kgraph(doc["k"], doc["num_vertices"], doc["matrices"])


def parse_function(g: KGraph, data) -> CylinderFunction:
    """``{"depth": N, "coeffs": [...]}`` or ``{"terms": [{"path": "...", "coeff": c}, ...]}``."""
    doc = _loads_strict(_decode(data))
    if not isinstance(doc, dict):
        raise SchemaError("<function>", "must be a JSON object")
    if "terms" in doc:
        extra = set(doc) - {"terms"}
        if extra:
            raise SchemaError(sorted(extra)[0], "unknown field")
        terms = doc["terms"]
        if not isinstance(terms, list) or not terms:
            raise SchemaError("terms", "must be a nonempty list")
        parsed = []
        for i, t in enumerate(terms):
            if not isinstance(t, dict) or set(t) != {"path", "coeff"}:
                raise SchemaError(f"terms[{i}]", "needs exactly the fields path and coeff")
            if not isinstance(t["coeff"], (int, float)) or isinstance(t["coeff"], bool):
                raise SchemaError(f"terms[{i}].coeff", "must be a number")
            parsed.append((br.parse_path(str(t["path"]), g), float(t["coeff"])))
        depth = max(len(p) for p, _ in parsed)
        total = CylinderFunction(g, depth, np.zeros(len(br.path_space(g).paths(depth))))
        for p, c in parsed:
            total = total + indicator(g, p, depth) * c
        return total
    for key in doc:
        if key not in ("depth", "coeffs"):
            raise SchemaError(key, "unknown field")
    for key in ("depth", "coeffs"):
        if key not in doc:
            raise SchemaError(key, "missing required field")
    if not _is_int(doc["depth"]) or doc["depth"] < 0:
        raise SchemaError("depth", "must be a nonnegative integer")
    coeffs = doc["coeffs"]
    if not isinstance(coeffs, list) or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in coeffs):
        raise SchemaError("coeffs", "must be a list of numbers")
    return CylinderFunction(g, doc["depth"], np.array(coeffs, dtype=float))


# ---------------------------------------------------------------- output


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, br.BratteliPath):
        return br.format_path(obj)
    if obj is lap.ROOT:
        return "ROOT"
    if obj is lap.CONSTANTS:
        return "CONSTANTS"
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), ensure_ascii=False, allow_nan=False)


def matrix_csv(matrix: np.ndarray, labels) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(labels)
    for row in np.asarray(matrix):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def table_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: jsonable(v) for k, v in r.items()})
    return buf.getvalue()


def _write_csv(path: str | None, text: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------- commands


def _spectral_cfg(args) -> sp.SpectralConfig:
    tol = args.tol if args.tol is not None else sp.SpectralConfig().tol
    return sp.SpectralConfig(delta=args.delta, tol=tol)


def _path(g, text):
    return br.parse_path(text, g)


def cmd_validate(g, pd, args, doc):
    out = {"valid": True, "hypothesis_3_2": g.hypothesis_3_2, "cantor": g.cantor, "rho": list(pd.rho)}
    if "labels" in doc:
        out["labels"] = doc["labels"]
    return out, f"valid {g.k}-graph on {g.num_vertices} vertices"


def cmd_perron(g, pd, args, doc):
    out = {
        "rho": list(pd.rho),
        "rho_prod": pd.rho_prod,
        "x": pd.x,
        "period_p": pd.period_p,
        "product_irreducible": pd.product_irreducible,
        "hypothesis_3_2": pd.hypothesis_3_2,
        "limit_matrices": [m for m in pd.limit_matrices],
        "iterations": pd.iterations,
    }
    return out, f"rho = {list(pd.rho)}, period {pd.period_p}"


def cmd_paths(g, pd, args, doc):
    prefix = _path(g, args.prefix) if args.prefix else None
    if args.list:
        paths = br.enumerate_paths(g, args.length, prefix, args.cap)
        _write_csv(args.csv, table_csv([{"index": i, "path": p, "source": p.source} for i, p in enumerate(paths)]))
        return {"length": args.length, "count": len(paths), "paths": paths}, f"{len(paths)} paths"
    if prefix is None:
        c = br.count_paths(g, pd, args.length)
    else:
        c = len(br.enumerate_paths(g, args.length, prefix, args.cap))
    return {"length": args.length, "count": c}, f"{c} paths of length {args.length}"


def cmd_weight(g, pd, args, doc):
    p = _path(g, args.path)
    w = br.weight_delta(g, pd, p, args.delta, require_hypothesis=False)
    return {"path": p, "delta": args.delta, "weight": w}, f"w = {w:.12g}"


def cmd_measure(g, pd, args, doc):
    p = _path(g, args.path)
    m = br.measure_M(g, pd, p)
    return {"path": p, "M": m}, f"M = {m:.12g}"


def cmd_distance(g, pd, args, doc):
    a, b = _path(g, args.path), _path(g, args.other)
    d = br.distance(g, pd, a, b, args.delta, require_hypothesis=False)
    return {"path": a, "other": b, "delta": args.delta, "distance": d}, f"d = {d:.12g}"


def cmd_zeta(g, pd, args, doc):
    if args.partial is not None:
        v = sp.zeta_partial(g, pd, args.delta, args.s, args.partial)
        out = {"delta": args.delta, "s": args.s, "depth": args.partial, "partial": v}
        if args.s > args.delta:
            out["tail_bound"] = sp.zeta_tail_bound(g, pd, args.delta, args.s, args.partial)
        return out, f"partial sum to depth {args.partial} = {v:.12g}"
    v = sp.zeta(g, pd, args.delta, args.s)
    return {"delta": args.delta, "s": args.s, "zeta": v}, f"zeta = {v:.12g}"


def cmd_abscissa(g, pd, args, doc):
    out = sp.abscissa_verify(g, pd, args.delta)
    return out, f"abscissa {args.delta}, divergent at delta: {out['divergent_at_delta']}"


def cmd_dixmier(g, pd, args, doc):
    cfg = _spectral_cfg(args)
    if args.path is None:
        total = sp.dixmier_total(g, pd, args.delta, cfg)
        return {"delta": args.delta, "total": total}, f"Dixmier trace = {total:.12g}"
    p = _path(g, args.path)
    if args.method == "closed-form":
        r = sp.dixmier_mu_closed(g, pd, p, args.delta, cfg)
        diag = r.diagnostics
    else:
        r = sp.dixmier_mu(g, pd, p, cfg)
        diag = {"residual": r.diagnostics["residual"], "extrapolants": r.diagnostics["extrapolants"]}
    return {"path": p, "delta": args.delta, "mu": r.value, "method": r.method, "diagnostics": diag}, f"mu = {r.value:.12g}"


def cmd_nu(g, pd, args, doc):
    cfg = _spectral_cfg(args)
    p = _path(g, args.path)
    v = sp.nu(g, pd, p, args.delta, cfg)
    m = br.measure_M(g, pd, p)
    return {"path": p, "delta": args.delta, "nu": v, "M": m, "abs_err": abs(v - m)}, f"nu = {v:.12g}, M = {m:.12g}"


def cmd_integrate(g, pd, args, doc):
    cfg = _spectral_cfg(args)
    with open(args.function, "rb") as fh:
        f = parse_function(g, fh.read())
    v = sp.integrate(g, pd, f, args.delta, cfg)
    total = sp.dixmier_total(g, pd, args.delta, cfg)
    out = {"delta": args.delta, "depth": f.depth, "integral": v, "normalized": v / total, "integral_M": integral_M(g, pd, f)}
    return out, f"Dixmier integral = {v:.12g}"


def cmd_laplacian(g, pd, args, doc):
    L = lap.assemble_delta(g, pd, args.delta, args.s, args.depth, args.cap)
    M = br.level_measures(g, pd, args.depth)
    WL = M[:, None] * L
    asym = float(np.max(np.abs(WL - WL.T)) / max(np.max(np.abs(WL)), 1e-300))
    labels = [br.format_path(p) for p in br.path_space(g).paths(args.depth)]
    out = {
        "delta": args.delta,
        "s": args.s,
        "depth": args.depth,
        "size": len(labels),
        "raw_sign": lap.RAW_SIGN,
        "max_relative_asymmetry": asym,
        "constant_residual": float(np.max(np.abs(L.sum(axis=1)))),
    }
    if args.emit_matrix:
        out["labels"] = labels
        out["matrix"] = L
    _write_csv(args.csv, matrix_csv(L, labels))
    return out, f"{len(labels)}x{len(labels)} Laplacian, relative asymmetry {asym:.2e}"


def cmd_eigs(g, pd, args, doc):
    s_values = args.s_list
    depth = args.max_gamma_len + 1
    report = lap.verify_eigenpairs(g, pd, args.delta, s_values, depth)
    rows = []
    for node in lap.nodes_up_to(g, args.max_gamma_len):
        basis = lap.eigenspace_basis(g, pd, node)
        row = {"node": node, "level": lap.node_level(node), "dim": len(basis)}
        for s in s_values:
            row[f"lambda(s={s:g})"] = lap.lambda_gamma(g, pd, node, s, args.delta)
        rows.append(row)
    _write_csv(args.csv, table_csv(rows))
    out = {
        "delta": args.delta,
        "s": list(s_values),
        "depth": depth,
        "eigenspaces": rows,
        "max_residual": report.max_residual,
        "max_gram_offdiag": report.max_gram_offdiag,
        "rank": report.rank,
        "dimension": report.dimension,
        "raw_sign": report.raw_sign,
    }
    return out, f"{len(rows)} eigenspaces, max residual {report.max_residual:.2e}"


def cmd_wavelets(g, pd, args, doc):
    n = args.level
    W = wv.wavelet_basis(g, pd, n)
    out = {
        "level": n,
        "dim_V": len(br.path_space(g).paths(n * g.k)),
        "dim_V_next": len(br.path_space(g).paths((n + 1) * g.k)),
        "dim_W": len(W),
        "mother_functions": {str(v): len(wv.mother_functions(g, pd, v)) for v in range(g.num_vertices)},
    }
    if args.csv and W:
        G = wv.gram_matrix(g, pd, W)
        _write_csv(args.csv, matrix_csv(G, [f"S_{n}[{i}]" for i in range(len(W))]))
    if args.verify_refinement:
        tol = args.tol if args.tol is not None else 1e-8
        rep = wv.verify_refinement(g, pd, args.delta, n, tol)
        out["refinement"] = {
            "passed": True,
            "v0_rank": rep.v0_rank,
            "v0_residual": rep.v0_residual,
            "dim_E": rep.dim_E,
            "rank_W": rep.rank_W,
            "rank_E": rep.rank_E,
            "residual_E_in_W": rep.residual_E_in_W,
            "residual_W_in_E": rep.residual_W_in_E,
            "orthogonality_W_V": rep.orthogonality_W_V,
        }
    return out, f"dim W_{n} = {len(W)}"


def cmd_ck_check(g, pd, args, doc):
    out = wv.verify_ck(g, pd, args.depth)
    worst = max(out[k] for k in ("CK1", "CK2", "CK3", "CK4"))
    return out, f"max CK residual {worst:.2e}"


COMMANDS = {
    "validate": cmd_validate,
    "perron": cmd_perron,
    "paths": cmd_paths,
    "weight": cmd_weight,
    "measure": cmd_measure,
    "distance": cmd_distance,
    "zeta": cmd_zeta,
    "abscissa": cmd_abscissa,
    "dixmier": cmd_dixmier,
    "nu": cmd_nu,
    "integrate": cmd_integrate,
    "laplacian": cmd_laplacian,
    "eigs": cmd_eigs,
    "wavelets": cmd_wavelets,
    "ck-check": cmd_ck_check,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"usage: {message}")


def _s_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad s list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    shared = _Parser(add_help=False)
    shared.add_argument("-i", "--input", required=True, help="k-graph JSON file, or - for stdin")
    shared.add_argument("--delta", type=float, default=0.5, help="weight exponent in (0, 1)")
    shared.add_argument("--csv", help="also write a CSV table or matrix to this file")
    shared.add_argument("--tol", type=float, help="tolerance for the command's numerical check")
    shared.add_argument("--cap", type=int, help="enumeration cap (overrides KBRATTELI_CAP)")

    p = _Parser(prog="kbratteli", description="Spectral triples, Dixmier traces and wavelets on k-graphs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("validate", parents=[shared], help="check the k-graph axioms")
    sub.add_parser("perron", parents=[shared], help="Perron-Frobenius data")
    q = sub.add_parser("paths", parents=[shared], help="count or list finite paths")
    q.add_argument("--length", type=int, required=True)
    mode = q.add_mutually_exclusive_group()
    mode.add_argument("--count", action="store_true", help="print the number of paths (default)")
    mode.add_argument("--list", action="store_true", help="list the paths")
    q.add_argument("--prefix")
    for name in ("weight", "measure"):
        q = sub.add_parser(name, parents=[shared])
        q.add_argument("--path", required=True)
    q = sub.add_parser("distance", parents=[shared])
    q.add_argument("--path", required=True)
    q.add_argument("--other", required=True)
    q = sub.add_parser("zeta", parents=[shared])
    q.add_argument("--s", type=float, required=True)
    q.add_argument("--partial", type=int, metavar="N")
    sub.add_parser("abscissa", parents=[shared])
    q = sub.add_parser("dixmier", parents=[shared])
    q.add_argument("--path")
    q.add_argument("--method", choices=("extrapolate", "closed-form"), default="extrapolate")
    q = sub.add_parser("nu", parents=[shared])
    q.add_argument("--path", required=True)
    q = sub.add_parser("integrate", parents=[shared])
    q.add_argument("--function", required=True, help="JSON file with depth/coeffs or terms")
    q = sub.add_parser("laplacian", parents=[shared])
    q.add_argument("--s", type=float, required=True)
    q.add_argument("--depth", type=int, required=True)
    q.add_argument("--emit-matrix", action="store_true")
    q = sub.add_parser("eigs", parents=[shared])
    q.add_argument("--s", dest="s_list", type=_s_list, default=[0.5, 2.0], help="comma-separated s values")
    q.add_argument("--max-gamma-len", type=int, default=2)
    q = sub.add_parser("wavelets", parents=[shared])
    q.add_argument("--level", type=int, default=0)
    q.add_argument("--verify-refinement", action="store_true")
    q = sub.add_parser("ck-check", parents=[shared])
    q.add_argument("--depth", type=int, default=4)
    return p


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ResourceCap):
        return 3
    if isinstance(exc, NoConvergence):
        return 2
    if isinstance(exc, (ValidationError, OSError)):
        return 1
    return 1


@contextlib.contextmanager
def _cap_env(cap):
    if cap is None:
        yield
        return
    old = os.environ.get("KBRATTELI_CAP")
    os.environ["KBRATTELI_CAP"] = str(cap)
    try:
        yield
    finally:
        if old is None:
            del os.environ["KBRATTELI_CAP"]
        else:
            os.environ["KBRATTELI_CAP"] = old


def run(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.cap is not None and args.cap < 1:
            raise ValidationError("--cap must be positive")
        with _cap_env(args.cap):
            if args.input == "-":
                raw = stdin.read()
            else:
                with open(args.input, "rb") as fh:
                    raw = fh.read()
            doc = parse_input(raw)
            g = load_graph(doc)
            tol = args.tol if (args.command == "perron" and args.tol is not None) else DEFAULT_TOL
            pd = perron_data(g, tol=tol)
            out, summary = COMMANDS[args.command](g, pd, args, doc)
        stdout.write(dumps(out) + "\n")
        stderr.write(summary + "\n")
        return 0
    except (KBratteliError, OSError, OverflowError) as exc:
        code = exit_code_for(exc)
        reason = {"error": type(exc).__name__, "exit_code": code, "message": str(exc).replace("\n", " ")}
        stderr.write(json.dumps(reason) + "\n")
        return code


def main(argv=None) -> None:
    sys.exit(run(argv))
