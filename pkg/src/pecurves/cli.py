"""Command-line front end.

Subcommands: validate, invariants, classify, equiv, sample-group.
Reports go to stdout (JSON by default, CSV for tabular output),
diagnostics to stderr.  Exit codes: 0 success/equivalent, 1 parse error,
2 validation failed, 3 not equivalent, 4 usage or configuration error,
5 computation failed (indeterminate tail, singular frames, quadrature).

Every report embeds the fully resolved configuration, and identical
configurations (including the seed) produce byte-identical output.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .arclength import classify_type, curves_equivalent, is_nondegenerate
from .equivalence import paths_equivalent, sample_group_element
from .errors import PathParseError, PECurvesError
from .forms import FieldTag, GroupFamily, GroupTag, Signature, membership_defect
from .invariants import is_strongly_regular, signature_rows
from .pathexpr import chebyshev_grid, parse_path, sample_grid

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INVALID = 2
EXIT_NOT_EQUIVALENT = 3
EXIT_USAGE = 4
EXIT_COMPUTE = 5


# ---------------------------------------------------------------------------
# Deterministic serialization (17 significant digits, round-trip safe)


def _num(v: float) -> str:
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    if math.isnan(v):
        return '"nan"'
    return format(float(v), ".17g")


def _json(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        out = obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{out}"'
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, complex):
        return f'{{"re": {_num(obj.real)}, "im": {_num(obj.imag)}}}'
    if isinstance(obj, dict):
        inner = ", ".join(f"{_json(str(k))}: {_json(v)}" for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _json(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return _num(float(obj))
    if isinstance(obj, (np.integer,)):
        return str(int(obj))
    if isinstance(obj, (np.complexfloating,)):
        return _json(complex(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def emit_json(obj) -> str:
    return _json(obj) + "\n"


def _cell(v) -> str:
    if isinstance(v, complex):
        im = f"+{format(v.imag, '.17g')}" if v.imag >= 0 else format(v.imag, ".17g")
        return f"{format(v.real, '.17g')}{im}i"
    return format(float(v), ".17g")


# ---------------------------------------------------------------------------
# Helpers


def _load_path(path_file: str):
    try:
        with open(path_file, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise PathParseError(f"cannot read {path_file}: {exc}") from None
    return parse_path(text)


def _group_from_args(args, path=None) -> GroupTag:
    family = GroupFamily(args.group)
    if path is not None:
        n, p, field = path.sig.n, path.sig.p, path.field
        if args.n is not None and args.n != n:
            raise _Usage(f"--n {args.n} contradicts the file header n={n}")
        if args.p is not None and args.p != p:
            raise _Usage(f"--p {args.p} contradicts the file header p={p}")
    else:
        if args.n is None or args.p is None:
            raise _Usage("--n and --p are required when no path file fixes them")
        n, p = args.n, args.p
        field = FieldTag(args.field)
    return GroupTag(family, Signature(n, p), field)


class _Usage(Exception):
    pass


def _write_out(args, text: str):
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args, command: str, **extra) -> dict:
    cfg = {
        "command": command,
        "grid": args.grid,
        "margin": args.margin,
        "tol": args.tol,
        "qtol": args.qtol,
        "seed": args.seed,
        "format": args.format,
    }
    cfg.update(extra)
    return cfg


def _group_dict(group: GroupTag) -> dict:
    return {"family": group.family.value, "n": group.sig.n, "p": group.sig.p,
            "field": group.field.value, "name": str(group)}


def _witness_dict(witness) -> dict | None:
    if witness is None:
        return None
    g = [[complex(v) if np.iscomplexobj(witness.g) else float(v) for v in row]
         for row in np.asarray(witness.g)]
    u = None
    if witness.u is not None:
        u = [complex(v) if np.iscomplexobj(witness.u) else float(v)
             for v in np.asarray(witness.u)]
    return {"g": g, "u": u}


def _verdict_dict(verdict) -> dict:
    doc = {
        "equivalent": verdict.equivalent,
        "group": _group_dict(verdict.group),
        "tolerance": verdict.tolerance,
        "witness": _witness_dict(verdict.witness),
        "max_defect": verdict.max_defect,
        "failures": [{"t": f.t, "identity": f.identity, "defect": f.defect}
                     for f in verdict.failures],
    }
    if hasattr(verdict, "type_x"):
        doc["type_x"] = verdict.type_x.value if verdict.type_x else None
        doc["type_y"] = verdict.type_y.value if verdict.type_y else None
        doc["s0"] = verdict.s0
        doc["interval_x"] = list(verdict.interval_x) if verdict.interval_x else None
        doc["interval_y"] = list(verdict.interval_y) if verdict.interval_y else None
    return doc


# ---------------------------------------------------------------------------
# Commands


def cmd_validate(args) -> int:
    path = _load_path(args.file)
    grid = sample_grid(path.interval, args.grid, margin=args.margin)
    reg = is_strongly_regular(path, grid)
    nd = is_nondegenerate(path, grid)
    report = {
        "config": _config(args, "validate", file=args.file),
        "path": {"label": path.label, "n": path.sig.n, "p": path.sig.p,
                 "field": path.field.value, "interval": [path.interval.a, path.interval.b]},
        "strongly_regular": reg.passed,
        "non_degenerate": nd.passed,
        "det_m": {"min_abs": reg.min_abs, "max_abs": reg.max_abs},
        "velocity_form": {"min_abs": nd.min_abs, "max_abs": nd.max_abs},
        "failures": {
            "det_m": [{"t": t, "value": v} for t, v in reg.failures[:16]],
            "velocity_form": [{"t": t, "value": v} for t, v in nd.failures[:16]],
        },
    }
    _write_out(args, emit_json(report))
    return EXIT_OK if (reg.passed and nd.passed) else EXIT_INVALID


def cmd_invariants(args) -> int:
    path = _load_path(args.file)
    group = _group_from_args(args, path)
    grid = sample_grid(path.interval, args.grid, margin=args.margin)
    rows = signature_rows(path, group, grid)
    k = len(rows[0].values) if rows else 0
    if args.format == "csv":
        lines = [f"# command=invariants file={args.file} group={group} "
                 f"grid={args.grid} margin={format(args.margin, '.17g')}"]
        lines.append("t," + ",".join(f"v{j + 1}" for j in range(k)))
        for row in rows:
            lines.append(_cell(row.t) + "," + ",".join(_cell(v) for v in row.values))
        _write_out(args, "\n".join(lines) + "\n")
    else:
        report = {
            "config": _config(args, "invariants", file=args.file),
            "group": _group_dict(group),
            "path": {"label": path.label},
            "columns": ["t"] + [f"v{j + 1}" for j in range(k)],
            "rows": [{"t": row.t, "values": list(row.values)} for row in rows],
        }
        _write_out(args, emit_json(report))
    return EXIT_OK


def cmd_classify(args) -> int:
    path = _load_path(args.file)
    typed = classify_type(path, tol=args.qtol)
    report = {
        "config": _config(args, "classify", file=args.file),
        "path": {"label": path.label},
        "type": typed.ptype.value,
        "A": typed.a_inv,
        "B": typed.b_inv,
        "a_I": typed.a_I,
        "tail_diagnostics": typed.tail_diagnostics(),
    }
    _write_out(args, emit_json(report))
    return EXIT_OK


def cmd_equiv(args) -> int:
    x = _load_path(args.file_a)
    y = _load_path(args.file_b)
    if x.sig.n != y.sig.n:
        raise _Usage(f"paths have different dimensions: n={x.sig.n} vs n={y.sig.n}")
    if x.sig.p != y.sig.p:
        raise _Usage(f"paths have different indices: p={x.sig.p} vs p={y.sig.p}")
    if x.field is not y.field:
        raise _Usage("paths are over different fields")
    group = _group_from_args(args, x)
    if args.mode == "paths":
        grid = chebyshev_grid(x.interval, args.grid, margin=args.margin)
        verdict = paths_equivalent(x, y, group, grid=grid, tol=args.tol)
    else:
        verdict = curves_equivalent(x, y, group, tol=args.tol, qtol=args.qtol,
                                    grid_count=args.grid)
    report = {"config": _config(args, "equiv", file_a=args.file_a, file_b=args.file_b,
                                mode=args.mode)}
    report.update(_verdict_dict(verdict))
    _write_out(args, emit_json(report))
    return EXIT_OK if verdict.equivalent else EXIT_NOT_EQUIVALENT


def cmd_sample_group(args) -> int:
    group = _group_from_args(args)
    elements = []
    for k in range(args.count):
        h = sample_group_element(group, seed=args.seed + k, scale=args.scale)
        defect = membership_defect(h.g, group.family, group.sig)
        elements.append({"seed": args.seed + k,
                         "element": _witness_dict(h),
                         "defect": defect})
    report = {
        "config": _config(args, "sample-group", count=args.count, scale=args.scale),
        "group": _group_dict(group),
        "elements": elements,
    }
    _write_out(args, emit_json(report))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pecurves",
        description="Equivalence of paths and oriented curves in (pseudo-)Euclidean "
                    "space under the (special) pseudo-orthogonal and motion groups.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, group_flag=False, sample=False):
        p.add_argument("--grid", type=int, default=33, help="grid size (default 33)")
        p.add_argument("--margin", type=float, default=0.08,
                       help="grid margin away from interval ends (default 0.08)")
        p.add_argument("--tol", type=float, default=1e-8,
                       help="algebraic tolerance (default 1e-8)")
        p.add_argument("--qtol", type=float, default=1e-10,
                       help="quadrature tolerance (default 1e-10)")
        p.add_argument("--seed", type=int, default=0, help="PRNG seed (default 0)")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--output", "-o", default=None, help="write the report here")
        if group_flag:
            p.add_argument("--group", choices=[f.value for f in GroupFamily],
                           required=True, help="group family: o, so, eo (K^n x O), eso")
            p.add_argument("--n", type=int, default=None)
            p.add_argument("--p", type=int, default=None)
            p.add_argument("--field", choices=["real", "complex"], default="real")

    p_val = sub.add_parser("validate", help="parse + strong regularity + non-degeneracy")
    p_val.add_argument("file")
    common(p_val)

    p_inv = sub.add_parser("invariants", help="generator invariants over a grid")
    p_inv.add_argument("file")
    common(p_inv, group_flag=True)

    p_cls = sub.add_parser("classify", help="type L1-L4 and invariant interval")
    p_cls.add_argument("file")
    common(p_cls)

    p_eq = sub.add_parser("equiv", help="decide equivalence of two path files")
    p_eq.add_argument("file_a")
    p_eq.add_argument("file_b")
    p_eq.add_argument("--mode", choices=["paths", "curves"], default="paths")
    common(p_eq, group_flag=True)

    p_sg = sub.add_parser("sample-group", help="sample reproducible group elements")
    p_sg.add_argument("--count", type=int, default=1)
    p_sg.add_argument("--scale", type=float, default=1.0)
    common(p_sg, group_flag=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "validate": cmd_validate,
        "invariants": cmd_invariants,
        "classify": cmd_classify,
        "equiv": cmd_equiv,
        "sample-group": cmd_sample_group,
    }
    try:
        return handlers[args.command](args)
    except PathParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PECurvesError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
