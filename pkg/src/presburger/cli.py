"""Batch command line: every toolkit operation behind one subcommand.

Output is deterministic byte-for-byte for fixed inputs and seeds; --json
switches the human-readable summaries to machine-readable JSON.  Exit code
0 on success, 1 when a verification fails, 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .cells import DecomposeError, FunctionSpec, cell_json, decompose, rule_json
from .groups import (
    GroupError,
    cocycle,
    ext_add,
    ext_neg,
    load_spec,
    parse_element,
    verify_extension,
)
from .model import EvalError, NonstdInt, check_zgroup_axioms, enumerate_box
from .normal_form import normal_form, normal_form_json, verify_map
from .parse import ParseError, parse
from .qe import decide, eliminate
from .syntax import free_vars, show


def _read_formula(text: str):
    if text.startswith("@"):
        with open(text[1:], "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse(text)


def _parse_box(items) -> dict[str, tuple[int, int]]:
    box = {}
    for item in items or ():
        try:
            name, rng = item.split("=", 1)
            lo, hi = rng.split("..", 1)
            box[name.strip()] = (int(lo), int(hi))
        except ValueError:
            raise EvalError(f"bad --box {item!r}; expected var=lo..hi")
    return box


def _parse_params(items) -> dict:
    vals: dict = {}
    for item in items or ():
        if "=" not in item:
            raise EvalError(f"bad --param {item!r}; expected name=value")
        name, raw = item.split("=", 1)
        raw = raw.strip()
        if ";" in raw:
            vals[name.strip()] = NonstdInt.parse(raw)
        else:
            vals[name.strip()] = int(raw)
    levels = {v.s for v in vals.values() if isinstance(v, NonstdInt)}
    if levels:
        if len(levels) > 1:
            raise EvalError("parameter values come from different models")
        s = levels.pop()
        vals = {
            k: v if isinstance(v, NonstdInt) else NonstdInt.from_int(v, s)
            for k, v in vals.items()
        }
    return vals


def _point_vars(args, formula) -> tuple[str, ...]:
    if args.vars:
        return tuple(v.strip() for v in args.vars.split(",") if v.strip())
    return tuple(sorted(free_vars(formula)))


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, separators=(",", ":"), sort_keys=True))
    else:
        print(text)


def cmd_qe(args) -> int:
    out = eliminate(_read_formula(args.formula))
    _emit(args, {"formula": show(out)}, show(out))
    return 0


def cmd_decide(args) -> int:
    value = decide(_read_formula(args.formula))
    _emit(args, {"value": value}, "true" if value else "false")
    return 0


def cmd_enum(args) -> int:
    f = _read_formula(args.formula)
    box = _parse_box(args.box)
    points = enumerate_box(f, box, cap=args.cap)
    if args.json:
        print(json.dumps({"vars": sorted(box), "points": [list(p) for p in points]},
                         separators=(",", ":"), sort_keys=True))
    else:
        for p in points:
            print(",".join(str(c) for c in p))
    return 0


def _parse_funcs(items, point_vars) -> tuple[FunctionSpec, ...]:
    funcs = []
    for item in items or ():
        try:
            name, outs, graph = item.split(":", 2)
        except ValueError:
            raise DecomposeError(f"bad --func {item!r}; expected name:outs:graph")
        outputs = tuple(o.strip() for o in outs.split(",") if o.strip())
        funcs.append(
            FunctionSpec(
                name=name.strip(),
                graph=_read_formula(graph),
                inputs=tuple(point_vars),
                outputs=outputs,
            )
        )
    return tuple(funcs)


def cmd_cells(args) -> int:
    f = _read_formula(args.formula)
    refine = tuple(_read_formula(t) for t in args.refine or ())
    pv = _point_vars(args, f)
    funcs = _parse_funcs(args.func, pv)
    out = decompose(f, pv, refine=refine, funcs=funcs)
    payload = [
        {
            "part": r.part,
            "cell": cell_json(r.cell),
            "rules": {name: rule_json(rule) for name, rule in sorted(r.rules.items())},
        }
        for r in out
    ]
    if args.json:
        print(json.dumps({"cells": payload}, separators=(",", ":"), sort_keys=True))
    else:
        print(f"{len(out)} cells")
        for i, r in enumerate(out):
            from .cells import cell_formula

            print(f"[{i}] part={r.part} {show(cell_formula(r.cell))}")
            for name in sorted(r.rules):
                rule = r.rules[name]
                rows = [str(rule.row_term(k, r.cell.variables)) for k in range(rule.rows)]
                print(f"    {name}: {rows}")
    return 0


def _normal_form_out(args, verify: bool) -> int:
    f = _read_formula(args.formula)
    pv = _point_vars(args, f)
    params = _parse_params(args.param)
    nf = normal_form(f, pv, params or None)
    status = 0
    errors: list[str] = []
    if verify:
        errors = verify_map(nf.bijection, params or None)
        if errors:
            status = 1
    payload = normal_form_json(nf)
    if errors:
        payload["errors"] = errors
    if args.json:
        print(json.dumps(payload, separators=(",", ":"), sort_keys=True))
    else:
        print(f"r={nf.rank} s={nf.box_dim}")
        print(json.dumps(payload, separators=(",", ":"), sort_keys=True))
        for e in errors:
            print(f"FAIL {e}")
    return status


def cmd_ubd(args) -> int:
    return _normal_form_out(args, verify=False)


def cmd_normal_form(args) -> int:
    return _normal_form_out(args, verify=args.verify)


def cmd_group(args) -> int:
    spec = load_spec(args.spec)
    if args.group_cmd == "verify":
        report = verify_extension(spec, trials=args.trials, seed=args.seed)
        summary = {name: spec_count for name, spec_count in sorted(report.checks.items())}
        if args.json:
            print(json.dumps(
                {"passed": report.passed, "checks": summary, "failures": report.failures},
                separators=(",", ":"), sort_keys=True))
        else:
            print("PASS" if report.passed else "FAIL")
            for name, count in sorted(summary.items()):
                print(f"  {name}: {count}")
            for fail in report.failures:
                print(f"  FAIL {fail}")
        return 0 if report.passed else 1
    if args.group_cmd == "add":
        g = ext_add(parse_element(args.lhs, spec), parse_element(args.rhs, spec), spec)
        _emit(args, {"element": str(g)}, str(g))
        return 0
    if args.group_cmd == "neg":
        g = ext_neg(parse_element(args.lhs, spec), spec)
        _emit(args, {"element": str(g)}, str(g))
        return 0
    # cocycle
    x = parse_element(args.lhs, spec)
    y = parse_element(args.rhs, spec)
    val = cocycle(x.x, y.x, spec)
    text = " ".join(str(a) for a in val)
    _emit(args, {"cocycle": text}, text)
    return 0


def cmd_axioms(args) -> int:
    status = 0
    results = []
    for s in args.levels:
        report = check_zgroup_axioms(s, args.trials, args.seed)
        results.append(report)
        if not report.passed:
            status = 1
    if args.json:
        print(json.dumps(
            {
                "reports": [
                    {"s": r.s, "passed": r.passed, "trials": r.trials, "failures": r.failures}
                    for r in results
                ]
            },
            separators=(",", ":"), sort_keys=True))
    else:
        for r in results:
            line = "PASS" if r.passed else "FAIL"
            print(f"s={r.s} trials={r.trials} seed={r.seed} {line}")
            for fail in r.failures:
                print(f"  {fail}")
    return status


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="presburger",
        description="Exact Presburger arithmetic toolkit (quantifier "
        "elimination, cells, normal forms, nonstandard Z-group groups).",
    )
    top.add_argument("--json", action="store_true", help="machine-readable output")
    sub = top.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("qe", help="eliminate quantifiers")
    p.add_argument("formula")
    p.set_defaults(fn=cmd_qe)

    p = sub.add_parser("decide", help="decide a sentence")
    p.add_argument("formula")
    p.set_defaults(fn=cmd_decide)

    p = sub.add_parser("enum", help="enumerate solutions in a box")
    p.add_argument("formula")
    p.add_argument("--box", action="append", metavar="var=lo..hi", required=True)
    p.add_argument("--cap", type=int, default=10**7)
    p.set_defaults(fn=cmd_enum)

    p = sub.add_parser("cells", help="cell decomposition")
    p.add_argument("formula")
    p.add_argument("--vars", help="comma-separated point variables (default: sorted free)")
    p.add_argument("--refine", action="append", metavar="FORMULA")
    p.add_argument("--func", action="append", metavar="name:outs:graph")
    p.set_defaults(fn=cmd_cells)

    p = sub.add_parser("ubd", help="degree of unboundedness and normal form")
    p.add_argument("formula")
    p.add_argument("--vars")
    p.add_argument("--param", action="append", metavar="name=value")
    p.set_defaults(fn=cmd_ubd)

    p = sub.add_parser("normal-form", help="normal form with certificates")
    p.add_argument("formula")
    p.add_argument("--vars")
    p.add_argument("--param", action="append", metavar="name=value")
    p.add_argument("--verify", action="store_true", help="run decide certificates")
    p.set_defaults(fn=cmd_normal_form)

    p = sub.add_parser("group", help="extension-group operations")
    gsub = p.add_subparsers(dest="group_cmd", required=True)
    for name, nargs in (("add", 2), ("neg", 1), ("cocycle", 2)):
        g = gsub.add_parser(name)
        g.add_argument("spec")
        g.add_argument("lhs")
        if nargs == 2:
            g.add_argument("rhs")
        g.set_defaults(fn=cmd_group)
    g = gsub.add_parser("verify")
    g.add_argument("spec")
    g.add_argument("--trials", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(fn=cmd_group)

    p = sub.add_parser("axioms", help="Z-group axiom suite for M_s")
    p.add_argument("--levels", type=int, nargs="+", default=[0, 1, 2, 3])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_axioms)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ParseError, EvalError, DecomposeError, GroupError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
