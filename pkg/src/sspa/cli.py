"""
Command-line front end::

    sspa check  FILE [--mode strict|lenient]
    sspa lts    FILE NAME [--dot]
    sspa solve  FILE SYSTEM [solver flags]
    sspa verify FILE SYSTEM [solver flags]
    sspa bisim  FILE NAME1 NAME2 [--witness]

Exit codes: 0 success / agreement / bisimilar, 1 check failure, model not
solvable, or not bisimilar, 2 parse error or unknown name, 3 state budget
exceeded, 4 product form violated, 5 solver did not converge, 6 solver and
oracle disagree.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import List, Optional

from . import prodform
from .errors import BudgetExceeded, ParseError, SSPAError
from .semantics import (
    DEFAULT_BUDGET, active_labels, is_closed, is_well_formed, lts_dict, lts_dot, lts_text,
    passive_labels, resolve, strong_bisimilar, system_spec, unique_passive_labels,
    validate_cooperation,
)
from .syntax import desugar, parse_model

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_VIOLATED = 4
EXIT_NOT_CONVERGED = 5
EXIT_INCONSISTENT = 6


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats written to 17 significant digits; dict order is kept."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return format(obj, ".17g")
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):   # numpy scalars
        return dumps(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _default_budget() -> int:
    raw = os.environ.get("SSPA_BUDGET_STATES")
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return DEFAULT_BUDGET


def _labels(s) -> str:
    return "{" + ", ".join(sorted(s)) + "}"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=("strict", "lenient"), default="strict",
                        help="well-formedness mode (default: strict)")
    common.add_argument("--format", choices=("text", "json"), default="text", dest="fmt")
    common.add_argument("--budget-states", type=int, default=None,
                        help="state budget (default: $SSPA_BUDGET_STATES or 100000)")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--damping", type=float, default=0.5)
    solver.add_argument("--tol-conv", type=float, default=1e-10)
    solver.add_argument("--tol-check", type=float, default=1e-8)
    solver.add_argument("--max-iter", type=int, default=500)
    solver.add_argument("--init-kappa", type=float, default=1.0)

    parser = argparse.ArgumentParser(prog="sspa", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="label sets and well-formedness")
    p.add_argument("file")

    p = sub.add_parser("lts", parents=[common], help="dump the labelled transition system")
    p.add_argument("file")
    p.add_argument("name")
    p.add_argument("--dot", action="store_true", help="emit a graphviz description")

    p = sub.add_parser("solve", parents=[common, solver], help="product-form solution")
    p.add_argument("file")
    p.add_argument("system")

    p = sub.add_parser("verify", parents=[common, solver], help="solve and check against the joint chain")
    p.add_argument("file")
    p.add_argument("system")

    p = sub.add_parser("bisim", parents=[common], help="strong bisimilarity of two names")
    p.add_argument("file")
    p.add_argument("name1")
    p.add_argument("name2")
    p.add_argument("--witness", action="store_true", help="print the bisimilarity classes")
    return parser


def _load(path: str):
    with open(path, encoding="utf-8") as fh:
        return desugar(parse_model(fh.read()))


def _config(args) -> prodform.SolverConfig:
    return prodform.SolverConfig(
        init_kappa=args.init_kappa, damping=args.damping, conv_tol=args.tol_conv,
        check_tol=args.tol_check, max_iter=args.max_iter, mode=args.mode, budget=args.budget)


# -- commands -------------------------------------------------------------------

def cmd_check(model, args, out) -> int:
    ok = True
    procs = []
    for name in model.process_names():
        t = resolve(model, name)
        diag = is_well_formed(t, model, args.mode, args.budget)
        ok &= diag.ok
        procs.append({
            "name": name,
            "active": sorted(active_labels(t, model)),
            "passive": sorted(passive_labels(t, model)),
            "unique_passive": sorted(unique_passive_labels(t, model)),
            "closed": is_closed(t, model),
            "well_formed": diag.ok,
            "errors": diag.errors,
            "witness": diag.witness,
        })
    systems = []
    for name in model.systems:
        spec = system_spec(model, name)
        diag = validate_cooperation(spec, model, lenient=args.mode == "lenient")
        ok &= diag.ok
        systems.append({"name": name, "coop_set": sorted(spec.coop_set), "valid": diag.ok,
                        "errors": diag.errors, "warnings": diag.warnings})
    if args.fmt == "json":
        out.write(dumps({"schema": 1, "mode": args.mode, "ok": ok,
                         "processes": procs, "systems": systems}) + "\n")
    else:
        for p in procs:
            flag = "well-formed" if p["well_formed"] else "NOT well-formed"
            out.write(f"{p['name']}: A={_labels(p['active'])} P={_labels(p['passive'])} "
                      f"U={_labels(p['unique_passive'])} closed={'yes' if p['closed'] else 'no'} "
                      f"{flag}\n")
            for e in p["errors"]:
                out.write(f"  error: {e}\n")
        for s in systems:
            out.write(f"system {s['name']} coop {_labels(s['coop_set'])}: "
                      f"{'valid' if s['valid'] else 'INVALID'}\n")
            for e in s["errors"]:
                out.write(f"  error: {e}\n")
            for w in s["warnings"]:
                out.write(f"  warning: {w}\n")
        out.write(f"mode {args.mode}: {'ok' if ok else 'FAILED'}\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_lts(model, args, out) -> int:
    term = resolve(model, args.name)
    if args.dot:
        out.write(lts_dot(term, model, args.budget))
    elif args.fmt == "json":
        out.write(dumps({"schema": 1, **lts_dict(term, model, args.budget)}) + "\n")
    else:
        out.write(lts_text(term, model, args.budget))
    return EXIT_OK


def _status_code(status: str) -> int:
    return {prodform.SATISFIED: EXIT_OK, prodform.VIOLATED: EXIT_VIOLATED,
            prodform.NOT_CONVERGED: EXIT_NOT_CONVERGED}[status]


def _write_solution(sol, args, out, extra: Optional[dict] = None):
    if args.fmt == "json":
        data = prodform.solution_dict(sol)
        if extra:
            data.update(extra)
        out.write(dumps(data) + "\n")
        return
    out.write(f"status: {sol.status}\n")
    out.write(f"iterations: {sol.iterations}\n")
    for a in sorted(sol.kappas):
        out.write(f"kappa[{a}] = {sol.kappas[a]:.17g}\n")
    for r in sol.reports:
        rates = ", ".join(f"{x:.12g}" for x in r.rates)
        out.write(f"reversed {r.label} on {r.name}: [{rates}] spread={r.spread:.3g}\n")
    for c in sol.components:
        out.write(f"component {c.name} closed as {c.closed}:\n")
        for s, p in zip(c.space.names(), c.measure.values):
            out.write(f"  pi({s}) = {p:.17g}\n")
    for w in sol.warnings:
        out.write(f"warning: {w}\n")
    if sol.oracle is not None:
        o = sol.oracle
        gap = "n/a" if o.gap_abs is None else f"{o.gap_abs:.3e}"
        rel = "n/a" if o.gap_rel is None else f"{o.gap_rel:.3e}"
        out.write(f"oracle: {o.n_states} joint states, gap_abs={gap} gap_rel={rel} "
                  f"residual={o.product_residual:.3e}\n")
        out.write(f"oracle: reachable set equals product space: "
                  f"{'yes' if o.reachable_equals_product else 'no'} "
                  f"({o.n_reachable}/{o.n_states}); irreducible: {'yes' if o.irreducible else 'no'}\n")
    if extra:
        for k, v in extra.items():
            out.write(f"{k}: {v}\n")


def _solve(model, args):
    if args.system not in model.systems:
        raise KeyError(args.system)
    spec = system_spec(model, args.system)
    return spec, prodform.grcat_solve(spec, model, _config(args))


def cmd_solve(model, args, out) -> int:
    _, sol = _solve(model, args)
    _write_solution(sol, args, out)
    return _status_code(sol.status)


def cmd_verify(model, args, out) -> int:
    spec, sol = _solve(model, args)
    report = prodform.verify_against_joint(spec, sol, model)
    if sol.status == prodform.NOT_CONVERGED:
        code = EXIT_NOT_CONVERGED
        verdict = "solver did not converge"
    elif report.agrees(sol.status, args.tol_check):
        code = EXIT_OK
        verdict = "agree"
    else:
        code = EXIT_INCONSISTENT
        verdict = "DISAGREE (internal inconsistency)"
    _write_solution(sol, args, out, {"agreement": verdict})
    return code


def cmd_bisim(model, args, out) -> int:
    t1, t2 = resolve(model, args.name1), resolve(model, args.name2)
    verdict, blocks = strong_bisimilar(t1, t2, model, args.budget, witness=True)
    if args.fmt == "json":
        data = {"schema": 1, "bisimilar": verdict}
        if args.witness:
            data["partition"] = blocks
        out.write(dumps(data) + "\n")
    else:
        sym = "≅" if verdict else "≇"
        out.write(f"{args.name1} {sym} {args.name2}\n")
        if args.witness:
            for b in blocks:
                out.write("  {" + ", ".join(b) + "}\n")
    return EXIT_OK if verdict else EXIT_FAIL


COMMANDS = {"check": cmd_check, "lts": cmd_lts, "solve": cmd_solve, "verify": cmd_verify,
            "bisim": cmd_bisim}


def main(argv: Optional[List[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    args.budget = args.budget_states or _default_budget()
    try:
        model = _load(args.file)
    except OSError as exc:
        err.write(f"sspa: cannot read {args.file}: {exc.strerror}\n")
        return EXIT_USAGE
    except ParseError as exc:
        err.write(f"{args.file}:{exc}\n")
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](model, args, out)
    except KeyError as exc:
        err.write(f"sspa: unknown process or system {exc.args[0]!r}\n")
        return EXIT_USAGE
    except BudgetExceeded as exc:
        err.write(f"sspa: {exc}\n")
        return EXIT_BUDGET
    except SSPAError as exc:
        err.write(f"sspa: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
