"""Command line front end: ``sizelab check|label|idts|oracle FILE``.

Exit codes: 0 when termination is proven (or the command succeeded),
1 when the answer is UNKNOWN or a check failed, 2 on rejected input.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import idts
from .checker import Status, check_nonconstructor, check_system
from .labelling import (
    LabellingError,
    check_precedence_termination,
    check_quasi_model,
    export_json,
    export_tpdb,
    instantiate_labels,
    label_system,
)
from .oracles import fuzz
from .problem import ProblemError, RewriteProblem, load_problem
from .report import Report, fuzz_csv, plot_fuzz, verdict_lines
from .sizes import SizeError
from .terms import TermError

EXIT_OK, EXIT_UNKNOWN, EXIT_ERROR = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trace", action="store_true", help="print per-rule derivations")
    common.add_argument("--format", choices=("text", "json"), default="text")

    p = argparse.ArgumentParser(prog="sizelab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="size-based termination check")
    c.add_argument("file")

    lb = sub.add_parser("label", parents=[common], help="labelled system and precedence termination")
    lb.add_argument("file")
    lb.add_argument("--ground", type=int, metavar="K", help="ground instances with all labels in 0..K")
    lb.add_argument("--decr", action="store_true", help="add label decrease rules (with --ground)")
    lb.add_argument("--export", choices=("tpdb", "json"))

    i = sub.add_parser("idts", parents=[common], help="translation to a structural IDTS")
    i.add_argument("file")

    o = sub.add_parser("oracle", parents=[common], help="random rewriting with model sizes")
    o.add_argument("file")
    o.add_argument("--fuzz", type=int, default=100, metavar="N")
    o.add_argument("--depth", type=int, default=4, metavar="D")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--steps", type=int, default=200, help="maximum steps per run")
    o.add_argument("--csv", metavar="PATH", help="write per-step rows")
    o.add_argument("--plot", metavar="PATH", help="write a figure of the size changes")
    return p


def run(argv: list[str] | None = None) -> tuple[int, Report]:
    return execute(build_parser().parse_args(argv))


def execute(args: argparse.Namespace) -> tuple[int, Report]:
    start = time.perf_counter()
    try:
        problem = load_problem(args.file)
    except (OSError, ProblemError, TermError, SizeError) as e:
        rep = Report(args.command, str(args.file), "ERROR", EXIT_ERROR,
                     {"error": f"{type(e).__name__}: {e}"}, [f"error: {type(e).__name__}: {e}"])
        return EXIT_ERROR, rep
    handler = {"check": _check, "label": _label, "idts": _idts, "oracle": _oracle}[args.command]
    rep = handler(problem, args)
    rep.seconds = round(time.perf_counter() - start, 6)
    return rep.exit_code, rep


def _check(problem: RewriteProblem, args) -> Report:
    v = check_system(problem)
    code = {Status.TERMINATES: EXIT_OK, Status.UNKNOWN: EXIT_UNKNOWN,
            Status.REJECTED: EXIT_ERROR}[v.status]
    return Report("check", problem.name, str(v.status), code, v.to_dict(), verdict_lines(v, args.trace))


def _label(problem: RewriteProblem, args) -> Report:
    v = check_system(problem)
    if v.status == Status.REJECTED:
        return Report("label", problem.name, "REJECTED", EXIT_ERROR, v.to_dict(), verdict_lines(v, True))
    data: dict = {}
    lines: list[str] = []
    if not problem.is_constructor_system():
        nc = check_nonconstructor(problem)
        data["nonconstructor"] = [c.to_dict() for c in nc.conditions]
        if not nc.ok:
            c = nc.failures()[0]
            lines.append(f"side condition {c.condition} fails for {c.symbol}: {c.detail}")
            return Report("label", problem.name, "SIDE_CONDITION_FAILED", EXIT_UNKNOWN, data, lines)
    qm = check_quasi_model(problem)
    data["quasi_model"] = [e.to_dict() for e in qm.entries]
    if not qm.ok:
        try:
            qm.raise_first()
        except LabellingError as e:
            lines.append(f"{type(e).__name__}: {e}")
        return Report("label", problem.name, "QuasiModelViolation", EXIT_UNKNOWN, data, lines)
    rules = label_system(problem)
    ok, witness = check_precedence_termination(problem, rules)
    data["precedence_termination"] = ok
    if witness is not None:
        data["witness"] = witness.to_dict()
    shown = rules
    if args.ground is not None:
        shown = instantiate_labels(rules, args.ground, problem, with_decr=args.decr)
    data["rules"] = export_json(shown)
    if args.export == "tpdb":
        lines.append(export_tpdb(shown).rstrip("\n"))
    elif args.export == "json":
        lines.append(json.dumps(export_json(shown), indent=2))
    else:
        lines.extend(str(r) for r in shown)
        lines.append(f"precedence termination: {'yes' if ok else 'no'}")
        if witness is not None:
            lines.append(f"  witness: {witness.to_dict()}")
    status = "PRECEDENCE_TERMINATING" if ok else "NOT_PRECEDENCE_TERMINATING"
    return Report("label", problem.name, status, EXIT_OK if ok else EXIT_UNKNOWN, data, lines)


def _idts(problem: RewriteProblem, args) -> Report:
    rules, beta = idts.translate_system(problem.rules, problem.signature)
    structural = all(idts.is_structural(x, problem.signature) for r in rules for x in (r.lhs, r.rhs))
    data = {"rules": idts.rules_to_json(rules), "beta": idts.rules_to_json(beta),
            "erased_beta": idts.rules_to_json([idts.erase_rule(b) for b in beta]),
            "structural": structural}
    lines = [f"{r.name}: {r}" for r in rules]
    lines += [f"{b.name}: {b}" for b in beta]
    if args.trace:
        lines += [f"|{b.name}|: {idts.erase_rule(b)}" for b in beta]
    code = EXIT_OK if structural else EXIT_UNKNOWN
    return Report("idts", problem.name, "STRUCTURAL" if structural else "NOT_STRUCTURAL", code, data, lines)


def _oracle(problem: RewriteProblem, args) -> Report:
    res = fuzz(problem, args.fuzz, args.depth, args.seed, args.steps)
    inc = res.increases
    data = {"runs": res.runs, "depth": res.depth, "seed": res.seed, "steps": len(res.rows),
            "normal_forms": res.normal_forms, "unsized_steps": res.skipped,
            "increases": [vars(r) for r in inc]}
    lines = [f"runs {res.runs}, steps {len(res.rows)}, normal forms {res.normal_forms}, "
             f"steps without finite size {res.skipped}, size increases {len(inc)}"]
    for r in inc[:10]:
        lines.append(f"  increase in run {r.run} step {r.step} by rule {r.rule}: "
                     f"{r.size_before} -> {r.size_after}")
    if args.csv:
        Path(args.csv).write_text(fuzz_csv(res))
        data["csv"] = args.csv
        lines.append(f"rows written to {args.csv}")
    if args.plot:
        plot_fuzz(res, args.plot, title=f"{problem.name}: {res.runs} runs, depth {res.depth}")
        data["plot"] = args.plot
        lines.append(f"figure written to {args.plot}")
    status = "SIZE_INCREASE" if inc else "NO_SIZE_INCREASE"
    return Report("oracle", problem.name, status, EXIT_UNKNOWN if inc else EXIT_OK, data, lines)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    code, rep = execute(args)
    print(rep.render(args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
