"""The size-based termination criterion and its side conditions."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

from .annotated import ABase, AnnotationError, FunDecl
from .inference import (
    CallRecord,
    InferenceError,
    NotApplicativeLhs,
    RuleContext,
    VariableUsedTwiceInMeasuredArgs,
    ClosureInferencer,
    build_rule_context,
    lhs_sigma,
)
from .orders import MeasureCmp, OrderError, compare_tuples
from .problem import RewriteProblem
from .sizes import (
    LEQ,
    Cmp,
    NonMonotoneAnnotation,
    SVar,
    check_monotone,
    compare,
    contains_inf,
    show,
    smax,
    succ,
)
from .terms import Abs, Rule, SignatureError, Sym, Term, spine, split_arrow


class Status(str, Enum):
    TERMINATES = "TERMINATES"
    UNKNOWN = "UNKNOWN"
    REJECTED = "REJECTED"

    def __str__(self) -> str:
        return self.value


class NotStrictlyExtensive(Exception):
    pass


class PrecedenceFallbackFailed(Exception):
    pass


@dataclass
class RuleTrace:
    index: int
    rule: str
    gamma: dict[str, str] = field(default_factory=dict)
    a: tuple[str, ...] = ()
    rhs_type: str | None = None
    rhs_size: str | None = None
    bound: str | None = None
    comparison: str | None = None
    calls: list[dict] = field(default_factory=list)
    ok: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "rule": self.rule,
            "gamma": self.gamma,
            "a": list(self.a),
            "rhs_type": self.rhs_type,
            "rhs_size": self.rhs_size,
            "bound": self.bound,
            "comparison": self.comparison,
            "calls": self.calls,
            "ok": self.ok,
            "error": self.error,
        }


@dataclass
class SideCondition:
    rule: str
    symbol: str
    condition: str
    ok: bool
    detail: str

    def to_dict(self) -> dict:
        return dict(rule=self.rule, symbol=self.symbol, condition=self.condition,
                    ok=self.ok, detail=self.detail)


@dataclass
class NonConstructorReport:
    conditions: list[SideCondition] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.conditions)

    def failures(self) -> list[SideCondition]:
        return [c for c in self.conditions if not c.ok]

    def raise_first(self) -> None:
        for c in self.conditions:
            if not c.ok:
                exc = NotStrictlyExtensive if c.condition == "strictly-extensive" else PrecedenceFallbackFailed
                raise exc(f"{c.symbol} in {c.rule}: {c.detail}")


@dataclass
class Verdict:
    status: Status
    problem: str
    traces: list[RuleTrace] = field(default_factory=list)
    nonconstructor: NonConstructorReport | None = None
    monotonicity: list[str] = field(default_factory=list)
    reason: str | None = None
    seconds: float = 0.0

    @property
    def failure(self) -> RuleTrace | None:
        return next((t for t in self.traces if not t.ok), None)

    def to_dict(self) -> dict:
        return {
            "status": str(self.status),
            "problem": self.problem,
            "reason": self.reason,
            "rules": [t.to_dict() for t in self.traces],
            "nonconstructor": [c.to_dict() for c in self.nonconstructor.conditions]
            if self.nonconstructor else [],
            "monotonicity": self.monotonicity,
            "seconds": round(self.seconds, 6),
        }


def _call_dict(c: CallRecord) -> dict:
    return {
        "call": c.call,
        "callee": c.callee,
        "b": [show(x) for x in c.b],
        "a": [show(x) for x in c.a],
        "result": str(c.result),
    }


# ---------------------------------------------------------------------------


def check_monotonicity(problem: RewriteProblem) -> list[str]:
    """Check every interpretation and measure component is built from
    monotone size symbols; returns the trace lines."""
    lines = []
    for f, decl in problem.asig.defined.items():
        if not decl.is_infinite:
            check_monotone(decl.interp)
            lines.append(f"{f}^A = {show(decl.interp)}: monotone")
        else:
            lines.append(f"{f}^A = inf")
        m = problem.all_measures[f]
        for c in m.components:
            check_monotone(c)
        lines.append(f"zeta_{f} = {m}: monotone")
    for b in problem.sorts:
        cons = [c for c, t in problem.constructors.items() if split_arrow(t)[1].name == b]
        lines.append(f"sort {b}: {len(cons)} constructor(s), finitely many")
    lines.append(f"{len(problem.rules)} rule(s): finitely branching")
    return lines


def _defined_subterms(t: Term, defined) -> list[Term]:
    out = []
    head, args = spine(t)
    if isinstance(head, Sym) and head.name in defined:
        out.append(t)
    for a in args:
        out.extend(_defined_subterms(a, defined))
    if isinstance(head, Abs):
        out.extend(_defined_subterms(head.body, defined))
    return out


def _extensive_indices(decl: FunDecl, problem: RewriteProblem, reading: str) -> list[int]:
    """Measured positions of ``g`` used for the strict-extensiveness test.

    ``measured``: all measured positions.  ``recursive``: only those whose
    sort is equivalent to the result sort of ``g``.
    """
    if reading == "measured":
        return list(decl.measured_indices)
    arg_types, res = split_arrow(problem.signature.defined[decl.name])
    return [i for i in decl.measured_indices
            if problem.vsig.equivalent(arg_types[i - 1].name, res.name)]


def strictly_extensive(decl: FunDecl, indices: list[int]) -> Cmp:
    if not indices:
        return Cmp.INCOMPARABLE
    names = dict(decl.measured)
    return compare(succ(smax(*(SVar(names[i]) for i in indices))), decl.interp)


def check_nonconstructor(problem: RewriteProblem) -> NonConstructorReport:
    asig = problem.asig
    prec = problem.precedence
    report = NonConstructorReport()
    for rule in problem.rules:
        head, args = spine(rule.lhs)
        f = head.name
        fdecl = asig.defined[f]
        if not fdecl.is_infinite:
            continue
        rtext = str(rule)
        for arg in args:
            for sub in _defined_subterms(arg, asig.defined):
                g = spine(sub)[0].name
                gdecl = asig.defined[g]
                if not gdecl.is_infinite:
                    try:
                        check_monotone(gdecl.interp)
                    except NonMonotoneAnnotation as e:
                        report.conditions.append(SideCondition(rtext, g, "monotone", False, str(e)))
                        continue
                    idx = _extensive_indices(gdecl, problem, "measured")
                    alt = _extensive_indices(gdecl, problem, "recursive")
                    res = strictly_extensive(gdecl, idx)
                    lower = "s(max(" + ",".join(dict(gdecl.measured)[i] for i in idx) + "))"
                    detail = f"{lower} vs {show(gdecl.interp)}: {res}"
                    if alt != idx:
                        res_alt = strictly_extensive(gdecl, alt)
                        detail += f"; recursive-position reading {alt}: {res_alt}"
                    report.conditions.append(
                        SideCondition(rtext, g, "strictly-extensive", res in LEQ, detail))
                    continue
                if prec.lt(g, f):
                    report.conditions.append(
                        SideCondition(rtext, g, "precedence", True, f"{g} < {f}"))
                    continue
                if not prec.equiv(g, f):
                    report.conditions.append(SideCondition(
                        rtext, g, "precedence", False,
                        f"{g}^A = inf and {g} is neither below nor equivalent to {f}"))
                    continue
                res = _fallback_measure(problem, rule, sub)
                report.conditions.append(SideCondition(
                    rtext, g, "measure-fallback", res == MeasureCmp.LT,
                    f"{g} ~ {f}, measure comparison: {res}"))
    return report


def _fallback_measure(problem: RewriteProblem, rule: Rule, sub: Term) -> MeasureCmp:
    asig = problem.asig
    gamma: dict = {}
    counts: dict = {}
    head, args = spine(rule.lhs)
    f = head.name
    fdecl = asig.defined[f]
    arg_types, _ = split_arrow(problem.signature.defined[f])
    la = []
    for i, _ in fdecl.measured:
        la.append(lhs_sigma(args[i - 1], arg_types[i - 1].name, gamma, asig, counts))
    g = spine(sub)[0].name
    gdecl = asig.defined[g]
    gargs = spine(sub)[1]
    gtypes, _ = split_arrow(problem.signature.defined[g])
    mb = [lhs_sigma(gargs[i - 1], gtypes[i - 1].name, gamma, asig, counts)
          for i, _ in gdecl.measured]
    mf = problem.all_measures[f]
    mg = problem.all_measures[g]
    try:
        return compare_tuples(mg.apply(mb), mf.apply(la), mf.kind)
    except OrderError:
        return MeasureCmp.GE_OR_UNKNOWN


def check_rule(problem: RewriteProblem, index: int, rule: Rule) -> RuleTrace:
    trace = RuleTrace(index, str(rule))
    ctx = build_rule_context(rule, problem.asig)
    trace.gamma = {x: str(t) for x, t in sorted(ctx.gamma.items())}
    trace.a = tuple(show(x) for x in ctx.a)
    return _finish_rule(problem, ctx, trace)


def _finish_rule(problem: RewriteProblem, ctx: RuleContext, trace: RuleTrace) -> RuleTrace:
    decl = ctx.decl
    bound = decl.interp_at(ctx.a)
    trace.bound = show(bound)
    if not decl.is_infinite and any(contains_inf(x) for x in ctx.a):
        trace.error = "an lhs argument has infinite size but the symbol's result size is finite"
        return trace
    calls: list[CallRecord] = []
    try:
        inf = ClosureInferencer(problem.asig, ctx=ctx, prec=problem.precedence,
                                measures=problem.all_measures)
        try:
            ty = inf.infer(ctx.gamma, ctx.rule.rhs)
        finally:
            calls = inf.calls
    except InferenceError as e:
        trace.calls = [_call_dict(c) for c in calls]
        trace.error = f"{type(e).__name__}: {e}"
        return trace
    trace.calls = [_call_dict(c) for c in calls]
    trace.rhs_type = str(ty)
    if not isinstance(ty, ABase):
        trace.error = f"rhs has functional type {ty}"
        return trace
    trace.rhs_size = show(ty.size)
    cmp = compare(ty.size, bound)
    trace.comparison = str(cmp)
    trace.ok = cmp in LEQ
    if not trace.ok:
        trace.error = f"rhs size {show(ty.size)} is not provably <= {show(bound)}"
    return trace


def check_system(problem: RewriteProblem) -> Verdict:
    start = time.perf_counter()
    verdict = Verdict(Status.UNKNOWN, problem.name)
    try:
        problem.vsig
        problem.asig
        problem.precedence
        verdict.monotonicity = check_monotonicity(problem)
    except (SignatureError, AnnotationError, OrderError, NonMonotoneAnnotation) as e:
        verdict.status = Status.REJECTED
        verdict.reason = f"{type(e).__name__}: {e}"
        verdict.seconds = time.perf_counter() - start
        return verdict
    if not problem.is_constructor_system():
        verdict.nonconstructor = check_nonconstructor(problem)
    for i, rule in enumerate(problem.rules):
        try:
            trace = check_rule(problem, i, rule)
        except (NotApplicativeLhs, VariableUsedTwiceInMeasuredArgs) as e:
            verdict.status = Status.REJECTED
            verdict.reason = f"{type(e).__name__}: {e}"
            verdict.traces.append(RuleTrace(i, str(rule), error=verdict.reason))
            verdict.seconds = time.perf_counter() - start
            return verdict
        verdict.traces.append(trace)
    nc_ok = verdict.nonconstructor is None or verdict.nonconstructor.ok
    if all(t.ok for t in verdict.traces) and nc_ok:
        verdict.status = Status.TERMINATES
    else:
        verdict.status = Status.UNKNOWN
        if not nc_ok:
            c = verdict.nonconstructor.failures()[0]
            verdict.reason = f"side condition {c.condition} fails for {c.symbol} in {c.rule}: {c.detail}"
        else:
            t = verdict.failure
            verdict.reason = f"rule {t.rule}: {t.error}"
    verdict.seconds = time.perf_counter() - start
    return verdict
