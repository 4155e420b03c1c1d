"""Semantic labelling with symbolic sizes.

Every defined-symbol occurrence ``g m...`` is labelled with
``zeta_g(sigma(m...))`` where ``sigma`` is the most general size of the
measured arguments.  Labels are tuples of normalized size expressions in
the symbolic system and tuples of naturals in ground instances.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .annotated import ABase, AType, infty
from .checker import check_nonconstructor
from .inference import Inferencer, InferenceError, build_rule_context
from .orders import MeasureCmp, compare_tuples, ground_lt
from .problem import RewriteProblem
from .sizes import LEQ, ZERO, SizeNF, SVar, compare, normalize, succ
from .terms import (
    Abs,
    App,
    Rule,
    Sym,
    Term,
    Var,
    abstract,
    app,
    erase_labels,
    free_vars,
    open_abs,
    show_term,
    spine,
    split_arrow,
)


class LabellingError(Exception):
    pass


class QuasiModelViolation(LabellingError):
    def __init__(self, rule: str, sigma_l: str, sigma_r: str):
        self.rule, self.sigma_l, self.sigma_r = rule, sigma_l, sigma_r
        super().__init__(f"rule {rule}: size of rhs {sigma_r} is not provably <= size of lhs {sigma_l}")


class NotComputable(LabellingError):
    pass


@dataclass(frozen=True)
class LabelledRule:
    lhs: Term
    rhs: Term
    source: int
    valuation: tuple[tuple[str, int], ...] | None = None

    def __str__(self) -> str:
        return f"{show_labelled(self.lhs)} -> {show_labelled(self.rhs)}"


def show_label(label: tuple) -> str:
    return ",".join(str(x) for x in label)


def show_labelled(t: Term) -> str:
    """Terms with labels rendered as ``f_{label}``."""
    return show_term(t)


# ---------------------------------------------------------------------------
# symbolic sizes of rule sides


def labelling_context(problem: RewriteProblem, rule: Rule) -> dict[str, AType]:
    """Every base-type rule variable ``x`` gets ``B^x``; higher-order ones
    keep their rule-context type."""
    ctx = build_rule_context(rule, problem.asig)
    gamma = dict(ctx.gamma)
    for x, ty in free_vars(rule.lhs).items():
        if isinstance(gamma[x], ABase):
            gamma[x] = ABase(gamma[x].sort, SVar(x))
    return gamma


def sigma(problem: RewriteProblem, gamma: Mapping[str, AType], t: Term):
    """Most general size of a base-type term."""
    ty = Inferencer(problem.asig, prefix="%l").infer(gamma, t)
    if not isinstance(ty, ABase):
        raise LabellingError(f"{t} does not have a base type")
    return ty.size


def label_term(problem: RewriteProblem, gamma: Mapping[str, AType], t: Term) -> Term:
    """Label every defined-symbol occurrence with its symbolic measure."""
    if isinstance(t, Abs):
        x, body = open_abs(t, set(gamma))
        inner = dict(gamma)
        inner[x.name] = infty(t.type)
        return Abs(t.type, abstract(label_term(problem, inner, body), x), t.hint)
    head, args = spine(t)
    new_args = [label_term(problem, gamma, a) for a in args]
    if isinstance(head, Sym) and head.name in problem.asig.defined:
        decl = problem.asig.defined[head.name]
        if len(args) >= max(decl.measured_indices, default=0):
            sizes = tuple(sigma(problem, gamma, args[i - 1]) for i in decl.measured_indices)
            zeta = problem.all_measures[head.name].apply(sizes)
            head = Sym(head.name, tuple(normalize(z) for z in zeta))
        return app(head, *new_args)
    if not isinstance(head, (Sym, Var)):
        head = label_term(problem, gamma, head)
    return app(head, *new_args)


# ---------------------------------------------------------------------------
# quasi-model


@dataclass
class QuasiModelEntry:
    rule: str
    sigma_l: str
    sigma_r: str
    comparison: str
    ok: bool
    note: str = ""

    def to_dict(self) -> dict:
        return dict(rule=self.rule, sigma_l=self.sigma_l, sigma_r=self.sigma_r,
                    comparison=self.comparison, ok=self.ok, note=self.note)


@dataclass
class QuasiModelReport:
    entries: list[QuasiModelEntry] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def raise_first(self) -> None:
        for e in self.entries:
            if not e.ok:
                raise QuasiModelViolation(e.rule, e.sigma_l, e.sigma_r)


def check_quasi_model(problem: RewriteProblem) -> QuasiModelReport:
    report = QuasiModelReport()
    side = check_nonconstructor(problem)
    for rule in problem.rules:
        f = spine(rule.lhs)[0].name
        decl = problem.asig.defined[f]
        gamma = labelling_context(problem, rule)
        if decl.is_infinite:
            conds = [c for c in side.conditions if c.rule == str(rule)]
            ok = all(c.ok for c in conds)
            note = "lhs value is the max over all rule instances"
            if conds:
                note += "; side conditions " + ("hold" if ok else "fail")
            report.entries.append(QuasiModelEntry(str(rule), "inf", "-", "-", ok, note))
            continue
        sl = sigma(problem, gamma, rule.lhs)
        try:
            sr = sigma(problem, gamma, rule.rhs)
        except InferenceError as e:
            report.entries.append(QuasiModelEntry(str(rule), str(normalize(sl)), "?", "-", False, str(e)))
            continue
        cmp = compare(sr, sl)
        report.entries.append(QuasiModelEntry(
            str(rule), str(normalize(sl)), str(normalize(sr)), str(cmp), cmp in LEQ))
    return report


def label_system(problem: RewriteProblem) -> list[LabelledRule]:
    check_quasi_model(problem).raise_first()
    out = []
    for i, rule in enumerate(problem.rules):
        gamma = labelling_context(problem, rule)
        out.append(LabelledRule(label_term(problem, gamma, rule.lhs),
                                label_term(problem, gamma, rule.rhs), i))
    return out


# ---------------------------------------------------------------------------
# precedence termination


@dataclass
class PTWitness:
    rule: str
    head: str
    occurrence: str
    result: str

    def to_dict(self) -> dict:
        return dict(rule=self.rule, head=self.head, occurrence=self.occurrence, result=self.result)


def _occurrences(t: Term) -> list[Sym]:
    if isinstance(t, Sym):
        return [t]
    if isinstance(t, App):
        return _occurrences(t.fun) + _occurrences(t.arg)
    if isinstance(t, Abs):
        return _occurrences(t.body)
    return []


def _sym_str(s: Sym) -> str:
    return s.name if s.label is None else f"{s.name}_{{{show_label(s.label)}}}"


def labelled_lt(problem: RewriteProblem, g: Sym, f: Sym) -> tuple[bool, str]:
    """``g_b < f_a`` in the labelled precedence."""
    prec = problem.precedence
    if prec.lt(g.name, f.name):
        return True, "precedence"
    if not prec.equiv(g.name, f.name) or g.name in problem.constructors:
        return False, "incomparable"
    if g.label is None or f.label is None:
        return False, "unlabelled"
    kind = problem.all_measures[f.name].kind
    if all(isinstance(x, SizeNF) for x in g.label + f.label):
        res = compare_tuples([x.to_expr() for x in g.label], [x.to_expr() for x in f.label], kind)
        detail = ",".join(str(compare(x.to_expr(), y.to_expr())) for x, y in zip(g.label, f.label))
        return res == MeasureCmp.LT, detail
    return ground_lt(g.label, f.label, kind), "ground"


def check_precedence_termination(problem: RewriteProblem, rules: Sequence[LabelledRule]
                                 ) -> tuple[bool, PTWitness | None]:
    for r in rules:
        head = spine(r.lhs)[0]
        for occ in _occurrences(r.rhs):
            ok, detail = labelled_lt(problem, occ, head)
            if not ok:
                return False, PTWitness(str(r), _sym_str(head), _sym_str(occ), detail)
    return True, None


# ---------------------------------------------------------------------------
# ground instances


def _label_vars(t: Term) -> set[str]:
    out: set[str] = set()
    for s in _occurrences(t):
        if s.label is not None:
            for x in s.label:
                if isinstance(x, SizeNF):
                    out |= x.variables()
    return out


def _ground(t: Term, mu: Mapping[str, int]) -> Term:
    if isinstance(t, Sym):
        if t.label is None:
            return t
        return Sym(t.name, tuple(_num(x.evaluate(mu)) for x in t.label))
    if isinstance(t, App):
        return App(_ground(t.fun, mu), _ground(t.arg, mu))
    if isinstance(t, Abs):
        return Abs(t.type, _ground(t.body, mu), t.hint)
    return t


def _num(v: float):
    return v if v == math.inf else int(v)


def _max_label(t: Term) -> float:
    vals = [x for s in _occurrences(t) if s.label is not None for x in s.label]
    return max(vals, default=0)


def instantiate_labels(rules: Sequence[LabelledRule], k: int,
                       problem: RewriteProblem | None = None,
                       with_decr: bool = False) -> list[LabelledRule]:
    """Ground instances whose label variables range over ``0..k`` and whose
    labels all stay within ``0..k``; optionally followed by the label
    decrease rules between the labels that occur."""
    out: list[LabelledRule] = []
    seen = set()
    for r in rules:
        names = sorted(_label_vars(r.lhs) | _label_vars(r.rhs))
        for values in itertools.product(range(k + 1), repeat=len(names)):
            mu = dict(zip(names, values))
            lhs, rhs = _ground(r.lhs, mu), _ground(r.rhs, mu)
            if max(_max_label(lhs), _max_label(rhs)) > k:
                continue
            if (lhs, rhs) in seen:
                continue
            seen.add((lhs, rhs))
            out.append(LabelledRule(lhs, rhs, r.source, tuple(sorted(mu.items()))))
    if with_decr:
        if problem is None:
            raise ValueError("decrease rules need the problem")
        out.extend(decr_rules(out, problem))
    return out


def decr_rules(rules: Sequence[LabelledRule], problem: RewriteProblem) -> list[LabelledRule]:
    labels: dict[str, set[tuple]] = {}
    for r in rules:
        for s in _occurrences(r.lhs) + _occurrences(r.rhs):
            if s.label is not None:
                labels.setdefault(s.name, set()).add(s.label)
    out = []
    for f in sorted(labels):
        kind = problem.all_measures[f].kind
        args, _ = split_arrow(problem.signature.defined[f])
        xs = [Var(f"x{i}", t) for i, t in enumerate(args, start=1)]
        for a in sorted(labels[f]):
            for b in sorted(labels[f]):
                if ground_lt(b, a, kind):
                    out.append(LabelledRule(app(Sym(f, a), *xs), app(Sym(f, b), *xs), -1))
    return out


# ---------------------------------------------------------------------------
# ground model values and direct labelling


def model_value(problem: RewriteProblem, t: Term, mu: Mapping[str, int] | None = None) -> int:
    """Value of a first-order term in the size model over the naturals."""
    mu = mu or {}
    if isinstance(t, Var):
        if t.name not in mu:
            raise NotComputable(f"no value for variable {t.name}")
        return mu[t.name]
    head, args = spine(t)
    if not isinstance(head, Sym):
        raise NotComputable(f"{t} is not first-order")
    if head.name in problem.constructors:
        ind = problem.vsig.ind[head.name]
        if not ind:
            return 0
        return 1 + max(model_value(problem, args[i - 1], mu) for i in ind)
    decl = problem.asig.defined[head.name]
    if decl.is_infinite:
        raise NotComputable(f"{head.name} has no finite size interpretation")
    vals = {alpha: model_value(problem, args[i - 1], mu) for i, alpha in decl.measured}
    v = normalize(decl.interp).evaluate(vals)
    return int(v)


def label_ground(problem: RewriteProblem, t: Term, mu: Mapping[str, int] | None = None) -> Term:
    """Label a first-order term by the model values of its arguments."""
    if isinstance(t, Var):
        return t
    head, args = spine(t)
    new_args = [label_ground(problem, a, mu) for a in args]
    if isinstance(head, Sym) and head.name in problem.asig.defined:
        decl = problem.asig.defined[head.name]
        vals = tuple(model_value(problem, args[i - 1], mu) for i in decl.measured_indices)
        spec = problem.all_measures[head.name]
        label = tuple(int(normalize(z).evaluate({})) for z in spec.apply([_const(v) for v in vals]))
        head = Sym(head.name, label)
    return app(head, *new_args)


def _const(v: int):
    return succ(ZERO, v)


def unlabel(rules: Sequence[LabelledRule]) -> list[tuple[Term, Term]]:
    return [(erase_labels(r.lhs), erase_labels(r.rhs)) for r in rules]


# ---------------------------------------------------------------------------
# export


def _tpdb_name(s: Sym) -> str:
    if s.label is None:
        return s.name
    return s.name + "".join(f"_{x}" for x in s.label)


def _tpdb_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    head, args = spine(t)
    if not isinstance(head, Sym):
        raise LabellingError("only first-order rules can be exported")
    if not args:
        return _tpdb_name(head)
    return f"{_tpdb_name(head)}(" + ",".join(_tpdb_term(a) for a in args) + ")"


def export_tpdb(rules: Sequence[LabelledRule]) -> str:
    names = sorted({x for r in rules for x in free_vars(r.lhs)})
    lines = [f"(VAR {' '.join(names)})", "(RULES"]
    for r in rules:
        lines.append(f"  {_tpdb_term(r.lhs)} -> {_tpdb_term(r.rhs)}")
    lines.append(")")
    return "\n".join(lines) + "\n"


def term_to_json(t: Term):
    if isinstance(t, Var):
        return {"var": t.name}
    if isinstance(t, Abs):
        x, body = open_abs(t)
        return {"lam": x.name, "type": str(t.type), "body": term_to_json(body)}
    head, args = spine(t)
    if isinstance(head, Sym):
        node = {"sym": head.name}
        if head.label is not None:
            node["label"] = [str(x) for x in head.label]
        node["args"] = [term_to_json(a) for a in args]
        return node
    return {"app": term_to_json(head), "args": [term_to_json(a) for a in args]}


def export_json(rules: Sequence[LabelledRule]) -> list[dict]:
    return [
        {"source": r.source, "text": str(r), "lhs": term_to_json(r.lhs), "rhs": term_to_json(r.rhs)}
        for r in rules
    ]

