"""Annotated type inference by unification, rule contexts, and the
restricted inference used for rule right-hand sides."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

from .annotated import (
    ABase,
    AArrow,
    AType,
    AnnotatedSignature,
    FunDecl,
    annot,
    apply_atype_subst,
    atype_vars,
    constructor_size,
    infty,
    leaves,
    split_aarrow,
)
from .orders import MeasureCmp, MeasureSpec, Precedence, measure_compare
from .sizes import (
    INF,
    LEQ,
    SizeExpr,
    SInf,
    SLin,
    SMax,
    SSucc,
    SVar,
    SZero,
    SFun,
    apply_size_subst,
    compare,
    contains_inf,
    size_vars,
)
from .terms import (
    Abs,
    App,
    Bound,
    Rule,
    Sym,
    Term,
    Var,
    open_abs,
    show_term,
    spine,
    split_arrow,
)


class InferenceError(Exception):
    pass


class UnificationError(InferenceError):
    pass


class Clash(UnificationError):
    pass


class OccursCheck(UnificationError):
    pass


class FrozenViolation(UnificationError):
    pass


class UnboundVariable(InferenceError):
    pass


class NotApplicativeLhs(InferenceError):
    pass


class VariableUsedTwiceInMeasuredArgs(InferenceError):
    pass


class RecursiveCallNotDecreasing(InferenceError):
    def __init__(self, call: str, b: tuple, a: tuple):
        self.call, self.b, self.a = call, b, a
        super().__init__(
            f"recursive call {call}: measure of ({', '.join(map(str, b))}) is not "
            f"provably below that of ({', '.join(map(str, a))})"
        )


class SymbolAbovePrecedence(InferenceError):
    pass


# ---------------------------------------------------------------------------
# syntactic unification of size annotations


def _walk(e: SizeExpr, phi: Mapping[str, SizeExpr]) -> SizeExpr:
    while isinstance(e, SVar) and e.name in phi:
        e = phi[e.name]
    return e


def _head(e: SizeExpr):
    if isinstance(e, SSucc):
        return ("s",), (e.arg,)
    if isinstance(e, SMax):
        return ("max",), (e.left, e.right)
    if isinstance(e, SLin):
        return ("lin", tuple(c for c, _ in e.terms), e.const), tuple(t for _, t in e.terms)
    if isinstance(e, SFun):
        return ("fun", e.name), e.args
    if isinstance(e, SZero):
        return ("0",), ()
    if isinstance(e, SInf):
        return ("inf",), ()
    raise TypeError(e)


def _occurs(name: str, e: SizeExpr, phi) -> bool:
    e = _walk(e, phi)
    if isinstance(e, SVar):
        return e.name == name
    return any(_occurs(name, c, phi) for c in _head(e)[1])


def unify_sizes(a: SizeExpr, b: SizeExpr, frozen: frozenset[str] | set[str],
                phi: dict[str, SizeExpr]) -> None:
    """Extend ``phi`` (triangular form) with an mgu of ``a`` and ``b``."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = _walk(x, phi), _walk(y, phi)
        if x == y:
            continue
        if isinstance(x, SVar) and x.name not in frozen:
            _bind(x.name, y, phi)
        elif isinstance(y, SVar) and y.name not in frozen:
            _bind(y.name, x, phi)
        elif isinstance(x, SVar) or isinstance(y, SVar):
            v = x if isinstance(x, SVar) else y
            raise FrozenViolation(f"cannot instantiate constant size variable {v.name} "
                                  f"to unify {x} with {y}")
        else:
            hx, ax = _head(x)
            hy, ay = _head(y)
            if hx != hy:
                raise Clash(f"cannot unify {x} with {y}")
            stack.extend(zip(ax, ay))


def _bind(name: str, e: SizeExpr, phi: dict) -> None:
    if _occurs(name, e, phi):
        raise OccursCheck(f"{name} occurs in {resolve(e, phi)}")
    phi[name] = e


def resolve(e: SizeExpr, phi: Mapping[str, SizeExpr]) -> SizeExpr:
    """Apply a triangular substitution fully."""
    e = _walk(e, phi)
    if isinstance(e, SVar) or not phi:
        return e
    out = apply_size_subst(e, {v: resolve(SVar(v), phi) for v in size_vars(e) if v in phi})
    return INF if contains_inf(out) else out


def idempotent(phi: Mapping[str, SizeExpr]) -> dict[str, SizeExpr]:
    return {v: resolve(SVar(v), phi) for v in phi}


def unify(t: AType, u: AType, frozen: frozenset[str] | set[str] = frozenset()) -> dict[str, SizeExpr]:
    """Most general unifier of two annotated types with the same erasure."""
    phi: dict[str, SizeExpr] = {}
    _unify_types(t, u, frozenset(frozen), phi)
    return idempotent(phi)


def _unify_types(t: AType, u: AType, frozen, phi) -> None:
    if isinstance(t, ABase) and isinstance(u, ABase):
        if t.sort != u.sort:
            raise Clash(f"sort {t.sort} vs {u.sort}")
        unify_sizes(t.size, u.size, frozen, phi)
    elif isinstance(t, AArrow) and isinstance(u, AArrow):
        _unify_types(t.dom, u.dom, frozen, phi)
        _unify_types(t.cod, u.cod, frozen, phi)
    else:
        raise Clash(f"type shapes differ: {t} vs {u}")


def resolve_type(t: AType, phi: Mapping[str, SizeExpr]) -> AType:
    if isinstance(t, ABase):
        return ABase(t.sort, resolve(t.size, phi))
    return AArrow(resolve_type(t.dom, phi), resolve_type(t.cod, phi))


# ---------------------------------------------------------------------------
# inference


@dataclass
class CallRecord:
    call: str
    callee: str
    b: tuple[SizeExpr, ...]
    a: tuple[SizeExpr, ...]
    result: MeasureCmp


@dataclass
class Inferencer:
    """One inference run: owns the fresh-name counter.

    Application follows the unification rule; when plain unification of an
    argument leaf fails, the argument is still accepted if its size is
    provably below the expected one (covariant leaves) or above it
    (contravariant leaves).  Without this, a variable of size ``x`` could
    never be passed where the symbol expects an unannotated (infinite)
    parameter.
    """

    asig: AnnotatedSignature
    prefix: str = "%"
    counter: itertools.count = field(default_factory=itertools.count)

    def fresh(self) -> str:
        return f"{self.prefix}{next(self.counter)}"

    def instantiate(self, name: str) -> AType:
        t = self.asig.type_of(name)
        ren = {v: SVar(self.fresh()) for v in sorted(atype_vars(t))}
        return apply_atype_subst(t, ren)

    def infer(self, gamma: Mapping[str, AType], t: Term) -> AType:
        frozen = frozenset(v for ty in gamma.values() for v in atype_vars(ty))
        return self._infer(dict(gamma), t, frozen)

    # hook for the restricted variant
    def _symbol_app(self, gamma, head: Sym, args: list[Term], frozen) -> AType:
        ty = self.instantiate(head.name)
        return self._apply(gamma, ty, args, frozen)

    def _infer(self, gamma: dict, t: Term, frozen) -> AType:
        if isinstance(t, Var):
            if t.name not in gamma:
                raise UnboundVariable(t.name)
            return gamma[t.name]
        if isinstance(t, Bound):
            raise UnboundVariable(f"#{t.index}")
        if isinstance(t, Abs):
            x, body = open_abs(t, set(gamma))
            inner = dict(gamma)
            inner[x.name] = infty(t.type)
            return AArrow(infty(t.type), self._infer(inner, body, frozen))
        head, args = spine(t)
        if isinstance(head, Sym):
            return self._symbol_app(gamma, head, args, frozen)
        ty = self._infer(gamma, head, frozen)
        return self._apply(gamma, ty, args, frozen)

    def _apply(self, gamma, ty: AType, args: list[Term], frozen) -> AType:
        for arg in args:
            if not isinstance(ty, AArrow):
                raise InferenceError(f"{ty} is not a function type")
            actual = self._infer(gamma, arg, frozen)
            ty = self.fit(actual, ty, frozen)
        return ty

    def fit(self, actual: AType, fun: AArrow, frozen) -> AType:
        """Match ``actual`` against the domain of ``fun``; return the
        instantiated codomain."""
        ren = {v: SVar(self.fresh()) for v in sorted(atype_vars(actual) - frozen)}
        actual = apply_atype_subst(actual, ren)
        phi: dict[str, SizeExpr] = {}
        exp_leaves = list(leaves(fun.dom))
        act_leaves = list(leaves(actual))
        if len(exp_leaves) != len(act_leaves):
            raise Clash(f"type shapes differ: {fun.dom} vs {actual}")
        for (_, pol, e), (_, _, a) in zip(exp_leaves, act_leaves):
            if e.sort != a.sort:
                raise Clash(f"sort {e.sort} vs {a.sort}")
            trial = dict(phi)
            try:
                unify_sizes(e.size, a.size, frozen, trial)
                phi = trial
                continue
            except UnificationError as err:
                failure = err
            es, as_ = resolve(e.size, phi), resolve(a.size, phi)
            lo, hi = (as_, es) if pol > 0 else (es, as_)
            if compare(lo, hi) not in LEQ:
                raise failure
        return resolve_type(fun.cod, phi)


def infer(gamma: Mapping[str, AType], t: Term, asig: AnnotatedSignature) -> AType:
    return Inferencer(asig).infer(gamma, t)


# ---------------------------------------------------------------------------
# rule contexts


@dataclass
class RuleContext:
    f: str
    rule: Rule
    decl: FunDecl
    gamma: dict[str, AType]
    a: tuple[SizeExpr, ...]

    @property
    def frozen(self) -> frozenset[str]:
        return frozenset(v for t in self.gamma.values() for v in atype_vars(t))


def lhs_sigma(t: Term, sort: str, gamma: dict, asig: AnnotatedSignature,
              counts: dict[str, int]) -> SizeExpr:
    """Symbolic size of an lhs argument of sort ``sort``; fills ``gamma``."""
    vsig = asig.vsig
    if isinstance(t, Var):
        counts[t.name] = counts.get(t.name, 0) + 1
        gamma[t.name] = annot(sort, SVar(t.name), t.type, vsig)
        return SVar(t.name)
    head, args = spine(t)
    if not isinstance(head, Sym):
        raise NotApplicativeLhs(f"{show_term(t)} is not headed by a symbol")
    name = head.name
    if name in asig.constructors:
        arg_types, _ = split_arrow(vsig.signature.constructors[name])
        if len(args) != len(arg_types):
            raise NotApplicativeLhs(f"constructor {name} is not fully applied in the lhs")
        sizes = [lhs_sigma(u, sort, gamma, asig, counts) for u in args]
        return constructor_size(sizes, vsig.ind[name])
    decl = asig.defined[name]
    if len(args) != decl.arity:
        raise NotApplicativeLhs(f"{name} is not fully applied in the lhs")
    arg_types, _ = split_arrow(vsig.signature.defined[name])
    measured = dict(decl.measured)
    sizes = []
    for i, (u, ty) in enumerate(zip(args, arg_types), start=1):
        if i in measured:
            sizes.append(lhs_sigma(u, ty.name, gamma, asig, counts))
        else:
            _parameter(u, gamma, asig)
    return decl.interp_at(tuple(sizes))


def _parameter(t: Term, gamma: dict, asig: AnnotatedSignature) -> None:
    if isinstance(t, Var):
        gamma[t.name] = infty(t.type)
        return
    head, args = spine(t)
    if not isinstance(head, Sym):
        raise NotApplicativeLhs(f"{show_term(t)} is not headed by a symbol")
    for u in args:
        _parameter(u, gamma, asig)


def build_rule_context(rule: Rule, asig: AnnotatedSignature) -> RuleContext:
    head, args = spine(rule.lhs)
    if not isinstance(head, Sym) or head.name not in asig.defined:
        raise NotApplicativeLhs(f"lhs {rule.lhs} is not headed by a defined symbol")
    f = head.name
    decl = asig.defined[f]
    if len(args) != decl.arity:
        raise NotApplicativeLhs(f"lhs of {f} has {len(args)} arguments, expected {decl.arity}")
    _no_binders(rule.lhs)
    arg_types, _ = split_arrow(asig.vsig.signature.defined[f])
    measured = dict(decl.measured)
    gamma: dict[str, AType] = {}
    pgamma: dict[str, AType] = {}
    counts: dict[str, int] = {}
    sizes: dict[int, SizeExpr] = {}
    for i, (u, ty) in enumerate(zip(args, arg_types), start=1):
        if i in measured:
            sizes[i] = lhs_sigma(u, ty.name, gamma, asig, counts)
        else:
            _parameter(u, pgamma, asig)
    for x, n in counts.items():
        if n > 1 or x in pgamma:
            raise VariableUsedTwiceInMeasuredArgs(
                f"variable {x} occurs more than once in the lhs {rule.lhs} "
                f"and at least once in a measured argument"
            )
    gamma.update(pgamma)
    a = tuple(sizes[i] for i in decl.measured_indices)
    return RuleContext(f, rule, decl, gamma, a)


def _no_binders(t: Term) -> None:
    if isinstance(t, Abs):
        raise NotApplicativeLhs("abstractions are not allowed in a left-hand side")
    if isinstance(t, App):
        head, _ = spine(t)
        if isinstance(head, Var):
            raise NotApplicativeLhs("applied variables are not allowed in a left-hand side")
        _no_binders(t.fun)
        _no_binders(t.arg)


# ---------------------------------------------------------------------------
# restricted inference for right-hand sides


@dataclass
class ClosureInferencer(Inferencer):
    ctx: RuleContext | None = None
    prec: Precedence | None = None
    measures: Mapping[str, MeasureSpec] = field(default_factory=dict)
    calls: list[CallRecord] = field(default_factory=list)

    def _symbol_app(self, gamma, head: Sym, args: list[Term], frozen) -> AType:
        g, f = head.name, self.ctx.f
        if g in self.asig.constructors or self.prec.lt(g, f):
            return super()._symbol_app(gamma, head, args, frozen)
        if not self.prec.equiv(g, f):
            raise SymbolAbovePrecedence(f"{g} is neither below nor equivalent to {f}")
        decl = self.asig.defined[g]
        if len(args) != decl.arity:
            raise SymbolAbovePrecedence(
                f"{g} is equivalent to {f} but is applied to {len(args)} of "
                f"{decl.arity} arguments"
            )
        ty = self.instantiate(g)
        measured = dict(decl.measured)
        b = []
        for i, arg in enumerate(args, start=1):
            actual = self._infer(gamma, arg, frozen)
            if i in measured:
                b.append(actual.size)
            ty = self.fit(actual, ty, frozen)
        b = tuple(b)
        res = measure_compare(b, self.ctx.a, self.measures[g], self.measures[f])
        call = show_term(_rebuild(head, args))
        self.calls.append(CallRecord(call, g, b, self.ctx.a, res))
        if res != MeasureCmp.LT:
            raise RecursiveCallNotDecreasing(call, b, self.ctx.a)
        _, res_type = split_aarrow(ty)
        return ABase(res_type.sort, decl.interp_at(b))


def _rebuild(head: Term, args: list[Term]) -> Term:
    for a in args:
        head = App(head, a)
    return head


def cc_infer(ctx: RuleContext, t: Term, asig: AnnotatedSignature, prec: Precedence,
             measures: Mapping[str, MeasureSpec]) -> tuple[AType, list[CallRecord]]:
    inf = ClosureInferencer(asig, ctx=ctx, prec=prec, measures=measures)
    ty = inf.infer(ctx.gamma, t)
    return ty, inf.calls
