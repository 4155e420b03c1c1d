"""Simply-typed terms, signatures, substitution and rewriting.

Bound variables use de Bruijn indices (``Bound``) and free variables are
named and typed (``Var``), so alpha-equivalent terms compare equal.  Any
traversal that descends under a binder opens it with a fresh ``Var``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Mapping, Sequence


class TermError(Exception):
    pass


class UnboundVariable(TermError):
    pass


class UnknownSymbol(TermError):
    pass


class ArrowMismatch(TermError):
    pass


class TypeMismatch(TermError):
    pass


class SignatureError(TermError):
    pass


class NegativeOccurrence(SignatureError):
    def __init__(self, constructor: str, position: tuple[int, ...], sort: str):
        self.constructor = constructor
        self.position = position
        self.sort = sort
        super().__init__(
            f"constructor {constructor}: sort {sort} occurs at negative position "
            f"{show_position(position)}"
        )


def show_position(p: Sequence[int]) -> str:
    return "·".join(str(i) for i in p) if p else "ε"


# ---------------------------------------------------------------------------
# simple types


@dataclass(frozen=True, slots=True)
class Base:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Arrow:
    dom: "SimpleType"
    cod: "SimpleType"

    def __str__(self) -> str:
        left = f"({self.dom})" if isinstance(self.dom, Arrow) else str(self.dom)
        return f"{left} -> {self.cod}"


SimpleType = Base | Arrow


def arrow(*types: SimpleType) -> SimpleType:
    out = types[-1]
    for t in reversed(types[:-1]):
        out = Arrow(t, out)
    return out


def split_arrow(t: SimpleType) -> tuple[list[SimpleType], Base]:
    args = []
    while isinstance(t, Arrow):
        args.append(t.dom)
        t = t.cod
    return args, t


def base_sorts(t: SimpleType) -> set[str]:
    if isinstance(t, Base):
        return {t.name}
    return base_sorts(t.dom) | base_sorts(t.cod)


def type_leaves(t: SimpleType, path: tuple = ()) -> Iterator[tuple[tuple, str]]:
    """Yield ``(position, sort)`` for every base-type leaf."""
    if isinstance(t, Base):
        yield path, t.name
    else:
        yield from type_leaves(t.dom, path + (1,))
        yield from type_leaves(t.cod, path + (2,))


def type_positions(t: SimpleType, polarity: int = 1) -> tuple[set, set]:
    """Positive and negative leaf positions of a simple type."""
    if isinstance(t, Base):
        return ({()}, set()) if polarity > 0 else (set(), {()})
    dp, dn = type_positions(t.dom, -polarity)
    cp, cn = type_positions(t.cod, polarity)
    pos = {(1,) + p for p in dp} | {(2,) + p for p in cp}
    neg = {(1,) + p for p in dn} | {(2,) + p for p in cn}
    return pos, neg


# ---------------------------------------------------------------------------
# terms


class Term:
    __slots__ = ()

    def __str__(self) -> str:
        return show_term(self)


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str
    type: SimpleType


@dataclass(frozen=True, slots=True)
class Bound(Term):
    index: int


@dataclass(frozen=True, slots=True)
class Abs(Term):
    type: SimpleType
    body: Term
    hint: str = field(default="x", compare=False)


@dataclass(frozen=True, slots=True)
class App(Term):
    fun: Term
    arg: Term


@dataclass(frozen=True, slots=True)
class Sym(Term):
    name: str
    label: tuple | None = None


def app(head: Term, *args: Term) -> Term:
    for a in args:
        head = App(head, a)
    return head


def spine(t: Term) -> tuple[Term, list[Term]]:
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def lam(x: Var, body: Term) -> Abs:
    """Build ``λx. body`` by abstracting the free variable ``x``."""
    return Abs(x.type, abstract(body, x), hint=x.name)


def abstract(t: Term, x: Var, depth: int = 0) -> Term:
    if isinstance(t, Var):
        return Bound(depth) if t == x else t
    if isinstance(t, App):
        return App(abstract(t.fun, x, depth), abstract(t.arg, x, depth))
    if isinstance(t, Abs):
        return Abs(t.type, abstract(t.body, x, depth + 1), t.hint)
    return t


def instantiate(body: Term, value: Term, depth: int = 0) -> Term:
    """Replace ``Bound(depth)`` by ``value`` (which must be locally closed)."""
    if isinstance(body, Bound):
        return value if body.index == depth else body
    if isinstance(body, App):
        return App(instantiate(body.fun, value, depth), instantiate(body.arg, value, depth))
    if isinstance(body, Abs):
        return Abs(body.type, instantiate(body.body, value, depth + 1), body.hint)
    return body


def fresh_var(hint: str, type_: SimpleType, avoid: set[str] | None = None) -> Var:
    """``hint%i`` for the smallest ``i`` not in ``avoid``; names chosen this
    way depend only on their context, so traces are reproducible."""
    avoid = avoid or set()
    for i in itertools.count():
        name = f"{hint}%{i}"
        if name not in avoid:
            return Var(name, type_)


def open_abs(t: Abs, avoid: set[str] | None = None) -> tuple[Var, Term]:
    x = fresh_var(t.hint, t.type, set(avoid or ()) | set(free_vars(t.body)))
    return x, instantiate(t.body, x)


def free_vars(t: Term) -> dict[str, SimpleType]:
    out: dict[str, SimpleType] = {}
    _free(t, out)
    return out


def _free(t: Term, out: dict) -> None:
    if isinstance(t, Var):
        out[t.name] = t.type
    elif isinstance(t, App):
        _free(t.fun, out)
        _free(t.arg, out)
    elif isinstance(t, Abs):
        _free(t.body, out)


def var_occurrences(t: Term) -> list[str]:
    if isinstance(t, Var):
        return [t.name]
    if isinstance(t, App):
        return var_occurrences(t.fun) + var_occurrences(t.arg)
    if isinstance(t, Abs):
        return var_occurrences(t.body)
    return []


def symbols(t: Term) -> set[str]:
    if isinstance(t, Sym):
        return {t.name}
    if isinstance(t, App):
        return symbols(t.fun) | symbols(t.arg)
    if isinstance(t, Abs):
        return symbols(t.body)
    return set()


def term_height(t: Term) -> int:
    head, args = spine(t)
    if isinstance(head, Abs):
        h = 1 + term_height(head.body)
    else:
        h = 1
    return max([h] + [1 + term_height(a) for a in args])


def erase_labels(t: Term) -> Term:
    if isinstance(t, Sym):
        return Sym(t.name) if t.label is not None else t
    if isinstance(t, App):
        return App(erase_labels(t.fun), erase_labels(t.arg))
    if isinstance(t, Abs):
        return Abs(t.type, erase_labels(t.body), t.hint)
    return t


def show_term(t: Term) -> str:
    # free variable names are reserved so binder names never shadow them
    names = tuple(sorted(free_vars(t)))
    return _show(t, names, len(names))


def _show(t: Term, names: tuple[str, ...], reserved: int) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Bound):
        return names[-1 - t.index] if t.index < len(names) - reserved else f"#{t.index}"
    if isinstance(t, Sym):
        if t.label is None:
            return t.name
        return f"{t.name}_{{{','.join(str(x) for x in t.label)}}}"
    if isinstance(t, Abs):
        hint = t.hint
        while hint in names:
            hint += "'"
        return f"\\{hint}:{t.type}. {_show(t.body, names + (hint,), reserved)}"
    head, args = spine(t)
    parts = [_show_atom(head, names, reserved)] + [_show_atom(a, names, reserved) for a in args]
    return " ".join(parts)


def _show_atom(t: Term, names: tuple[str, ...], reserved: int) -> str:
    s = _show(t, names, reserved)
    return f"({s})" if isinstance(t, (App, Abs)) else s


# ---------------------------------------------------------------------------
# signatures


@dataclass
class Signature:
    sorts: tuple[str, ...]
    constructors: dict[str, SimpleType]
    defined: dict[str, SimpleType]

    def type_of(self, name: str) -> SimpleType:
        if name in self.constructors:
            return self.constructors[name]
        if name in self.defined:
            return self.defined[name]
        raise UnknownSymbol(name)

    def is_constructor(self, name: str) -> bool:
        return name in self.constructors

    def arity(self, name: str) -> int:
        return len(split_arrow(self.type_of(name))[0])


@dataclass
class ValidatedSignature:
    signature: Signature
    sort_class: dict[str, int]          # SCC id per sort
    below: dict[str, frozenset[str]]    # C in below[B] iff C <=_B B
    ind: dict[str, frozenset[int]]      # 1-based recursive argument positions
    strictly_positive: dict[str, bool]
    warnings: list[str] = field(default_factory=list)

    def equivalent(self, b: str, c: str) -> bool:
        return self.sort_class[b] == self.sort_class[c]

    def sort_le(self, c: str, b: str) -> bool:
        return c in self.below[b]

    def sort_lt(self, c: str, b: str) -> bool:
        return self.sort_le(c, b) and not self.equivalent(c, b)

    def result_sort(self, name: str) -> str:
        return split_arrow(self.signature.type_of(name))[1].name


def validate_signature(sig: Signature) -> ValidatedSignature:
    declared = set(sig.sorts)
    for name, t in itertools.chain(sig.constructors.items(), sig.defined.items()):
        missing = base_sorts(t) - declared
        if missing:
            raise SignatureError(f"symbol {name} uses undeclared sort(s) {sorted(missing)}")
    deps: dict[str, set[str]] = {s: set() for s in sig.sorts}
    for c, t in sig.constructors.items():
        args, res = split_arrow(t)
        for a in args:
            deps[res.name] |= base_sorts(a)
    below = {s: frozenset(_reach(s, deps)) for s in sig.sorts}
    # SCC ids numbered by sorted representative so declaration order is irrelevant
    classes: dict[str, int] = {}
    reps = sorted({min(c for c in below[s] if s in below[c]) for s in sig.sorts})
    for s in sig.sorts:
        rep = min(c for c in below[s] if s in below[c])
        classes[s] = reps.index(rep)

    ind: dict[str, frozenset[int]] = {}
    strict: dict[str, bool] = {}
    warnings: list[str] = []
    for c in sorted(sig.constructors):
        args, res = split_arrow(sig.constructors[c])
        b = res.name
        rec = set()
        sp = True
        for i, a in enumerate(args, start=1):
            pos, _neg = type_positions(a)
            eq_leaves = [(p, s) for p, s in type_leaves(a) if classes[s] == classes[b]]
            for p, s in eq_leaves:
                if p not in pos:
                    raise NegativeOccurrence(c, (i,) + p, s)
            if eq_leaves:
                rec.add(i)
                dom, cod = split_arrow(a)
                if any(classes[s] == classes[b] for d in dom for s in base_sorts(d)):
                    sp = False
        ind[c] = frozenset(rec)
        strict[c] = sp
        if not sp:
            warnings.append(f"NonStrictlyPositive: constructor {c}")
    return ValidatedSignature(sig, classes, below, ind, strict, warnings)


def _reach(s: str, deps: Mapping[str, set[str]]) -> set[str]:
    seen = {s}
    stack = [s]
    while stack:
        for n in deps[stack.pop()]:
            if n not in seen:
                seen.add(n)
                stack.append(n)
    return seen


# ---------------------------------------------------------------------------
# typing


def typecheck_simple(env: Mapping[str, SimpleType] | None, t: Term, sig: Signature) -> SimpleType:
    """Return the simple type of ``t``.

    Free variables carry their own type; when ``env`` is given every free
    variable must be bound there with the same type.
    """
    return _type(t, env, sig, [])


def _type(t: Term, env, sig: Signature, ctx: list[SimpleType]) -> SimpleType:
    if isinstance(t, Var):
        if env is not None:
            if t.name not in env:
                raise UnboundVariable(t.name)
            if env[t.name] != t.type:
                raise TypeMismatch(f"variable {t.name}: {t.type} vs environment {env[t.name]}")
        return t.type
    if isinstance(t, Bound):
        if t.index >= len(ctx):
            raise UnboundVariable(f"#{t.index}")
        return ctx[-1 - t.index]
    if isinstance(t, Sym):
        return sig.type_of(t.name)
    if isinstance(t, Abs):
        return Arrow(t.type, _type(t.body, env, sig, ctx + [t.type]))
    if isinstance(t, App):
        ft = _type(t.fun, env, sig, ctx)
        if not isinstance(ft, Arrow):
            raise ArrowMismatch(f"{show_term(t.fun)} : {ft} is applied but is not a function")
        at = _type(t.arg, env, sig, ctx)
        if at != ft.dom:
            raise ArrowMismatch(f"argument {show_term(t.arg)} : {at}, expected {ft.dom}")
        return ft.cod
    raise TypeError(f"not a term: {t!r}")


def type_of(t: Term, sig: Signature) -> SimpleType:
    return _type(t, None, sig, [])


# ---------------------------------------------------------------------------
# substitution


def substitute(t: Term, theta: Mapping[str, Term], sig: Signature | None = None) -> Term:
    """Simultaneous substitution of free variables.

    Values must be locally closed terms; with ``sig`` given, each value is
    checked to have its variable's type.
    """
    if sig is not None:
        names = {n for n in theta}
        for x, typ in free_vars(t).items():
            if x in names:
                vt = type_of(theta[x], sig)
                if vt != typ:
                    raise TypeMismatch(f"{x} : {typ} cannot be replaced by a term of type {vt}")
    return _subst(t, theta)


def _subst(t: Term, theta: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return theta.get(t.name, t)
    if isinstance(t, App):
        return App(_subst(t.fun, theta), _subst(t.arg, theta))
    if isinstance(t, Abs):
        return Abs(t.type, _subst(t.body, theta), t.hint)
    return t


def compose(theta: Mapping[str, Term], rho: Mapping[str, Term]) -> dict[str, Term]:
    """``theta; rho``: apply ``theta`` first, then ``rho``."""
    out = {x: _subst(v, rho) for x, v in theta.items()}
    for x, v in rho.items():
        out.setdefault(x, v)
    return out


# ---------------------------------------------------------------------------
# rules and rewriting


@dataclass(frozen=True)
class Rule:
    lhs: Term
    rhs: Term
    type: SimpleType

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.rhs}"

    @property
    def head(self) -> str:
        h, _ = spine(self.lhs)
        assert isinstance(h, Sym)
        return h.name

    @cached_property
    def key(self) -> tuple:
        h, args = spine(self.lhs)
        return (h, len(args))


def check_rule(rule: Rule, sig: Signature) -> None:
    lt = type_of(rule.lhs, sig)
    rt = type_of(rule.rhs, sig)
    if lt != rt or lt != rule.type:
        raise TypeMismatch(f"rule {rule}: lhs : {lt}, rhs : {rt}")
    extra = set(free_vars(rule.rhs)) - set(free_vars(rule.lhs))
    if extra:
        raise TermError(f"rule {rule}: rhs variables {sorted(extra)} not in lhs")
    head, _ = spine(rule.lhs)
    if not isinstance(head, Sym) or head.name not in sig.defined:
        raise TermError(f"rule {rule}: lhs must be headed by a defined symbol")


def is_pattern(t: Term, sig: Signature) -> bool:
    if isinstance(t, Var):
        return True
    head, args = spine(t)
    return (
        isinstance(head, Sym)
        and sig.is_constructor(head.name)
        and all(is_pattern(a, sig) for a in args)
    )


def match(pattern: Term, t: Term, theta: dict | None = None) -> dict | None:
    """First-order matching on the applicative spine."""
    theta = {} if theta is None else theta
    if isinstance(pattern, Var):
        bound = theta.get(pattern.name)
        if bound is None:
            theta[pattern.name] = t
            return theta
        return theta if bound == t else None
    if isinstance(pattern, Sym):
        return theta if pattern == t else None
    if isinstance(pattern, App):
        if not isinstance(t, App):
            return None
        if match(pattern.fun, t.fun, theta) is None:
            return None
        return match(pattern.arg, t.arg, theta)
    return theta if pattern == t else None


Position = tuple[int, ...]


def _root_reducts(t: Term, rules: Sequence[Rule], include_beta: bool):
    if include_beta and isinstance(t, App) and isinstance(t.fun, Abs):
        yield instantiate(t.fun.body, t.arg), "beta"
    h, args = spine(t)
    key = (h, len(args))
    for i, r in enumerate(rules):
        if r.key != key:
            continue
        theta = match(r.lhs, t)
        if theta is not None:
            yield _subst(r.rhs, theta), i


def reducts(t: Term, rules: Sequence[Rule], include_beta: bool = True,
            path: Position = ()) -> Iterator[tuple[Term, Position, object]]:
    """All one-step reducts, leftmost-outermost first."""
    for u, rid in _root_reducts(t, rules, include_beta):
        yield u, path, rid
    if isinstance(t, App):
        for u, p, rid in reducts(t.fun, rules, include_beta, path + (1,)):
            yield App(u, t.arg), p, rid
        for u, p, rid in reducts(t.arg, rules, include_beta, path + (2,)):
            yield App(t.fun, u), p, rid
    elif isinstance(t, Abs):
        x, body = open_abs(t)
        for u, p, rid in reducts(body, rules, include_beta, path + (1,)):
            yield Abs(t.type, abstract(u, x), t.hint), p, rid


def rewrite_step(t: Term, rules: Sequence[Rule], include_beta: bool = True):
    """Contract the leftmost-outermost redex; ``None`` on normal forms."""
    return next(reducts(t, rules, include_beta), None)


def normalize_term(t: Term, rules: Sequence[Rule], include_beta: bool = True,
                   max_steps: int = 100_000) -> tuple[Term, int]:
    steps = 0
    while steps < max_steps:
        step = rewrite_step(t, rules, include_beta)
        if step is None:
            return t, steps
        t = step[0]
        steps += 1
    raise TermError(f"no normal form within {max_steps} steps")


def subterm_at(t: Term, p: Position) -> Term:
    for i in p:
        if isinstance(t, App):
            t = t.fun if i == 1 else t.arg
        elif isinstance(t, Abs):
            t = open_abs(t)[1]
        else:
            raise IndexError(p)
    return t
