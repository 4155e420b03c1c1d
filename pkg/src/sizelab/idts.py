"""Translation of simply-typed terms and rules into structural IDTS
meta-terms with explicit abstraction and application symbols, the beta
rule family, and erasure of the abstraction symbols.

IDTS terms are locally nameless: ``IBind`` introduces one binder whose
occurrences are ``IBound(0)``; free variables are ``IVar``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .terms import (
    Abs,
    Arrow,
    Base,
    Rule,
    Signature,
    SimpleType,
    Sym,
    Term,
    Var,
    free_vars,
    open_abs,
    spine,
    split_arrow,
    type_of,
)


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True, slots=True)
class Arr:
    dom: "IdtsType"
    cod: "IdtsType"

    def __str__(self) -> str:
        return f"Arr({self.dom},{self.cod})"


IdtsType = Base | Arr


def to_idts_type(t: SimpleType) -> IdtsType:
    if isinstance(t, Base):
        return t
    return Arr(to_idts_type(t.dom), to_idts_type(t.cod))


def from_idts_type(t: IdtsType) -> SimpleType:
    if isinstance(t, Base):
        return t
    return Arrow(from_idts_type(t.dom), from_idts_type(t.cod))


def arr_subterms(t: IdtsType) -> set[Arr]:
    if isinstance(t, Base):
        return set()
    return {t} | arr_subterms(t.dom) | arr_subterms(t.cod)


# ---------------------------------------------------------------------------
# terms


class ITerm:
    __slots__ = ()

    def __str__(self) -> str:
        return show_idts(self)


@dataclass(frozen=True, slots=True)
class ISym:
    kind: str                      # "fun", "lam" or "app"
    name: str = ""
    types: tuple = ()
    label: tuple | None = None

    def __str__(self) -> str:
        if self.kind == "fun":
            if self.label is None:
                return self.name
            return f"{self.name}_{{{','.join(str(x) for x in self.label)}}}"
        mark = "lam" if self.kind == "lam" else "@"
        return f"{mark}[{self.types[0]};{self.types[1]}]"


def lam_sym(t: IdtsType, u: IdtsType) -> ISym:
    return ISym("lam", "", (t, u))


def app_sym(t: IdtsType, u: IdtsType) -> ISym:
    return ISym("app", "", (t, u))


@dataclass(frozen=True, slots=True)
class IVar(ITerm):
    name: str


@dataclass(frozen=True, slots=True)
class IBound(ITerm):
    index: int


@dataclass(frozen=True, slots=True)
class IBind(ITerm):
    body: ITerm


@dataclass(frozen=True, slots=True)
class IFun(ITerm):
    sym: ISym
    args: tuple[ITerm, ...]


@dataclass(frozen=True, slots=True)
class IMeta(ITerm):
    name: str
    args: tuple[ITerm, ...] = ()


@dataclass(frozen=True)
class IRule:
    lhs: ITerm
    rhs: ITerm
    name: str

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.rhs}"


def show_idts(t: ITerm, depth: int = 0) -> str:
    if isinstance(t, IVar):
        return t.name
    if isinstance(t, IBound):
        k = depth - 1 - t.index
        return f"x{k}" if k >= 0 else f"#{t.index}"
    if isinstance(t, IBind):
        return f"\\x{depth}. {show_idts(t.body, depth + 1)}"
    if isinstance(t, IMeta):
        if not t.args:
            return t.name.upper() if t.name.islower() else t.name
        return f"{t.name.upper()}(" + ", ".join(show_idts(a, depth) for a in t.args) + ")"
    if isinstance(t, IFun):
        if not t.args:
            return str(t.sym)
        return f"{t.sym}(" + ", ".join(show_idts(a, depth) for a in t.args) + ")"
    raise TypeError(t)


# locally nameless plumbing --------------------------------------------------


def iabstract(t: ITerm, name: str, depth: int = 0) -> ITerm:
    if isinstance(t, IVar):
        return IBound(depth) if t.name == name else t
    if isinstance(t, IBind):
        return IBind(iabstract(t.body, name, depth + 1))
    if isinstance(t, IFun):
        return IFun(t.sym, tuple(iabstract(a, name, depth) for a in t.args))
    if isinstance(t, IMeta):
        return IMeta(t.name, tuple(iabstract(a, name, depth) for a in t.args))
    return t


def iinstantiate(t: ITerm, value: ITerm, depth: int = 0) -> ITerm:
    if isinstance(t, IBound):
        return value if t.index == depth else t
    if isinstance(t, IBind):
        return IBind(iinstantiate(t.body, value, depth + 1))
    if isinstance(t, IFun):
        return IFun(t.sym, tuple(iinstantiate(a, value, depth) for a in t.args))
    if isinstance(t, IMeta):
        return IMeta(t.name, tuple(iinstantiate(a, value, depth) for a in t.args))
    return t


def _fresh_name(prefix: str, avoid: set[str]) -> str:
    return next(n for i in itertools.count() if (n := f"{prefix}%{i}") not in avoid)


def iopen(t: IBind) -> tuple[str, ITerm]:
    name = _fresh_name("v", ifree_vars(t.body))
    return name, iinstantiate(t.body, IVar(name))


def isubst(t: ITerm, theta: Mapping[str, ITerm]) -> ITerm:
    """Substitute free variables by locally closed terms."""
    if isinstance(t, IVar):
        return theta.get(t.name, t)
    if isinstance(t, IBind):
        return IBind(isubst(t.body, theta))
    if isinstance(t, IFun):
        return IFun(t.sym, tuple(isubst(a, theta) for a in t.args))
    if isinstance(t, IMeta):
        return IMeta(t.name, tuple(isubst(a, theta) for a in t.args))
    return t


def ifree_vars(t: ITerm) -> set[str]:
    if isinstance(t, IVar):
        return {t.name}
    if isinstance(t, IBind):
        return ifree_vars(t.body)
    if isinstance(t, (IFun, IMeta)):
        out: set[str] = set()
        for a in t.args:
            out |= ifree_vars(a)
        return out
    return set()


def isymbols(t: ITerm) -> list[ISym]:
    if isinstance(t, IBind):
        return isymbols(t.body)
    if isinstance(t, IFun):
        return [t.sym] + [s for a in t.args for s in isymbols(a)]
    if isinstance(t, IMeta):
        return [s for a in t.args for s in isymbols(a)]
    return []


# ---------------------------------------------------------------------------
# translation


def to_idts(t: Term, sig: Signature, metas: frozenset[str] | set[str] = frozenset()) -> ITerm:
    """Translate a well-typed term; free variables named in ``metas``
    become nullary meta-variables."""
    if isinstance(t, Var):
        return IMeta(t.name) if t.name in metas else IVar(t.name)
    if isinstance(t, Abs):
        x, body = open_abs(t)
        u = type_of(body, sig)
        inner = to_idts(body, sig, metas)
        return IFun(lam_sym(to_idts_type(t.type), to_idts_type(u)), (IBind(iabstract(inner, x.name)),))
    head, args = spine(t)
    if isinstance(head, Sym):
        arg_types, res = split_arrow(sig.type_of(head.name))
        n, k = len(arg_types), len(args)
        if k > n:
            raise ValueError(f"{head.name} applied to too many arguments")
        done = tuple(to_idts(a, sig, metas) for a in args)
        avoid = set().union(*map(ifree_vars, done))
        names = []
        for _ in range(n - k):
            names.append(_fresh_name("e", avoid))
            avoid.add(names[-1])
        core: ITerm = IFun(ISym("fun", head.name, (), head.label), done + tuple(IVar(x) for x in names))
        for j in range(n - 1, k - 1, -1):
            rest = res
            for ty in reversed(arg_types[j + 1:]):
                rest = Arrow(ty, rest)
            core = IFun(lam_sym(to_idts_type(arg_types[j]), to_idts_type(rest)),
                        (IBind(iabstract(core, names[j - k])),))
        return core
    cur = to_idts(head, sig, metas)
    ty = type_of(head, sig)
    for a in args:
        assert isinstance(ty, Arrow)
        cur = IFun(app_sym(to_idts_type(ty.dom), to_idts_type(ty.cod)), (cur, to_idts(a, sig, metas)))
        ty = ty.cod
    return cur


def translate_rule(rule: Rule, sig: Signature, name: str = "") -> IRule:
    metas = frozenset(free_vars(rule.lhs))
    return IRule(to_idts(rule.lhs, sig, metas), to_idts(rule.rhs, sig, metas), name or str(rule))


def translate_subst(theta: Mapping[str, Term], sig: Signature) -> dict[str, ITerm]:
    return {x: to_idts(v, sig) for x, v in theta.items()}


def beta_rule(t: IdtsType, u: IdtsType) -> IRule:
    lhs = IFun(app_sym(t, u), (IFun(lam_sym(t, u), (IBind(IMeta("Z", (IBound(0),))),)), IMeta("X")))
    return IRule(lhs, IMeta("Z", (IMeta("X"),)), f"beta[{t};{u}]")


def types_in_use(sig: Signature, terms: Sequence[ITerm] = ()) -> set[tuple[IdtsType, IdtsType]]:
    """Arrow types of symbol arguments plus those of abstraction and
    application symbols occurring in ``terms``."""
    pairs: set[tuple] = set()
    for ty in list(sig.constructors.values()) + list(sig.defined.values()):
        args, _ = split_arrow(ty)
        for a in args:
            for arr in arr_subterms(to_idts_type(a)):
                pairs.add((arr.dom, arr.cod))
    for t in terms:
        for s in isymbols(t):
            if s.kind in ("lam", "app"):
                pairs.add(s.types)
    return pairs


def beta_rule_family(pairs) -> list[IRule]:
    return [beta_rule(t, u) for t, u in sorted(pairs, key=lambda p: (str(p[0]), str(p[1])))]


def translate_system(rules: Sequence[Rule], sig: Signature) -> tuple[list[IRule], list[IRule]]:
    """``(translated rules, beta rules)`` for a rewrite system."""
    tr = [translate_rule(r, sig, f"R{i}") for i, r in enumerate(rules)]
    pairs = types_in_use(sig, [x for r in tr for x in (r.lhs, r.rhs)])
    return tr, beta_rule_family(pairs)


# ---------------------------------------------------------------------------
# structural check and erasure


def arity_of(sym: ISym, sig: Signature) -> int:
    if sym.kind == "lam":
        return 1
    if sym.kind == "app":
        return 2
    return len(split_arrow(sig.type_of(sym.name))[0])


def is_structural(t: ITerm, sig: Signature, under_symbol: bool = False) -> bool:
    if isinstance(t, IBind):
        return under_symbol and is_structural(t.body, sig)
    if isinstance(t, IFun):
        if len(t.args) != arity_of(t.sym, sig):
            return False
        return all(is_structural(a, sig, True) for a in t.args)
    if isinstance(t, IMeta):
        return all(is_structural(a, sig) for a in t.args)
    return True


def erase(t: ITerm) -> ITerm:
    """Remove the abstraction symbols: ``lam(\\x. u)`` becomes ``\\x. |u|``."""
    if isinstance(t, IFun):
        if t.sym.kind == "lam" and len(t.args) == 1 and isinstance(t.args[0], IBind):
            return IBind(erase(t.args[0].body))
        return IFun(t.sym, tuple(erase(a) for a in t.args))
    if isinstance(t, IBind):
        return IBind(erase(t.body))
    if isinstance(t, IMeta):
        return IMeta(t.name, tuple(erase(a) for a in t.args))
    return t


def erase_rule(r: IRule) -> IRule:
    return IRule(erase(r.lhs), erase(r.rhs), r.name)


# ---------------------------------------------------------------------------
# matching and rewriting


class _NoMatch(Exception):
    pass


def match(pattern: ITerm, t: ITerm) -> dict | None:
    """Match a rule lhs against a locally closed term.  Meta-variables
    applied to distinct bound variables (pattern binders) are supported."""
    theta: dict[str, tuple[tuple[str, ...], ITerm]] = {}
    try:
        _match(pattern, t, theta, frozenset())
    except _NoMatch:
        return None
    return theta


def _match(p: ITerm, t: ITerm, theta: dict, bound: frozenset[str]) -> None:
    if isinstance(p, IMeta):
        params = []
        for a in p.args:
            if not isinstance(a, IVar) or a.name not in bound or a.name in params:
                raise ValueError("meta-variable arguments must be distinct bound variables")
            params.append(a.name)
        if ifree_vars(t) & (bound - set(params)):
            raise _NoMatch
        value = (tuple(params), t)
        if p.name in theta:
            old_params, old_body = theta[p.name]
            renamed = isubst(old_body, {o: IVar(n) for o, n in zip(old_params, params)})
            if renamed != t:
                raise _NoMatch
            return
        theta[p.name] = value
        return
    if isinstance(p, IFun):
        if not isinstance(t, IFun) or t.sym != p.sym or len(t.args) != len(p.args):
            raise _NoMatch
        for a, b in zip(p.args, t.args):
            _match(a, b, theta, bound)
        return
    if isinstance(p, IBind):
        if not isinstance(t, IBind):
            raise _NoMatch
        v = _fresh_name("p", ifree_vars(p.body) | ifree_vars(t.body) | bound)
        _match(iinstantiate(p.body, IVar(v)), iinstantiate(t.body, IVar(v)), theta, bound | {v})
        return
    if p != t:
        raise _NoMatch


def instantiate_rhs(r: ITerm, theta: Mapping[str, tuple[tuple[str, ...], ITerm]]) -> ITerm:
    if isinstance(r, IMeta):
        params, body = theta[r.name]
        args = [instantiate_rhs(a, theta) for a in r.args]
        return isubst(body, dict(zip(params, args)))
    if isinstance(r, IFun):
        return IFun(r.sym, tuple(instantiate_rhs(a, theta) for a in r.args))
    if isinstance(r, IBind):
        avoid = ifree_vars(r.body).union(*(ifree_vars(b) for _, b in theta.values()))
        name = _fresh_name("v", avoid)
        body = iinstantiate(r.body, IVar(name))
        return IBind(iabstract(instantiate_rhs(body, theta), name))
    return r


Position = tuple[int, ...]


def reducts(t: ITerm, rules: Sequence[IRule], path: Position = ()) -> Iterator[tuple[ITerm, Position, str]]:
    """All one-step reducts of a locally closed term, outermost first."""
    for r in rules:
        theta = match(r.lhs, t)
        if theta is not None:
            yield instantiate_rhs(r.rhs, theta), path, r.name
    if isinstance(t, IFun):
        for i, a in enumerate(t.args):
            for u, p, name in reducts(a, rules, path + (i + 1,)):
                yield IFun(t.sym, t.args[:i] + (u,) + t.args[i + 1:]), p, name
    elif isinstance(t, IBind):
        v, body = iopen(t)
        for u, p, name in reducts(body, rules, path + (0,)):
            yield IBind(iabstract(u, v)), p, name


def reaches(start: ITerm, target: ITerm, rules: Sequence[IRule], max_steps: int = 8,
            max_nodes: int = 5000) -> bool:
    """Breadth-first search for ``start ->* target``."""
    frontier = [start]
    seen = {start}
    for _ in range(max_steps + 1):
        if target in seen:
            return True
        nxt = []
        for t in frontier:
            for u, _, _ in reducts(t, rules):
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
                    if len(seen) > max_nodes:
                        return target in seen
        if not nxt:
            break
        frontier = nxt
    return target in seen


# ---------------------------------------------------------------------------
# JSON


def type_to_json(t: IdtsType):
    if isinstance(t, Base):
        return t.name
    return {"Arr": [type_to_json(t.dom), type_to_json(t.cod)]}


def iterm_to_json(t: ITerm):
    if isinstance(t, IVar):
        return {"var": t.name}
    if isinstance(t, IBound):
        return {"bound": t.index}
    if isinstance(t, IBind):
        return {"bind": iterm_to_json(t.body)}
    if isinstance(t, IMeta):
        return {"meta": t.name, "args": [iterm_to_json(a) for a in t.args]}
    node = {"sym": t.sym.kind if t.sym.kind != "fun" else t.sym.name}
    if t.sym.kind != "fun":
        node["types"] = [type_to_json(x) for x in t.sym.types]
    if t.sym.label is not None:
        node["label"] = [str(x) for x in t.sym.label]
    node["args"] = [iterm_to_json(a) for a in t.args]
    return node


def rules_to_json(rules: Sequence[IRule]) -> list[dict]:
    return [{"name": r.name, "text": str(r), "lhs": iterm_to_json(r.lhs), "rhs": iterm_to_json(r.rhs)}
            for r in rules]
