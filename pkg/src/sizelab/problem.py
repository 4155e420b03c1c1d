"""Rewrite problems and the ``.strs`` problem-file format.

A problem file is a sequence of sections introduced by an upper-case
keyword at the start of a line::

    SORTS N
    CONS
      0 : N
      s : N -> N
    FUNS
      - : N{a} -> N -> N{a}
    PREC
      / > -
    MEASURE
      / = lex(a)
    INTERP
      + = 2*a+b+1
    RULES
      - x 0 -> x
      rec (lim f) u v w -> w f (\\n:N. rec (f n) u v w)

``#`` starts a comment.  See README.md for the full grammar.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

from .annotated import (
    ABase,
    AArrow,
    AType,
    AnnotatedSignature,
    InvalidAnnotation,
    annotate_signature,
    erase,
    make_fundecl,
    show_atype,
    split_aarrow,
)
from .orders import (
    MeasureSpec,
    OrderError,
    Precedence,
    build_precedence,
    check_measures_compatible,
    identity_measure,
)
from .sizes import INF, SizeError, SizeExpr, SVar, compare, contains_inf, parse_size, show, size_vars, Cmp
from .terms import (
    Abs,
    App,
    Arrow,
    Base,
    Rule,
    Signature,
    SimpleType,
    Sym,
    Term,
    TermError,
    ValidatedSignature,
    Var,
    abstract,
    check_rule,
    show_term,
    spine,
    split_arrow,
    validate_signature,
)

SECTIONS = ("SORTS", "CONS", "FUNS", "PREC", "MEASURE", "INTERP", "RULES")


class ProblemError(Exception):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"line {line}" + (f", column {col}" if col is not None else "") if line else ""
        super().__init__(f"{where}: {message}" if where else message)
        self.message = message


class ProblemSyntaxError(ProblemError):
    pass


class UnknownSort(ProblemError):
    pass


class UnknownSymbol(ProblemError):
    pass


class DuplicateSymbol(ProblemError):
    pass


class InvalidProblemAnnotation(ProblemError):
    pass


# ---------------------------------------------------------------------------
# problems


@dataclass(eq=True)
class RewriteProblem:
    sorts: tuple[str, ...]
    constructors: dict[str, SimpleType]
    defined: dict[str, AType]
    rules: tuple[Rule, ...]
    prec_decls: tuple[tuple[str, str, str], ...] = ()
    measures: dict[str, MeasureSpec] = field(default_factory=dict)
    interps: dict[str, SizeExpr] = field(default_factory=dict)
    name: str = field(default="problem", compare=False)

    @cached_property
    def signature(self) -> Signature:
        return Signature(
            self.sorts,
            dict(self.constructors),
            {f: erase(t) for f, t in self.defined.items()},
        )

    @cached_property
    def vsig(self) -> ValidatedSignature:
        return validate_signature(self.signature)

    @cached_property
    def asig(self) -> AnnotatedSignature:
        return annotate_signature(self.vsig, self.defined)

    @cached_property
    def precedence(self) -> Precedence:
        prec = build_precedence(self.defined, self.constructors, self.prec_decls)
        check_measures_compatible(self.all_measures, prec)
        return prec

    @cached_property
    def all_measures(self) -> dict[str, MeasureSpec]:
        out = {}
        for f in self.defined:
            decl = make_fundecl(f, self.defined[f])
            out[f] = self.measures.get(f) or identity_measure(decl.alphas)
        return out

    def is_constructor_system(self) -> bool:
        return all(
            not _mentions_defined(arg, self.defined)
            for r in self.rules
            for arg in spine(r.lhs)[1]
        )


def _mentions_defined(t: Term, defined) -> bool:
    if isinstance(t, Sym):
        return t.name in defined
    if isinstance(t, App):
        return _mentions_defined(t.fun, defined) or _mentions_defined(t.arg, defined)
    if isinstance(t, Abs):
        return _mentions_defined(t.body, defined)
    return False


# ---------------------------------------------------------------------------
# lexing


_TOK = re.compile(
    r"(?P<ws>[ \t]+)|(?P<arrow>->)|(?P<ident>[A-Za-z0-9_']+)|(?P<op>[+*/<>=~-]+)"
    r"|(?P<brace>\{[^}]*\})|(?P<punct>[()\\:.,])"
)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line: int, col0: int = 1) -> list[Tok]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOK.match(text, pos)
        if m is None:
            raise ProblemSyntaxError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Tok(kind, m.group(), line, col0 + pos))
        pos = m.end()
    return out


class _Stream:
    def __init__(self, toks: list[Tok], line: int, end_col: int):
        self.toks, self.i, self.line, self.end_col = toks, 0, line, end_col

    def peek(self) -> Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> Tok:
        t = self.peek()
        if t is None:
            raise ProblemSyntaxError("unexpected end of line", self.line, self.end_col)
        self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        t = self.next()
        if t.text != text:
            raise ProblemSyntaxError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def done(self) -> bool:
        return self.i >= len(self.toks)

    def error_here(self, msg: str) -> ProblemSyntaxError:
        t = self.peek()
        if t is None:
            return ProblemSyntaxError(msg, self.line, self.end_col)
        return ProblemSyntaxError(msg, t.line, t.col)


# ---------------------------------------------------------------------------
# parsing


def _lines(text: str) -> Iterator[tuple[int, str]]:
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if line.strip():
            yield n, line


def parse_problem(text: str, name: str = "problem") -> RewriteProblem:
    sections: dict[str, list[tuple[int, int, str]]] = {s: [] for s in SECTIONS}
    current = None
    seen_sections = set()
    for n, line in _lines(text):
        stripped = line.lstrip()
        indent = len(line) - len(stripped)
        word = stripped.split(None, 1)[0]
        if word in SECTIONS:
            if word in seen_sections:
                raise ProblemSyntaxError(f"section {word} appears twice", n, indent + 1)
            seen_sections.add(word)
            current = word
            rest = stripped[len(word):]
            if rest.strip():
                col = indent + len(word) + 1 + (len(rest) - len(rest.lstrip()))
                sections[current].append((n, col, rest.strip()))
            continue
        if current is None:
            raise ProblemSyntaxError("content before the first section keyword", n, indent + 1)
        sections[current].append((n, indent + 1, stripped))

    sorts = _parse_sorts(sections["SORTS"])
    symbols: dict[str, tuple[int, int]] = {}
    constructors = {}
    for n, col, body in sections["CONS"]:
        for cname, ty in _parse_decls(n, col, body, sorts, annotated=False, symbols=symbols):
            constructors[cname] = ty
    defined = {}
    for n, col, body in sections["FUNS"]:
        for fname, ty in _parse_decls(n, col, body, sorts, annotated=True, symbols=symbols):
            defined[fname] = ty

    interps = {}
    for n, col, body in sections["INTERP"]:
        f, expr_text, ecol = _split_assignment(n, col, body, defined)
        if f in interps:
            raise DuplicateSymbol(f"interpretation of {f} given twice", n, col)
        try:
            interps[f] = parse_size(expr_text)
        except SizeError as e:
            raise InvalidProblemAnnotation(str(e), n, ecol) from None
    defined = {f: _apply_interp(f, t, interps.get(f), symbols[f]) for f, t in defined.items()}

    measures = {}
    for n, col, body in sections["MEASURE"]:
        f, expr_text, ecol = _split_assignment(n, col, body, defined)
        if f in measures:
            raise DuplicateSymbol(f"measure of {f} given twice", n, col)
        measures[f] = _parse_measure(f, defined[f], expr_text, n, ecol)

    prec_decls = []
    for n, col, body in sections["PREC"]:
        prec_decls.extend(_parse_prec(n, col, body, defined))

    sig = Signature(tuple(sorts), constructors, {f: erase(t) for f, t in defined.items()})
    rules = tuple(_parse_rule(n, col, body, sig) for n, col, body in sections["RULES"])
    problem = RewriteProblem(tuple(sorts), constructors, defined, rules,
                             tuple(prec_decls), measures, interps, name)
    try:
        problem.precedence
    except OrderError as e:
        line = sections["PREC"][0][0] if sections["PREC"] else None
        raise ProblemError(str(e), line) from None
    return problem


def _parse_sorts(entries) -> list[str]:
    sorts: list[str] = []
    for n, col, body in entries:
        for tok in tokenize(body.replace(",", " "), n, col):
            if tok.kind != "ident":
                raise ProblemSyntaxError(f"invalid sort name {tok.text!r}", n, tok.col)
            if tok.text in sorts:
                raise DuplicateSymbol(f"sort {tok.text} declared twice", n, tok.col)
            sorts.append(tok.text)
    return sorts


def _parse_decls(n, col, body, sorts, annotated, symbols):
    toks = tokenize(body, n, col)
    s = _Stream(toks, n, col + len(body))
    names = []
    while True:
        t = s.next()
        if t.kind not in ("ident", "op"):
            raise ProblemSyntaxError(f"expected a symbol name, found {t.text!r}", n, t.col)
        names.append(t)
        nxt = s.peek()
        if nxt is not None and nxt.text == ",":
            s.next()
            continue
        break
    s.expect(":")
    ty = _parse_type(s, sorts, annotated)
    if not s.done():
        raise s.error_here("unexpected text after type")
    out = []
    for t in names:
        if t.text in symbols:
            raise DuplicateSymbol(f"symbol {t.text} declared twice", n, t.col)
        symbols[t.text] = (n, t.col)
        if annotated:
            try:
                make_fundecl(t.text, ty)
            except InvalidAnnotation as e:
                raise InvalidProblemAnnotation(str(e), n, t.col) from None
        out.append((t.text, ty))
    return out


def _parse_type(s: _Stream, sorts, annotated: bool):
    left = _parse_type_atom(s, sorts, annotated)
    nxt = s.peek()
    if nxt is not None and nxt.kind == "arrow":
        s.next()
        right = _parse_type(s, sorts, annotated)
        return AArrow(left, right) if annotated else Arrow(left, right)
    return left


def _parse_type_atom(s: _Stream, sorts, annotated: bool):
    t = s.next()
    if t.text == "(":
        ty = _parse_type(s, sorts, annotated)
        s.expect(")")
        return ty
    if t.kind != "ident":
        raise ProblemSyntaxError(f"expected a sort, found {t.text!r}", t.line, t.col)
    if t.text not in sorts:
        raise UnknownSort(f"unknown sort {t.text}", t.line, t.col)
    size: SizeExpr = INF
    nxt = s.peek()
    if nxt is not None and nxt.kind == "brace":
        s.next()
        if not annotated:
            raise InvalidProblemAnnotation(
                "constructor types are annotated automatically; remove the braces",
                nxt.line, nxt.col)
        try:
            size = parse_size(nxt.text[1:-1])
        except SizeError as e:
            raise InvalidProblemAnnotation(str(e), nxt.line, nxt.col) from None
    return ABase(t.text, size) if annotated else Base(t.text)


def _split_assignment(n, col, body, defined):
    if "=" not in body:
        raise ProblemSyntaxError("expected 'symbol = ...'", n, col)
    lhs, rhs = body.split("=", 1)
    f = lhs.strip()
    if f not in defined:
        raise UnknownSymbol(f"{f} is not a defined symbol", n, col)
    return f, rhs.strip(), col + len(lhs) + 1


def _apply_interp(f: str, t: AType, interp: SizeExpr | None, where) -> AType:
    args, res = split_aarrow(t)
    if interp is None:
        return t
    declared = res.size
    if not contains_inf(declared) and compare(declared, interp) != Cmp.EQ:
        raise InvalidProblemAnnotation(
            f"{f}: INTERP {show(interp)} disagrees with the result annotation {show(declared)}",
            *where)
    alphas = {a.size.name for a in args if isinstance(a, ABase) and isinstance(a.size, SVar)}
    extra = size_vars(interp) - alphas
    if extra:
        raise InvalidProblemAnnotation(f"{f}: interpretation uses unknown variable(s) {sorted(extra)}", *where)
    out: AType = ABase(res.sort, interp)
    for a in reversed(args):
        out = AArrow(a, out)
    return out


_MEASURE = re.compile(r"^(lex|mul)\s*\((.*)\)$")


def _parse_measure(f: str, t: AType, text: str, n: int, col: int) -> MeasureSpec:
    m = _MEASURE.match(text.strip())
    if m is None:
        raise ProblemSyntaxError("measure must be lex(...) or mul(...)", n, col)
    kind, inner = m.group(1), m.group(2)
    decl = make_fundecl(f, t)
    positions = dict(decl.measured)
    comps = []
    for part in _split_top(inner):
        part = part.strip()
        if not part:
            raise ProblemSyntaxError("empty measure component", n, col)
        if part.isdigit():
            i = int(part)
            if i not in positions:
                raise InvalidProblemAnnotation(f"{f}: argument {i} is not a measured argument", n, col)
            comps.append(SVar(positions[i]))
            continue
        try:
            e = parse_size(part)
        except SizeError as err:
            raise InvalidProblemAnnotation(str(err), n, col) from None
        extra = size_vars(e) - set(decl.alphas)
        if extra or contains_inf(e):
            raise InvalidProblemAnnotation(
                f"{f}: measure component {part!r} must be finite and use only {list(decl.alphas)}", n, col)
        comps.append(e)
    return MeasureSpec(kind, decl.alphas, tuple(comps))


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur.append(ch)
    parts.append("".join(cur))
    return parts


def _parse_prec(n, col, body, defined):
    toks = tokenize(body, n, col)
    names = toks[0::2]
    ops = toks[1::2]
    if len(names) != len(ops) + 1 or not ops:
        raise ProblemSyntaxError("expected 'f > g' or 'f ~ g'", n, col)
    for t in names:
        if t.text not in defined:
            raise UnknownSymbol(f"{t.text} is not a defined symbol", n, t.col)
    out = []
    for left, op, right in zip(names, ops, names[1:]):
        if op.text not in (">", "~"):
            raise ProblemSyntaxError(f"unknown precedence operator {op.text!r}", n, op.col)
        out.append((left.text, op.text, right.text))
    return out


# rules ---------------------------------------------------------------------


def _parse_rule(n: int, col: int, body: str, sig: Signature) -> Rule:
    toks = tokenize(body, n, col)
    s = _Stream(toks, n, col + len(body))
    lhs_raw = _parse_term(s)
    t = s.next() if not s.done() else None
    if t is None or t.kind != "arrow":
        raise ProblemSyntaxError("expected '->' between the rule sides",
                                 n, t.col if t else col + len(body))
    rhs_raw = _parse_term(s)
    if not s.done():
        raise s.error_here("unexpected text after the rule")
    env: dict[str, SimpleType] = {}
    head = _raw_head(lhs_raw)
    if head[0] != "id" or head[1] not in sig.defined:
        where = head[2] if head[0] == "id" else (n, col)
        if head[0] == "id" and head[1] not in sig.constructors:
            raise UnknownSymbol(f"lhs head {head[1]} is not a defined symbol", *where)
        raise ProblemError("the lhs must be headed by a defined symbol", *where)
    _assign_lhs_types(lhs_raw, None, env, sig)
    lhs = _build(lhs_raw, env, sig, {}, lhs=True)
    rhs = _build(rhs_raw, env, sig, {}, lhs=False)
    try:
        ty = _simple_type_of(lhs, sig)
        rule = Rule(lhs, rhs, ty)
        check_rule(rule, sig)
    except TermError as e:
        raise ProblemError(f"ill-typed rule: {e}", n, col) from None
    return rule


def _simple_type_of(t: Term, sig: Signature) -> SimpleType:
    from .terms import type_of

    return type_of(t, sig)


# raw syntax trees: ("id", name, (line, col)) | ("app", f, a) | ("lam", name, type, body, (line,col))


def _parse_term(s: _Stream):
    items = []
    while True:
        t = s.peek()
        if t is None or t.kind == "arrow" or t.text == ")":
            break
        if t.text == "\\":
            items.append(_parse_lambda(s))
            break
        items.append(_parse_atom(s))
    if not items:
        raise s.error_here("expected a term")
    out = items[0]
    for a in items[1:]:
        out = ("app", out, a)
    return out


def _parse_atom(s: _Stream):
    t = s.next()
    if t.text == "(":
        inner = _parse_term(s)
        s.expect(")")
        return inner
    if t.kind in ("ident", "op"):
        return ("id", t.text, (t.line, t.col))
    raise ProblemSyntaxError(f"unexpected {t.text!r}", t.line, t.col)


def _parse_lambda(s: _Stream):
    lam_tok = s.expect("\\")
    x = s.next()
    if x.kind != "ident":
        raise ProblemSyntaxError("expected a variable after '\\'", x.line, x.col)
    s.expect(":")
    ty = _parse_simple_type(s)
    s.expect(".")
    body = _parse_term(s)
    return ("lam", x.text, ty, body, (lam_tok.line, lam_tok.col))


def _parse_simple_type(s: _Stream) -> SimpleType:
    t = s.next()
    if t.text == "(":
        left = _parse_simple_type(s)
        s.expect(")")
    elif t.kind == "ident":
        left = Base(t.text)
    else:
        raise ProblemSyntaxError(f"expected a type, found {t.text!r}", t.line, t.col)
    nxt = s.peek()
    if nxt is not None and nxt.kind == "arrow":
        s.next()
        return Arrow(left, _parse_simple_type(s))
    return left


def _raw_head(raw):
    while raw[0] == "app":
        raw = raw[1]
    return raw


def _raw_spine(raw):
    args = []
    while raw[0] == "app":
        args.append(raw[2])
        raw = raw[1]
    return raw, list(reversed(args))


def _assign_lhs_types(raw, expected: SimpleType | None, env: dict, sig: Signature) -> None:
    head, args = _raw_spine(raw)
    if head[0] == "lam":
        raise ProblemError("abstractions are not allowed in a left-hand side", *head[4])
    name, where = head[1], head[2]
    if name in sig.constructors or name in sig.defined:
        arg_types, _ = split_arrow(sig.type_of(name))
        if len(args) > len(arg_types):
            raise ProblemError(f"{name} is applied to too many arguments", *where)
        for a, ty in zip(args, arg_types):
            _assign_lhs_types(a, ty, env, sig)
        return
    if args:
        raise UnknownSymbol(f"{name} is applied in the lhs but is not a declared symbol", *where)
    if expected is None:
        raise ProblemError(f"cannot determine the type of variable {name}", *where)
    if name in env and env[name] != expected:
        raise ProblemError(f"variable {name} used at types {env[name]} and {expected}", *where)
    env[name] = expected


def _build(raw, env: dict, sig: Signature, bound: dict, lhs: bool) -> Term:
    kind = raw[0]
    if kind == "app":
        return App(_build(raw[1], env, sig, bound, lhs), _build(raw[2], env, sig, bound, lhs))
    if kind == "lam":
        _, x, ty, body, where = raw
        for srt in _sorts_of(ty):
            if srt not in sig.sorts:
                raise UnknownSort(f"unknown sort {srt}", *where)
        v = Var(f"{x}%b{len(bound)}", ty)
        inner = dict(bound)
        inner[x] = v
        b = _build(body, env, sig, inner, lhs)
        return Abs(ty, abstract(b, v), hint=x)
    name, where = raw[1], raw[2]
    if name in bound:
        return bound[name]
    if name in sig.constructors or name in sig.defined:
        return Sym(name)
    if name in env:
        return Var(name, env[name])
    if lhs:
        raise ProblemError(f"cannot determine the type of variable {name}", *where)
    raise UnknownSymbol(f"{name} is neither a declared symbol nor a variable of the lhs", *where)


def _sorts_of(t: SimpleType) -> list[str]:
    if isinstance(t, Base):
        return [t.name]
    return _sorts_of(t.dom) + _sorts_of(t.cod)


def load_problem(path) -> RewriteProblem:
    from pathlib import Path

    p = Path(path)
    return parse_problem(p.read_text(encoding="utf-8"), name=p.stem)


# ---------------------------------------------------------------------------
# printing


def format_type(t: SimpleType) -> str:
    if isinstance(t, Base):
        return t.name
    left = format_type(t.dom)
    if isinstance(t.dom, Arrow):
        left = f"({left})"
    return f"{left} -> {format_type(t.cod)}"


def format_term(t: Term) -> str:
    return show_term(t)


def format_problem(p: RewriteProblem) -> str:
    lines = ["SORTS " + " ".join(p.sorts), "CONS"]
    for c, t in p.constructors.items():
        lines.append(f"  {c} : {format_type(t)}")
    lines.append("FUNS")
    for f, t in p.defined.items():
        shown = t
        if f in p.interps:
            args, res = split_aarrow(t)
            shown = ABase(res.sort, INF)
            for a in reversed(args):
                shown = AArrow(a, shown)
        lines.append(f"  {f} : {show_atype(shown)}")
    if p.prec_decls:
        lines.append("PREC")
        for f, op, g in p.prec_decls:
            lines.append(f"  {f} {op} {g}")
    if p.measures:
        lines.append("MEASURE")
        for f, m in p.measures.items():
            lines.append(f"  {f} = {m}")
    if p.interps:
        lines.append("INTERP")
        for f, e in p.interps.items():
            lines.append(f"  {f} = {show(e)}")
    lines.append("RULES")
    for r in p.rules:
        lines.append(f"  {format_term(r.lhs)} -> {format_term(r.rhs)}")
    return "\n".join(lines) + "\n"
