"""Size expressions over ``0``, ``s``, ``max``, ``inf`` and linear atoms.

Expressions are immutable trees.  Every expression has a canonical
normal form: either infinity, or a finite set of linear atoms
``c1*x1 + ... + cn*xn + c0`` read as their pointwise maximum.  Comparison
works on normal forms by atom dominance, which is sound over natural
number valuations but not complete.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping


class SizeError(Exception):
    pass


class UnboundSizeVariable(SizeError):
    pass


class UnsupportedSizeSymbol(SizeError):
    pass


class NonMonotoneAnnotation(SizeError):
    pass


class SizeSyntaxError(SizeError):
    pass


class SizeExpr:
    __slots__ = ()

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True, slots=True)
class SVar(SizeExpr):
    name: str


@dataclass(frozen=True, slots=True)
class SZero(SizeExpr):
    pass


@dataclass(frozen=True, slots=True)
class SSucc(SizeExpr):
    arg: SizeExpr


@dataclass(frozen=True, slots=True)
class SMax(SizeExpr):
    left: SizeExpr
    right: SizeExpr


@dataclass(frozen=True, slots=True)
class SInf(SizeExpr):
    pass


@dataclass(frozen=True, slots=True)
class SLin(SizeExpr):
    """``sum(c * e for c, e in terms) + const`` with natural coefficients."""

    terms: tuple[tuple[int, SizeExpr], ...]
    const: int = 0


@dataclass(frozen=True, slots=True)
class SFun(SizeExpr):
    """Application of a registered extension symbol (see ``SIZE_SYMBOLS``)."""

    name: str
    args: tuple[SizeExpr, ...]


@dataclass(frozen=True)
class SizeSymbol:
    arity: int
    monotone: frozenset[int]
    antitone: frozenset[int]
    interpret: Callable[..., float]


# Extension point for algebras beyond 0/s/max/linear.  Nothing in the
# problem syntax produces SFun nodes; they exist so that non-monotone
# symbols are caught by check_monotonicity rather than silently accepted.
SIZE_SYMBOLS: dict[str, SizeSymbol] = {}

ZERO = SZero()
INF = SInf()


def var(name: str) -> SVar:
    return SVar(name)


def succ(e: SizeExpr, k: int = 1) -> SizeExpr:
    for _ in range(k):
        e = SSucc(e)
    return e


def smax(*es: SizeExpr) -> SizeExpr:
    """Right-nested max; ``smax(a) == a``, ``smax() == 0``."""
    if not es:
        return ZERO
    out = es[-1]
    for e in reversed(es[:-1]):
        out = SMax(e, out)
    return out


def lin(terms: Iterable[tuple[int, SizeExpr]], const: int = 0) -> SizeExpr:
    terms = tuple((c, e) for c, e in terms if c != 0)
    if not terms:
        return succ(ZERO, const)
    if len(terms) == 1 and terms[0][0] == 1:
        return succ(terms[0][1], const)
    return SLin(terms, const)


def children(e: SizeExpr) -> tuple[SizeExpr, ...]:
    if isinstance(e, SSucc):
        return (e.arg,)
    if isinstance(e, SMax):
        return (e.left, e.right)
    if isinstance(e, SLin):
        return tuple(t for _, t in e.terms)
    if isinstance(e, SFun):
        return e.args
    return ()


def size_vars(e: SizeExpr) -> set[str]:
    if isinstance(e, SVar):
        return {e.name}
    out: set[str] = set()
    for c in children(e):
        out |= size_vars(c)
    return out


def contains_inf(e: SizeExpr) -> bool:
    if isinstance(e, SInf):
        return True
    return any(contains_inf(c) for c in children(e))


def is_linear(e: SizeExpr) -> bool:
    """True if the expression needs the linear (first-order only) algebra."""
    if isinstance(e, SLin):
        return True
    return any(is_linear(c) for c in children(e))


def apply_size_subst(e: SizeExpr, phi: Mapping[str, SizeExpr]) -> SizeExpr:
    out = _subst(e, phi)
    return INF if contains_inf(out) else out


def _subst(e: SizeExpr, phi: Mapping[str, SizeExpr]) -> SizeExpr:
    if isinstance(e, SVar):
        return phi.get(e.name, e)
    if isinstance(e, SSucc):
        return SSucc(_subst(e.arg, phi))
    if isinstance(e, SMax):
        return SMax(_subst(e.left, phi), _subst(e.right, phi))
    if isinstance(e, SLin):
        return SLin(tuple((c, _subst(t, phi)) for c, t in e.terms), e.const)
    if isinstance(e, SFun):
        return SFun(e.name, tuple(_subst(a, phi) for a in e.args))
    return e


def eval_size(e: SizeExpr, mu: Mapping[str, int]) -> float:
    """Evaluate into the naturals; ``inf`` maps to ``math.inf``."""
    if isinstance(e, SVar):
        try:
            return mu[e.name]
        except KeyError:
            raise UnboundSizeVariable(e.name) from None
    if isinstance(e, SZero):
        return 0
    if isinstance(e, SInf):
        return math.inf
    if isinstance(e, SSucc):
        return eval_size(e.arg, mu) + 1
    if isinstance(e, SMax):
        return max(eval_size(e.left, mu), eval_size(e.right, mu))
    if isinstance(e, SLin):
        total = e.const
        for c, t in e.terms:
            v = eval_size(t, mu)
            total += math.inf if v == math.inf else c * v
        return total
    if isinstance(e, SFun):
        sym = _symbol(e.name)
        return sym.interpret(*(eval_size(a, mu) for a in e.args))
    raise TypeError(f"not a size expression: {e!r}")


def _symbol(name: str) -> SizeSymbol:
    try:
        return SIZE_SYMBOLS[name]
    except KeyError:
        raise UnsupportedSizeSymbol(name) from None


# ---------------------------------------------------------------------------
# normal forms

Atom = tuple[tuple[tuple[str, int], ...], int]


@dataclass(frozen=True)
class SizeNF:
    """``atoms is None`` encodes infinity."""

    atoms: frozenset | None

    @property
    def is_inf(self) -> bool:
        return self.atoms is None

    def variables(self) -> set[str]:
        if self.atoms is None:
            return set()
        return {v for coeffs, _ in self.atoms for v, _ in coeffs}

    def evaluate(self, mu: Mapping[str, int]) -> float:
        if self.atoms is None:
            return math.inf
        best = 0
        for coeffs, const in self.atoms:
            val = const
            for v, c in coeffs:
                try:
                    val += c * mu[v]
                except KeyError:
                    raise UnboundSizeVariable(v) from None
            best = max(best, val)
        return best

    def to_expr(self) -> SizeExpr:
        if self.atoms is None:
            return INF
        return smax(*(_atom_expr(a) for a in sorted(self.atoms, key=_atom_key)))

    def __str__(self) -> str:
        if self.atoms is None:
            return "inf"
        parts = [_atom_str(a) for a in sorted(self.atoms, key=_atom_key)]
        return parts[0] if len(parts) == 1 else "max(" + ",".join(parts) + ")"


INF_NF = SizeNF(None)


def _atom_key(a: Atom):
    coeffs, const = a
    return (coeffs, const)


def _atom_expr(a: Atom) -> SizeExpr:
    coeffs, const = a
    return lin(((c, SVar(v)) for v, c in coeffs), const)


def _atom_str(a: Atom) -> str:
    coeffs, const = a
    parts = [v if c == 1 else f"{c}*{v}" for v, c in coeffs]
    if const or not parts:
        parts.append(str(const))
    return "+".join(parts)


def _atom(coeffs: Mapping[str, int], const: int) -> Atom:
    return (tuple(sorted((v, c) for v, c in coeffs.items() if c)), const)


def _atom_add(a: Atom, b: Atom) -> Atom:
    acc = dict(a[0])
    for v, c in b[0]:
        acc[v] = acc.get(v, 0) + c
    return _atom(acc, a[1] + b[1])


def _atom_scale(a: Atom, k: int) -> Atom:
    return _atom({v: c * k for v, c in a[0]}, a[1] * k)


def _dominated(a: Atom, b: Atom, strict: bool = False) -> bool:
    """``a <= b`` (or ``a < b``) at every natural valuation."""
    bc = dict(b[0])
    for v, c in a[0]:
        if c > bc.get(v, 0):
            return False
    return a[1] < b[1] if strict else a[1] <= b[1]


def _prune(atoms: Iterable[Atom]) -> frozenset:
    atoms = set(atoms)
    keep = [a for a in atoms if not any(b != a and _dominated(a, b) for b in atoms)]
    return frozenset(keep)


def normalize(e: SizeExpr) -> SizeNF:
    atoms = _nf(e)
    return INF_NF if atoms is None else SizeNF(atoms)


def _nf(e: SizeExpr) -> frozenset | None:
    if isinstance(e, SVar):
        return frozenset({_atom({e.name: 1}, 0)})
    if isinstance(e, SZero):
        return frozenset({_atom({}, 0)})
    if isinstance(e, SInf):
        return None
    if isinstance(e, SSucc):
        inner = _nf(e.arg)
        if inner is None:
            return None
        return frozenset((c, k + 1) for c, k in inner)
    if isinstance(e, SMax):
        left, right = _nf(e.left), _nf(e.right)
        if left is None or right is None:
            return None
        return _prune(left | right)
    if isinstance(e, SLin):
        acc = {_atom({}, e.const)}
        for c, t in e.terms:
            inner = _nf(t)
            if inner is None:
                return None
            if c == 0:
                continue
            scaled = [_atom_scale(a, c) for a in inner]
            acc = {_atom_add(x, y) for x in acc for y in scaled}
        return _prune(acc)
    if isinstance(e, SFun):
        raise UnsupportedSizeSymbol(e.name)
    raise TypeError(f"not a size expression: {e!r}")


# ---------------------------------------------------------------------------
# comparison


class Cmp(str, Enum):
    LT = "LT"
    LE = "LE"
    EQ = "EQ"
    INCOMPARABLE = "INCOMPARABLE"

    def __str__(self) -> str:
        return self.value


LEQ = frozenset({Cmp.LT, Cmp.LE, Cmp.EQ})


def compare_nf(a: SizeNF, b: SizeNF) -> Cmp:
    if b.is_inf:
        return Cmp.EQ if a.is_inf else Cmp.LT
    if a.is_inf:
        return Cmp.INCOMPARABLE
    if a.atoms == b.atoms:
        return Cmp.EQ
    if all(any(_dominated(p, q, strict=True) for q in b.atoms) for p in a.atoms):
        return Cmp.LT
    if all(any(_dominated(p, q) for q in b.atoms) for p in a.atoms):
        return Cmp.LE
    return Cmp.INCOMPARABLE


def compare(a: SizeExpr, b: SizeExpr) -> Cmp:
    """Sound comparison in the extended algebra (``a <= inf`` always)."""
    if a == b:
        return Cmp.EQ
    try:
        return compare_nf(normalize(a), normalize(b))
    except UnsupportedSizeSymbol:
        return Cmp.INCOMPARABLE


def compare_finite(a: SizeExpr | SizeNF, b: SizeExpr | SizeNF) -> Cmp:
    """Comparison in the algebra without ``inf``: any infinite side is
    unknown, so nothing is learned from it."""
    try:
        na = a if isinstance(a, SizeNF) else normalize(a)
        nb = b if isinstance(b, SizeNF) else normalize(b)
    except UnsupportedSizeSymbol:
        return Cmp.EQ if a == b else Cmp.INCOMPARABLE
    if na.is_inf or nb.is_inf:
        return Cmp.INCOMPARABLE
    return compare_nf(na, nb)


# ---------------------------------------------------------------------------
# monotonicity and positions


def monotonicity(e: SizeExpr) -> tuple[frozenset[int], frozenset[int]]:
    """(Mon+, Mon-) of the head symbol, as 1-based argument indices."""
    if isinstance(e, (SSucc, SMax, SLin)):
        idx = frozenset(range(1, len(children(e)) + 1))
        return idx, frozenset()
    if isinstance(e, SFun):
        sym = _symbol(e.name)
        return sym.monotone, sym.antitone
    return frozenset(), frozenset()


def size_positions(e: SizeExpr, polarity: int = 1):
    """Return ``(pos, neg, occurrences)`` for a size expression.

    Positions are tuples of 1-based child indices; ``occurrences`` maps each
    variable to the set of positions where it occurs.
    """
    pos: set[tuple] = set()
    neg: set[tuple] = set()
    occ: dict[str, set[tuple]] = {}

    def walk(x: SizeExpr, path: tuple, pol: int) -> None:
        if isinstance(x, SVar):
            (pos if pol > 0 else neg).add(path)
            occ.setdefault(x.name, set()).add(path)
            return
        mon, anti = monotonicity(x)
        for i, c in enumerate(children(x), start=1):
            if i in mon:
                walk(c, path + (i,), pol)
            elif i in anti:
                walk(c, path + (i,), -pol)
            else:
                _record_only(c, path + (i,), occ)

    walk(e, (), polarity)
    return pos, neg, occ


def _record_only(x: SizeExpr, path: tuple, occ: dict) -> None:
    if isinstance(x, SVar):
        occ.setdefault(x.name, set()).add(path)
    for i, c in enumerate(children(x), start=1):
        _record_only(c, path + (i,), occ)


def check_monotone(e: SizeExpr) -> None:
    """Raise NonMonotoneAnnotation unless every symbol is monotone in every
    argument."""
    mon, _ = monotonicity(e)
    kids = children(e)
    missing = [i for i in range(1, len(kids) + 1) if i not in mon]
    if missing:
        name = e.name if isinstance(e, SFun) else type(e).__name__
        raise NonMonotoneAnnotation(f"{name} is not monotone in argument(s) {missing}")
    for c in kids:
        check_monotone(c)


# ---------------------------------------------------------------------------
# text syntax


def show(e: SizeExpr) -> str:
    if isinstance(e, SVar):
        return e.name
    if isinstance(e, SZero):
        return "0"
    if isinstance(e, SInf):
        return "inf"
    if isinstance(e, SSucc):
        return f"s({show(e.arg)})"
    if isinstance(e, SMax):
        return f"max({show(e.left)},{show(e.right)})"
    if isinstance(e, SLin):
        parts = [show(t) if c == 1 else f"{c}*{_show_factor(t)}" for c, t in e.terms]
        if e.const:
            parts.append(str(e.const))
        return "+".join(parts)
    if isinstance(e, SFun):
        return f"{e.name}(" + ",".join(show(a) for a in e.args) + ")"
    raise TypeError(f"not a size expression: {e!r}")


def _show_factor(e: SizeExpr) -> str:
    return f"({show(e)})" if isinstance(e, SLin) else show(e)


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_']*)|(.))")


def _tokens(text: str) -> list[str]:
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        tok = m.group(1) or m.group(2) or m.group(3)
        if tok is not None and not tok.isspace():
            out.append(tok)
        pos = m.end()
    return out


def parse_size(text: str) -> SizeExpr:
    """Parse ``0``, ``s(e)``, ``max(e,...)``, ``inf``, ``2*x+y+1`` ..."""
    toks = _tokens(text)
    if not toks:
        raise SizeSyntaxError("empty size expression")
    expr, i = _parse_sum(toks, 0)
    if i != len(toks):
        raise SizeSyntaxError(f"unexpected {toks[i]!r} in size expression {text!r}")
    return INF if contains_inf(expr) else expr


def _parse_sum(toks: list[str], i: int) -> tuple[SizeExpr, int]:
    terms: list[tuple[int, SizeExpr]] = []
    const = 0
    while True:
        coef, atom, i = _parse_term(toks, i)
        if atom is None:
            const += coef
        else:
            terms.append((coef, atom))
        if i < len(toks) and toks[i] == "+":
            i += 1
            continue
        break
    if not terms:
        return succ(ZERO, const), i
    if len(terms) == 1 and terms[0][0] == 1:
        return succ(terms[0][1], const), i
    return SLin(tuple(terms), const), i


def _parse_term(toks: list[str], i: int):
    if i >= len(toks):
        raise SizeSyntaxError("size expression ends early")
    tok = toks[i]
    if tok.isdigit():
        n = int(tok)
        if i + 1 < len(toks) and toks[i + 1] == "*":
            atom, j = _parse_atom(toks, i + 2)
            return n, atom, j
        return n, None, i + 1
    atom, j = _parse_atom(toks, i)
    return 1, atom, j


def _parse_args(toks: list[str], i: int) -> tuple[list[SizeExpr], int]:
    if i >= len(toks) or toks[i] != "(":
        raise SizeSyntaxError("expected '('")
    args = []
    i += 1
    while True:
        e, i = _parse_sum(toks, i)
        args.append(e)
        if i < len(toks) and toks[i] == ",":
            i += 1
            continue
        if i < len(toks) and toks[i] == ")":
            return args, i + 1
        raise SizeSyntaxError("expected ',' or ')'")


def _parse_atom(toks: list[str], i: int) -> tuple[SizeExpr, int]:
    if i >= len(toks):
        raise SizeSyntaxError("size expression ends early")
    tok = toks[i]
    if tok == "(":
        e, i = _parse_sum(toks, i + 1)
        if i >= len(toks) or toks[i] != ")":
            raise SizeSyntaxError("expected ')'")
        return e, i + 1
    if tok == "inf":
        return INF, i + 1
    if tok == "0":
        return ZERO, i + 1
    if tok == "s" and i + 1 < len(toks) and toks[i + 1] == "(":
        args, j = _parse_args(toks, i + 1)
        if len(args) != 1:
            raise SizeSyntaxError("s takes one argument")
        return SSucc(args[0]), j
    if tok == "max" and i + 1 < len(toks) and toks[i + 1] == "(":
        args, j = _parse_args(toks, i + 1)
        return smax(*args), j
    if tok.isdigit():
        return succ(ZERO, int(tok)), i + 1
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", tok):
        return SVar(tok), i + 1
    raise SizeSyntaxError(f"unexpected {tok!r} in size expression")
