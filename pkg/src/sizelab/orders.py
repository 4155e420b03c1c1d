"""Symbol precedences and measure orderings (lexicographic / multiset)."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .sizes import LEQ, Cmp, SizeExpr, SVar, apply_size_subst, compare_finite, normalize, show


class OrderError(Exception):
    pass


class PrecedenceCycle(OrderError):
    pass


class IncompatibleMeasure(OrderError):
    pass


class MeasureCmp(str, Enum):
    LT = "LT"
    GE_OR_UNKNOWN = "GE_OR_UNKNOWN"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class MeasureSpec:
    """``zeta_f``: a lex or multiset tuple of size expressions over the
    symbol's measured size variables ``alphas``."""

    kind: str
    alphas: tuple[str, ...]
    components: tuple[SizeExpr, ...]

    def __post_init__(self):
        if self.kind not in ("lex", "mul"):
            raise OrderError(f"unknown measure kind {self.kind!r}")

    def apply(self, sizes: Sequence[SizeExpr]) -> tuple[SizeExpr, ...]:
        if len(sizes) != len(self.alphas):
            raise OrderError(f"measure expects {len(self.alphas)} sizes, got {len(sizes)}")
        phi = dict(zip(self.alphas, sizes))
        return tuple(apply_size_subst(c, phi) for c in self.components)

    def __str__(self) -> str:
        return f"{self.kind}(" + ",".join(show(c) for c in self.components) + ")"


def identity_measure(alphas: Sequence[str]) -> MeasureSpec:
    return MeasureSpec("lex", tuple(alphas), tuple(SVar(a) for a in alphas))


def compare_tuples(zb: Sequence[SizeExpr], za: Sequence[SizeExpr], kind: str) -> MeasureCmp:
    """Symbolic strict decrease ``zb < za`` valid under every valuation."""
    if len(zb) != len(za):
        return MeasureCmp.GE_OR_UNKNOWN
    nb = [normalize(x) for x in zb]
    na = [normalize(x) for x in za]
    if kind == "lex":
        for i in range(len(nb)):
            c = compare_finite(nb[i], na[i])
            if c == Cmp.LT:
                return MeasureCmp.LT
            if c not in LEQ:
                break
        return MeasureCmp.GE_OR_UNKNOWN
    # multiset: cancel syntactically equal pairs, then every remaining
    # element of zb must lie strictly below some remaining element of za
    rb = list(nb)
    ra = list(na)
    for x in list(rb):
        for j, y in enumerate(ra):
            if not x.is_inf and x == y:
                rb.remove(x)
                del ra[j]
                break
    if not ra:
        return MeasureCmp.GE_OR_UNKNOWN
    if all(any(compare_finite(x, y) == Cmp.LT for y in ra) for x in rb):
        return MeasureCmp.LT
    return MeasureCmp.GE_OR_UNKNOWN


def measure_compare(b: Sequence[SizeExpr], a: Sequence[SizeExpr], spec: MeasureSpec,
                    spec_a: MeasureSpec | None = None) -> MeasureCmp:
    """Compare ``zeta(b)`` with ``zeta(a)``; ``spec_a`` applies to ``a``
    when caller and callee are distinct but equivalent symbols."""
    spec_a = spec if spec_a is None else spec_a
    return compare_tuples(spec.apply(b), spec_a.apply(a), spec.kind)


def ground_lt(b: Sequence[float], a: Sequence[float], kind: str) -> bool:
    """Strict lex / multiset comparison of natural-number tuples."""
    if kind == "lex":
        return tuple(b) < tuple(a)
    cb, ca = Counter(b), Counter(a)
    common = cb & ca
    rb, ra = cb - common, ca - common
    if not ra:
        return False
    top = max(ra)
    return all(x < top for x in rb.elements())


# ---------------------------------------------------------------------------
# precedence


@dataclass
class Precedence:
    """Quasi-order on defined symbols; constructors sit below every defined
    symbol and are pairwise incomparable."""

    defined: frozenset[str]
    constructors: frozenset[str]
    classes: dict[str, int] = field(default_factory=dict)
    greater: dict[int, frozenset[int]] = field(default_factory=dict)

    def equiv(self, f: str, g: str) -> bool:
        if f == g:
            return True
        return f in self.classes and g in self.classes and self.classes[f] == self.classes[g]

    def lt(self, g: str, f: str) -> bool:
        """``g <_F f``."""
        if f in self.constructors:
            return False
        if g in self.constructors:
            return f in self.defined
        if g not in self.classes or f not in self.classes:
            return False
        return self.classes[g] in self.greater[self.classes[f]]

    def members(self, f: str) -> list[str]:
        c = self.classes[f]
        return sorted(g for g, k in self.classes.items() if k == c)


def build_precedence(defined: Iterable[str], constructors: Iterable[str],
                     decls: Iterable[tuple[str, str, str]]) -> Precedence:
    """``decls`` holds ``(f, '>', g)`` or ``(f, '~', g)`` triples."""
    defined = frozenset(defined)
    constructors = frozenset(constructors)
    parent = {f: f for f in defined}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    decls = list(decls)
    for f, op, g in decls:
        for s in (f, g):
            if s not in defined:
                raise OrderError(f"precedence mentions {s}, which is not a defined symbol")
        if op == "~":
            rf, rg = find(f), find(g)
            if rf != rg:
                parent[max(rf, rg)] = min(rf, rg)
        elif op != ">":
            raise OrderError(f"unknown precedence operator {op!r}")
    reps = sorted({find(f) for f in defined})
    cls = {f: reps.index(find(f)) for f in defined}
    edges: dict[int, set[int]] = {i: set() for i in range(len(reps))}
    for f, op, g in decls:
        if op == ">":
            edges[cls[f]].add(cls[g])
    closure: dict[int, frozenset[int]] = {}
    for i in edges:
        seen: set[int] = set()
        stack = list(edges[i])
        while stack:
            j = stack.pop()
            if j not in seen:
                seen.add(j)
                stack.extend(edges[j])
        if i in seen:
            members = sorted(f for f, k in cls.items() if k == i)
            raise PrecedenceCycle(f"strict precedence cycle through {', '.join(members)}")
        closure[i] = frozenset(seen)
    return Precedence(defined, constructors, cls, closure)


def check_measures_compatible(measures: Mapping[str, MeasureSpec], prec: Precedence) -> None:
    for f, mf in measures.items():
        for g, mg in measures.items():
            if f < g and prec.equiv(f, g):
                if mf.kind != mg.kind or len(mf.components) != len(mg.components):
                    raise IncompatibleMeasure(
                        f"equivalent symbols {f} and {g} need measures of the same "
                        f"kind and length ({mf} vs {mg})"
                    )
