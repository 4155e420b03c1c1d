"""Size-annotated types, subtyping and annotated signatures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

from .sizes import (
    INF,
    LEQ,
    SizeExpr,
    SVar,
    apply_size_subst,
    compare,
    contains_inf,
    show,
    size_positions,
    size_vars,
    smax,
    succ,
    ZERO,
)
from .terms import Arrow, Base, SimpleType, ValidatedSignature, split_arrow


class AnnotationError(Exception):
    pass


class ErasureMismatch(AnnotationError):
    pass


class InvalidAnnotation(AnnotationError):
    pass


@dataclass(frozen=True, slots=True)
class ABase:
    sort: str
    size: SizeExpr

    def __str__(self) -> str:
        return f"{self.sort}{{{show(self.size)}}}"


@dataclass(frozen=True, slots=True)
class AArrow:
    dom: "AType"
    cod: "AType"

    def __str__(self) -> str:
        left = f"({self.dom})" if isinstance(self.dom, AArrow) else str(self.dom)
        return f"{left} -> {self.cod}"


AType = ABase | AArrow


def aarrow(*types: AType) -> AType:
    out = types[-1]
    for t in reversed(types[:-1]):
        out = AArrow(t, out)
    return out


def split_aarrow(t: AType) -> tuple[list[AType], ABase]:
    args = []
    while isinstance(t, AArrow):
        args.append(t.dom)
        t = t.cod
    return args, t


def erase(t: AType) -> SimpleType:
    if isinstance(t, ABase):
        return Base(t.sort)
    return Arrow(erase(t.dom), erase(t.cod))


def infty(t: SimpleType) -> AType:
    """``T^inf``: every base type annotated with infinity."""
    if isinstance(t, Base):
        return ABase(t.name, INF)
    return AArrow(infty(t.dom), infty(t.cod))


def annot(sort: str, alpha: SizeExpr, t: SimpleType, vsig: ValidatedSignature) -> AType:
    """Annotate the base types of ``t`` equivalent to ``sort`` with ``alpha``
    and every other base type with infinity."""
    if isinstance(t, Base):
        return ABase(t.name, alpha if vsig.equivalent(t.name, sort) else INF)
    return AArrow(annot(sort, alpha, t.dom, vsig), annot(sort, alpha, t.cod, vsig))


def constructor_size(args: list[SizeExpr], ind: frozenset[int]) -> SizeExpr:
    """``s(max(args[i] for i in ind))``, or ``0`` for a non-recursive one."""
    if not ind:
        return ZERO
    return succ(smax(*(args[i - 1] for i in sorted(ind))))


def annotate_constructor(c: str, vsig: ValidatedSignature, prefix: str = "a") -> AType:
    args, res = split_arrow(vsig.signature.constructors[c])
    alphas = [SVar(f"{prefix}{i}") for i in range(1, len(args) + 1)]
    parts = [annot(res.name, a, t, vsig) for a, t in zip(alphas, args)]
    return aarrow(*parts, ABase(res.name, constructor_size(alphas, vsig.ind[c])))


def atype_vars(t: AType) -> set[str]:
    if isinstance(t, ABase):
        return size_vars(t.size)
    return atype_vars(t.dom) | atype_vars(t.cod)


def atype_has_inf(t: AType) -> bool:
    if isinstance(t, ABase):
        return contains_inf(t.size)
    return atype_has_inf(t.dom) or atype_has_inf(t.cod)


def apply_atype_subst(t: AType, phi: Mapping[str, SizeExpr]) -> AType:
    if not phi:
        return t
    if isinstance(t, ABase):
        return ABase(t.sort, apply_size_subst(t.size, phi))
    return AArrow(apply_atype_subst(t.dom, phi), apply_atype_subst(t.cod, phi))


def leaves(t: AType, path: tuple = (), polarity: int = 1) -> Iterator[tuple[tuple, int, ABase]]:
    if isinstance(t, ABase):
        yield path, polarity, t
    else:
        yield from leaves(t.dom, path + (1,), -polarity)
        yield from leaves(t.cod, path + (2,), polarity)


def subtype(t: AType, u: AType) -> bool:
    """Syntax-directed subtyping: base leaves by size comparison,
    contravariant in arrow domains."""
    if erase(t) != erase(u):
        raise ErasureMismatch(f"{t} and {u} have different simple types")
    return _sub(t, u)


def _sub(t: AType, u: AType) -> bool:
    if isinstance(t, ABase):
        return compare(t.size, u.size) in LEQ
    return _sub(u.dom, t.dom) and _sub(t.cod, u.cod)


def positions(t: AType) -> tuple[set, set, dict[str, set[tuple[tuple, int]]]]:
    """Positive and negative positions of an annotated type.

    A base type ``B^a`` contributes its own position plus ``0·p`` for every
    position ``p`` inside ``a``.  The third component maps each size
    variable to its ``(position, polarity)`` occurrences.
    """
    pos: set = set()
    neg: set = set()
    occ: dict[str, set] = {}
    for path, pol, leaf in leaves(t):
        (pos if pol > 0 else neg).add(path)
        spos, sneg, socc = size_positions(leaf.size, pol)
        for p in spos:
            pos.add(path + (0,) + p)
        for p in sneg:
            neg.add(path + (0,) + p)
        for v, ps in socc.items():
            for p in ps:
                full = path + (0,) + p
                occ.setdefault(v, set()).add((full, 1 if full in pos else -1))
    return pos, neg, occ


# ---------------------------------------------------------------------------
# annotated signatures


@dataclass(frozen=True)
class FunDecl:
    """Annotated type of a defined symbol.

    ``measured`` lists ``(argument index, size variable)`` pairs (1-based);
    all other arguments are parameters annotated with infinity.
    """

    name: str
    type: AType
    measured: tuple[tuple[int, str], ...]
    interp: SizeExpr

    @property
    def arity(self) -> int:
        return len(split_aarrow(self.type)[0])

    @property
    def alphas(self) -> tuple[str, ...]:
        return tuple(a for _, a in self.measured)

    @property
    def measured_indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.measured)

    @property
    def result_sort(self) -> str:
        return split_aarrow(self.type)[1].sort

    @property
    def is_infinite(self) -> bool:
        return contains_inf(self.interp)

    def interp_at(self, sizes: Mapping[str, SizeExpr] | tuple) -> SizeExpr:
        if not isinstance(sizes, Mapping):
            sizes = dict(zip(self.alphas, sizes))
        return apply_size_subst(self.interp, sizes)


def make_fundecl(name: str, t: AType) -> FunDecl:
    """Classify the argument positions of a user-written annotated type."""
    args, res = split_aarrow(t)
    measured = []
    seen: set[str] = set()
    for i, a in enumerate(args, start=1):
        if isinstance(a, ABase) and isinstance(a.size, SVar):
            if a.size.name in seen:
                raise InvalidAnnotation(f"{name}: size variable {a.size.name} used twice")
            seen.add(a.size.name)
            measured.append((i, a.size.name))
            continue
        bad = [leaf for _, _, leaf in leaves(a) if not contains_inf(leaf.size)]
        if bad:
            raise InvalidAnnotation(
                f"{name}: argument {i} must be a base type annotated by a size "
                f"variable, or unannotated"
            )
    extra = size_vars(res.size) - seen
    if extra:
        raise InvalidAnnotation(f"{name}: result size uses unknown variable(s) {sorted(extra)}")
    return FunDecl(name, t, tuple(measured), res.size)


@dataclass
class AnnotatedSignature:
    vsig: ValidatedSignature
    constructors: dict[str, AType]
    defined: dict[str, FunDecl]

    def type_of(self, name: str) -> AType:
        if name in self.constructors:
            return self.constructors[name]
        return self.defined[name].type


def annotate_signature(vsig: ValidatedSignature, defined: Mapping[str, AType]) -> AnnotatedSignature:
    cons = {c: annotate_constructor(c, vsig) for c in vsig.signature.constructors}
    decls = {}
    for f, t in defined.items():
        if erase(t) != vsig.signature.defined[f]:
            raise InvalidAnnotation(f"{f}: annotated type {t} does not erase to {vsig.signature.defined[f]}")
        decls[f] = make_fundecl(f, t)
    return AnnotatedSignature(vsig, cons, decls)


def show_atype(t: AType) -> str:
    """Render in the problem-file syntax (infinite leaves unannotated)."""
    if isinstance(t, ABase):
        return t.sort if contains_inf(t.size) else f"{t.sort}{{{show(t.size)}}}"
    left = show_atype(t.dom)
    if isinstance(t.dom, AArrow):
        left = f"({left})"
    return f"{left} -> {show_atype(t.cod)}"

