"""Desk-scale oracles: ground sizes, ground-term enumeration, exhaustive
and randomized rewriting, a multiset path ordering over labelled symbols,
and size fuzzing."""
from __future__ import annotations

import itertools
import os
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .labelling import NotComputable, label_ground, labelled_lt, model_value
from .problem import RewriteProblem
from .terms import (
    Abs,
    Arrow,
    Base,
    Signature,
    SimpleType,
    Sym,
    Term,
    ValidatedSignature,
    Var,
    app,
    free_vars,
    lam,
    reducts,
    spine,
    split_arrow,
)


class OracleError(Exception):
    pass


class NonGround(OracleError):
    pass


class NonConstructor(OracleError):
    pass


class EnumerationLimit(OracleError):
    pass


def ground_size_oracle(t: Term, vsig: ValidatedSignature) -> int:
    """Height of a ground constructor term, counting recursive positions only."""
    if free_vars(t):
        raise NonGround(str(t))
    return _height(t, vsig)


def _height(t: Term, vsig: ValidatedSignature) -> int:
    head, args = spine(t)
    if not isinstance(head, Sym) or not vsig.signature.is_constructor(head.name):
        raise NonConstructor(str(t))
    ind = vsig.ind[head.name]
    if not ind:
        for a in args:
            _height(a, vsig)
        return 0
    for a in args:
        _height(a, vsig)
    return 1 + max(_height(args[i - 1], vsig) for i in ind)


# ---------------------------------------------------------------------------
# enumeration


def _symbols(sig: Signature) -> list[tuple[str, SimpleType]]:
    return sorted(list(sig.constructors.items()) + list(sig.defined.items()))


def _remaining(t: SimpleType, k: int) -> SimpleType:
    for _ in range(k):
        assert isinstance(t, Arrow)
        t = t.cod
    return t


class TermEnumerator:
    """All closed, beta-normal terms of a type up to a height.

    Height counts symbols, variables and binders along the deepest branch;
    a partial application ``f t1..tk`` has the height of ``f t1..tk``.
    """

    def __init__(self, sig: Signature, limit: int = 200_000):
        self.sig = sig
        self.limit = limit
        self._memo: dict = {}

    def terms(self, ty: SimpleType, h: int, ctx: tuple[Var, ...] = ()) -> list[Term]:
        key = (ty, h, ctx)
        if key in self._memo:
            return self._memo[key]
        out: list[Term] = []
        if h >= 1:
            heads = [(Sym(f), t) for f, t in _symbols(self.sig)] + [(x, x.type) for x in ctx]
            for head, ht in heads:
                args_t, _ = split_arrow(ht)
                for k in range(len(args_t) + 1):
                    if _remaining(ht, k) != ty:
                        continue
                    if k == 0:
                        out.append(head)
                        continue
                    pools = [self.terms(a, h - 1, ctx) for a in args_t[:k]]
                    for combo in itertools.product(*pools):
                        out.append(app(head, *combo))
                        if len(out) > self.limit:
                            raise EnumerationLimit(f"more than {self.limit} terms of type {ty}")
            if isinstance(ty, Arrow):
                x = Var(f"x{len(ctx)}", ty.dom)
                for body in self.terms(ty.cod, h - 1, ctx + (x,)):
                    out.append(lam(x, body))
        self._memo[key] = out
        return out


def ground_terms(problem: RewriteProblem, sort: str, height: int, limit: int = 200_000) -> list[Term]:
    return TermEnumerator(problem.signature, limit).terms(Base(sort), height)


def random_term(sig: Signature, ty: SimpleType, depth: int, rng: random.Random,
                ctx: tuple[Var, ...] = ()) -> Term:
    """A random closed term of height at most ``depth`` (at least 1)."""
    candidates = []
    for head, ht in [(Sym(f), t) for f, t in _symbols(sig)] + [(x, x.type) for x in ctx]:
        args_t, _ = split_arrow(ht)
        for k in range(len(args_t) + 1):
            if _remaining(ht, k) == ty and (k == 0 or depth > 1):
                candidates.append((head, args_t[:k]))
    if isinstance(ty, Arrow) and depth > 1:
        candidates.append(("lam", None))
    if not candidates:
        raise OracleError(f"no closed term of type {ty} within height {depth}")
    for _ in range(50):
        head, args_t = rng.choice(candidates)
        try:
            if head == "lam":
                x = Var(f"x{len(ctx)}", ty.dom)
                return lam(x, random_term(sig, ty.cod, depth - 1, rng, ctx + (x,)))
            d = rng.randint(1, depth - 1) if args_t else 0
            return app(head, *(random_term(sig, a, max(d, 1), rng, ctx) for a in args_t))
        except OracleError:
            continue
    raise OracleError(f"could not build a term of type {ty}")


# ---------------------------------------------------------------------------
# exhaustive and randomized rewriting


@dataclass
class Exploration:
    starts: int = 0
    nodes: int = 0
    edges: int = 0
    longest: int = 0
    halted: bool = True
    cycle: Term | None = None
    capped: Term | None = None


def explore(starts: Iterable[Term], rules, cap: int = 100_000,
            on_edge: Callable[[Term, Term, object], None] | None = None) -> Exploration:
    """Depth-first exploration of every reduction from every start term.

    Each start term must reach at most ``cap`` new terms, the reduction graph
    must be acyclic, and its longest derivation is recorded.
    """
    res = Exploration()
    longest: dict[Term, int] = {}
    succ: dict[Term, list[Term]] = {}

    def successors(t: Term):
        out = []
        for u, _, rid in reducts(t, rules):
            out.append(u)
            res.edges += 1
            if on_edge is not None:
                on_edge(t, u, rid)
        succ[t] = out
        return iter(out)

    for start in starts:
        res.starts += 1
        if start in longest:
            continue
        fresh = 0
        on_stack = {start}
        stack = [(start, successors(start))]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                on_stack.discard(node)
                longest[node] = 1 + max((longest[u] for u in succ.pop(node)), default=-1)
                continue
            if nxt in on_stack:
                res.halted = False
                res.cycle = nxt
                return res
            if nxt in longest:
                continue
            fresh += 1
            if fresh > cap:
                res.halted = False
                res.capped = start
                return res
            on_stack.add(nxt)
            stack.append((nxt, successors(nxt)))
        res.longest = max(res.longest, longest[start])
    res.nodes = len(longest)
    return res


def random_derivation(t: Term, rules, rng: random.Random, max_steps: int = 100_000) -> tuple[int, Term]:
    """Follow uniformly chosen redexes until a normal form; returns the
    number of steps and the normal form."""
    for steps in range(max_steps + 1):
        options = list(reducts(t, rules))
        if not options:
            return steps, t
        t = rng.choice(options)[0]
    raise OracleError(f"no normal form within {max_steps} steps")


# ---------------------------------------------------------------------------
# multiset path ordering over labelled symbols


def _same(a: Sym, b: Sym) -> bool:
    return a.name == b.name and a.label == b.label


def labelled_cmp(problem: RewriteProblem, f: Sym, g: Sym) -> str:
    """``gt``, ``lt``, ``eq`` or ``inc`` in the labelled precedence."""
    if _same(f, g):
        return "eq"
    if labelled_lt(problem, g, f)[0]:
        return "gt"
    if labelled_lt(problem, f, g)[0]:
        return "lt"
    if (f.name in problem.defined and g.name in problem.defined
            and problem.precedence.equiv(f.name, g.name) and f.label == g.label):
        return "eq"
    return "inc"


def mpo_gt(problem: RewriteProblem, s: Term, t: Term) -> bool:
    """Multiset path ordering on first-order labelled terms."""
    if isinstance(s, Var):
        return False
    f, ss = spine(s)
    if any(si == t or mpo_gt(problem, si, t) for si in ss):
        return True
    if isinstance(t, Var):
        return False
    g, ts = spine(t)
    c = labelled_cmp(problem, f, g)
    if c == "gt":
        return all(mpo_gt(problem, s, tj) for tj in ts)
    if c == "eq":
        return multiset_gt(ss, ts, lambda a, b: mpo_gt(problem, a, b))
    return False


def multiset_gt(m: Sequence, n: Sequence, gt: Callable) -> bool:
    m, n = list(m), list(n)
    for x in list(m):
        if x in n:
            n.remove(x)
            m.remove(x)
    return bool(m) and all(any(gt(x, y) for x in m) for y in n)


def labelled_symbols(t: Term) -> list[Sym]:
    head, args = spine(t)
    out = [head] if isinstance(head, Sym) else []
    for a in args:
        out.extend(labelled_symbols(a))
    return out


@dataclass
class LabelledDescent:
    edges: int = 0
    mpo_failures: list[tuple[str, str]] = field(default_factory=list)
    multiset_decreases: int = 0


def check_labelled_descent(problem: RewriteProblem, starts: Iterable[Term],
                           cap: int = 100_000) -> tuple[Exploration, LabelledDescent]:
    """Explore all reductions and check, on every step, that the ground
    labelled terms decrease in the multiset path ordering."""
    out = LabelledDescent()
    lab: dict[Term, Term] = {}

    def labelled(t: Term) -> Term:
        if t not in lab:
            lab[t] = label_ground(problem, t)
        return lab[t]

    def on_edge(t: Term, u: Term, rid) -> None:
        out.edges += 1
        lt, lu = labelled(t), labelled(u)
        if not mpo_gt(problem, lt, lu):
            out.mpo_failures.append((str(lt), str(lu)))
        gt = lambda a, b: labelled_cmp(problem, a, b) == "gt"
        if multiset_gt(labelled_symbols(lt), labelled_symbols(lu), gt):
            out.multiset_decreases += 1

    res = explore(starts, problem.rules, cap, on_edge)
    return res, out


@dataclass
class CrossCheck:
    problem: str
    terms: int = 0
    runs: int = 0
    strategies: int = 0
    steps: int = 0
    longest: int = 0
    halted: bool = True
    labelled_steps: int = 0
    mpo_failures: list[tuple[str, str]] = field(default_factory=list)
    multiset_decreases: int = 0


def crosscheck(problem: RewriteProblem, height: int = 4, strategies: int = 200,
               cap: int = 100_000, sample: int | None = None, seed: int = 0,
               labelled: bool | None = None) -> CrossCheck:
    """Normalize every ground term of height at most ``height`` under
    seeded random strategies, term ``i`` using strategy ``i mod strategies``.

    With ``sample`` set, at most that many terms per sort are drawn (all
    shorter terms first).  With ``labelled`` (default: first-order systems),
    every step is also checked to decrease the ground-labelled term in the
    multiset path ordering over the labelled precedence.
    """
    if labelled is None:
        labelled = is_first_order(problem)
    out = CrossCheck(problem.name)
    starts: list[Term] = []
    en = TermEnumerator(problem.signature)
    for sort in problem.sorts:
        terms = en.terms(Base(sort), height)
        if sample is not None and len(terms) > sample:
            lower = set(en.terms(Base(sort), height - 1))
            keep = [t for t in terms if t in lower][:sample]
            rest = [t for t in terms if t not in lower]
            keep += random.Random(f"{seed}:{sort}").sample(rest, sample - len(keep))
            terms = keep
        starts.extend(terms)
    out.terms = len(starts)
    rngs = [random.Random(f"{seed}:strategy:{j}") for j in range(strategies)]
    gt = lambda a, b: labelled_cmp(problem, a, b) == "gt"
    for i, t in enumerate(starts):
        rng = rngs[i % strategies]
        out.runs += 1
        lt = label_ground(problem, t) if labelled else None
        n = 0
        while True:
            options = list(reducts(t, problem.rules))
            if not options:
                break
            n += 1
            if n > cap:
                out.halted = False
                break
            u = rng.choice(options)[0]
            if labelled:
                lu = label_ground(problem, u)
                out.labelled_steps += 1
                if not mpo_gt(problem, lt, lu):
                    out.mpo_failures.append((str(lt), str(lu)))
                if multiset_gt(labelled_symbols(lt), labelled_symbols(lu), gt):
                    out.multiset_decreases += 1
                lt = lu
            t = u
        out.steps += n
        out.longest = max(out.longest, n)
    out.strategies = min(strategies, out.runs)
    return out


# ---------------------------------------------------------------------------
# fuzzing


FUZZ_BUDGET_ENV = "STRS_FUZZ_BUDGET"


def fuzz_budget(n: int) -> int:
    cap = os.environ.get(FUZZ_BUDGET_ENV)
    return min(n, int(cap)) if cap else n


def term_size(problem: RewriteProblem, t: Term) -> int | None:
    try:
        return model_value(problem, t)
    except NotComputable:
        return None


@dataclass
class FuzzRow:
    run: int
    step: int
    rule: str
    size_before: int | None
    size_after: int | None

    @property
    def increase(self) -> bool:
        return (self.size_before is not None and self.size_after is not None
                and self.size_after > self.size_before)


@dataclass
class FuzzResult:
    runs: int
    depth: int
    seed: int
    rows: list[FuzzRow] = field(default_factory=list)
    normal_forms: int = 0

    @property
    def increases(self) -> list[FuzzRow]:
        return [r for r in self.rows if r.increase]

    @property
    def skipped(self) -> int:
        return sum(1 for r in self.rows if r.size_before is None or r.size_after is None)


def fuzz(problem: RewriteProblem, n: int, depth: int, seed: int = 0,
         max_steps: int = 200) -> FuzzResult:
    """Random ground terms, random reduction steps, and the model size of
    each term along the way."""
    rng = random.Random(seed)
    n = fuzz_budget(n)
    result = FuzzResult(n, depth, seed)
    sorts = [s for s in problem.sorts
             if any(split_arrow(t)[1].name == s for t in problem.constructors.values())]
    for run in range(n):
        sort = rng.choice(sorts)
        t = random_term(problem.signature, Base(sort), depth, rng)
        size = term_size(problem, t)
        for step in range(max_steps):
            options = list(reducts(t, problem.rules))
            if not options:
                result.normal_forms += 1
                break
            u, _, rid = rng.choice(options)
            nsize = term_size(problem, u)
            result.rows.append(FuzzRow(run, step, str(rid), size, nsize))
            t, size = u, nsize
    return result


def is_first_order(problem: RewriteProblem) -> bool:
    types = list(problem.signature.constructors.values()) + list(problem.signature.defined.values())
    return all(isinstance(a, Base) for t in types for a in split_arrow(t)[0])


def has_abstraction(t: Term) -> bool:
    if isinstance(t, Abs):
        return True
    head, args = spine(t)
    return any(has_abstraction(a) for a in args) or (head is not t and has_abstraction(head))
