"""Random generators and independent evaluators shared by the tests."""
import itertools
import math
import random

import numpy as np
from hypothesis import strategies as st

from sizelab.sizes import INF, ZERO, SInf, SLin, SMax, SSucc, SVar, SZero, lin, smax, succ

NAMES = ("x", "y", "z")


def random_size(rng: random.Random, depth: int = 4, names=NAMES, p_inf: float = 0.03):
    if depth == 0 or rng.random() < 0.3:
        r = rng.random()
        if r < p_inf:
            return INF
        if r < 0.25 or not names:
            return ZERO
        return SVar(rng.choice(names))
    kind = rng.choice(("s", "s", "max", "max", "lin"))
    if kind == "s":
        return succ(random_size(rng, depth - 1, names, p_inf), rng.randint(1, 2))
    if kind == "max":
        return smax(random_size(rng, depth - 1, names, p_inf), random_size(rng, depth - 1, names, p_inf))
    k = rng.randint(1, 2)
    terms = [(rng.randint(1, 3), random_size(rng, depth - 1, names, p_inf)) for _ in range(k)]
    return lin(terms, rng.randint(0, 2))


@st.composite
def sizes(draw, depth=4, names=NAMES, p_inf=0.03):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_size(random.Random(seed), depth, names, p_inf)


def grid(names=NAMES, hi=5):
    """All valuations of ``names`` into 0..hi, as one array per variable."""
    pts = np.array(list(itertools.product(range(hi + 1), repeat=len(names))), dtype=float)
    return {n: pts[:, i] for i, n in enumerate(names)}


def eval_np(e, env):
    """Vectorized evaluation, written independently of sizelab.sizes."""
    n = len(next(iter(env.values())))
    if isinstance(e, SVar):
        return env[e.name]
    if isinstance(e, SZero):
        return np.zeros(n)
    if isinstance(e, SInf):
        return np.full(n, math.inf)
    if isinstance(e, SSucc):
        return eval_np(e.arg, env) + 1
    if isinstance(e, SMax):
        return np.maximum(eval_np(e.left, env), eval_np(e.right, env))
    if isinstance(e, SLin):
        out = np.full(n, float(e.const))
        for c, t in e.terms:
            out = out + c * eval_np(t, env)
        return out
    raise TypeError(e)


def random_simple_type(rng: random.Random, sorts=("N", "O"), depth: int = 2):
    from sizelab.terms import Arrow, Base

    if depth == 0 or rng.random() < 0.4:
        return Base(rng.choice(sorts))
    return Arrow(random_simple_type(rng, sorts, depth - 1), random_simple_type(rng, sorts, depth - 1))


def random_atype(rng: random.Random, t, depth: int = 2, names=NAMES, p_inf: float = 0.05):
    """Annotate every leaf of the simple type ``t`` with a random size."""
    from sizelab.annotated import AArrow, ABase
    from sizelab.terms import Base

    if isinstance(t, Base):
        return ABase(t.name, random_size(rng, depth, names, p_inf))
    return AArrow(random_atype(rng, t.dom, depth, names, p_inf), random_atype(rng, t.cod, depth, names, p_inf))


# ---------------------------------------------------------------------------
# samples for the IDTS translation properties


def context_vars(problem):
    from sizelab.terms import Arrow, Base, Var

    out = []
    for sort in problem.sorts:
        out.append(Var(f"v{sort}", Base(sort)))
        out.append(Var(f"g{sort}", Arrow(Base("N"), Base(sort))))
    return tuple(out)


def applies_symbol_value(t, theta):
    """Does ``t`` apply a variable that ``theta`` maps to a symbol-headed
    (hence partial) application?"""
    from sizelab.terms import Abs, App, Sym, Var, open_abs, spine

    if isinstance(t, Abs):
        return applies_symbol_value(open_abs(t, set(theta))[1], theta)
    if isinstance(t, App):
        head, args = spine(t)
        if isinstance(head, Var) and head.name in theta and isinstance(spine(theta[head.name])[0], Sym):
            return True
        return any(applies_symbol_value(a, theta) for a in [head, *args])
    return False


def commutation_sample(problems, n, seed):
    """``n`` triples ``(problem, t, theta)`` with ``theta`` closing ``t``."""
    from sizelab.oracles import random_term
    from sizelab.terms import Base, free_vars

    rng = random.Random(seed)
    out = []
    while len(out) < n:
        p = problems[len(out) % len(problems)]
        ctx = context_vars(p)
        t = random_term(p.signature, Base(rng.choice(p.sorts)), 4, rng, ctx)
        theta = {x: random_term(p.signature, ty, 3, rng) for x, ty in free_vars(t).items()}
        out.append((p, t, theta))
    return out


def step_sample(problems, n, seed):
    """``n`` one-step reductions ``(problem, t, u, theta)`` of random
    closed terms; ``theta`` is the matching substitution of the step
    (``{x: v}`` for a beta step)."""
    from sizelab.oracles import random_term
    from sizelab.terms import Base, match, open_abs, reducts, subterm_at

    rng = random.Random(seed)
    out = []
    i = 0
    while len(out) < n:
        p = problems[i % len(problems)]
        i += 1
        t = random_term(p.signature, Base(rng.choice(p.sorts)), 5, rng)
        options = list(reducts(t, p.rules))
        if not options:
            continue
        u, pos, rid = rng.choice(options)
        sub = subterm_at(t, pos)
        if rid == "beta":
            x, body = open_abs(sub.fun)
            theta, rhs = {x.name: sub.arg}, body
        else:
            theta, rhs = match(p.rules[rid].lhs, sub), p.rules[rid].rhs
        out.append((p, t, u, rid, applies_symbol_value(rhs, theta)))
    return out
