import random

import pytest

from sizelab.annotated import AArrow, ABase
from sizelab.inference import (
    Clash,
    FrozenViolation,
    InferenceError,
    NotApplicativeLhs,
    OccursCheck,
    RecursiveCallNotDecreasing,
    SymbolAbovePrecedence,
    UnboundVariable,
    VariableUsedTwiceInMeasuredArgs,
    build_rule_context,
    cc_infer,
    infer,
    lhs_sigma,
    resolve_type,
    unify,
)
from sizelab.oracles import ground_size_oracle, random_term
from sizelab.sizes import INF, ZERO, SVar, eval_size, smax, succ
from sizelab.terms import App, Base, Rule, Signature, Sym, Var, app, arrow, normalize_term, substitute

N, O = Base("N"), Base("O")
x, y, f, n = SVar("x"), SVar("y"), SVar("f"), SVar("n")
al, be, ga = SVar("al"), SVar("be"), SVar("ga")
s, zero, minus, div = Sym("s"), Sym("0"), Sym("-"), Sym("/")
vx, vy = Var("x", N), Var("y", N)


def test_unify_examples():
    assert unify(ABase("N", al), ABase("N", x), frozen={"x"}) == {"al": x}
    t = AArrow(ABase("O", al), ABase("O", al))
    u = AArrow(ABase("O", succ(be)), ABase("O", ga))
    phi = unify(t, u)
    assert phi == {"al": succ(be), "ga": succ(be)}
    assert resolve_type(t, phi) == resolve_type(u, phi)
    with pytest.raises(Clash):
        unify(ABase("N", ZERO), ABase("N", succ(al)))


def test_unify_errors():
    with pytest.raises(OccursCheck):
        unify(ABase("N", al), ABase("N", succ(al)))
    with pytest.raises(FrozenViolation):
        unify(ABase("N", x), ABase("N", succ(al)), frozen={"x"})
    with pytest.raises(Clash):
        unify(ABase("N", al), AArrow(ABase("N", al), ABase("N", al)))


def random_size_term(rng, depth, names=("al", "be", "ga")):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice([ZERO] + [SVar(v) for v in names])
    if rng.random() < 0.6:
        return succ(random_size_term(rng, depth - 1, names))
    return smax(random_size_term(rng, depth - 1, names), random_size_term(rng, depth - 1, names))


def syntactic_mgu(pairs):
    """Textbook Robinson unification used as an oracle."""
    from sizelab.inference import _head

    sub = {}

    def walk(e):
        while isinstance(e, SVar) and e.name in sub:
            e = sub[e.name]
        return e

    def occurs(v, e):
        e = walk(e)
        if isinstance(e, SVar):
            return e.name == v
        return any(occurs(v, c) for c in _head(e)[1])

    todo = list(pairs)
    while todo:
        a, b = map(walk, todo.pop())
        if a == b:
            continue
        if isinstance(a, SVar) or isinstance(b, SVar):
            v, e = (a, b) if isinstance(a, SVar) else (b, a)
            if occurs(v.name, e):
                return None
            sub[v.name] = e
            continue
        (ha, aa), (hb, ab) = _head(a), _head(b)
        if ha != hb:
            return None
        todo.extend(zip(aa, ab))
    return sub


def test_unify_agrees_with_robinson():
    rng = random.Random(3)
    agree = 0
    for _ in range(500):
        a, b = random_size_term(rng, 3), random_size_term(rng, 3)
        ref = syntactic_mgu([(a, b)])
        try:
            phi = unify(ABase("N", a), ABase("N", b))
        except InferenceError:
            assert ref is None
            continue
        assert ref is not None
        lhs = resolve_type(ABase("N", a), phi)
        assert lhs == resolve_type(ABase("N", b), phi)
        agree += 1
    assert agree > 50


def test_infer_examples(div, brouwer):
    assert infer({"x": ABase("N", x)}, App(s, vx), div.asig) == ABase("N", succ(x))
    gamma = {"x": ABase("N", x), "y": ABase("N", INF)}
    assert infer(gamma, app(minus, vx, vy), div.asig) == ABase("N", x)
    gamma = {"f": AArrow(ABase("N", INF), ABase("O", f)), "n": ABase("N", INF)}
    vf, vn = Var("f", arrow(N, O)), Var("n", N)
    assert infer(gamma, App(vf, vn), brouwer.asig) == ABase("O", f)
    with pytest.raises(UnboundVariable):
        infer({}, App(s, vx), div.asig)


def test_build_rule_context_examples(div, brouwer):
    ctx = build_rule_context(div.rules[2], div.asig)
    assert ctx.gamma == {"x": ABase("N", x), "y": ABase("N", INF)}
    assert ctx.a == (succ(x),)
    ctx = build_rule_context(div.rules[4], div.asig)
    assert ctx.gamma == {"x": ABase("N", x), "y": ABase("N", INF)}
    assert ctx.a == (succ(x),)
    ctx = build_rule_context(brouwer.rules[2], brouwer.asig)
    assert ctx.gamma["f"] == AArrow(ABase("N", INF), ABase("O", f))
    assert ctx.a == (succ(f),)
    assert ctx.frozen == {"f"}


def test_build_rule_context_rejections(parse):
    p = parse("SORTS N\nCONS\n 0 : N\n s : N -> N\nFUNS\n f : N{a} -> N{b} -> N\n"
              "RULES\n f x (s x) -> 0\n")
    with pytest.raises(VariableUsedTwiceInMeasuredArgs):
        build_rule_context(p.rules[0], p.asig)
    bad = Rule(App(Var("g", arrow(N, N)), vx), vx, N)
    with pytest.raises(NotApplicativeLhs):
        build_rule_context(bad, p.asig)


def test_cc_infer_examples(div, brouwer, parse):
    ctx = build_rule_context(div.rules[4], div.asig)
    ty, calls = cc_infer(ctx, div.rules[4].rhs, div.asig, div.precedence, div.all_measures)
    assert ty == ABase("N", succ(x))
    assert [(c.b, c.a, str(c.result)) for c in calls] == [((x,), (succ(x),), "LT")]

    ctx = build_rule_context(brouwer.rules[2], brouwer.asig)
    ty, calls = cc_infer(ctx, brouwer.rules[2].rhs, brouwer.asig, brouwer.precedence, brouwer.all_measures)
    assert ty == ABase("N", INF)
    assert [(c.b, c.a) for c in calls] == [((f,), (succ(f),))]

    p = parse("SORTS N\nCONS\n 0 : N\n s : N -> N\nFUNS\n f : N{a} -> N{a}\nRULES\n f x -> f x\n")
    ctx = build_rule_context(p.rules[0], p.asig)
    with pytest.raises(RecursiveCallNotDecreasing):
        cc_infer(ctx, p.rules[0].rhs, p.asig, p.precedence, p.all_measures)


def test_cc_infer_rejects_symbols_above(parse):
    p = parse("SORTS N\nCONS\n 0 : N\n s : N -> N\nFUNS\n f : N{a} -> N{a}\n g : N{a} -> N{a}\n"
              "PREC\n g > f\nRULES\n f x -> g x\n")
    ctx = build_rule_context(p.rules[0], p.asig)
    with pytest.raises(SymbolAbovePrecedence):
        cc_infer(ctx, p.rules[0].rhs, p.asig, p.precedence, p.all_measures)


def test_cc_infer_implies_infer(div, brouwer, plus_f, lists):
    for p in (div, brouwer, lists):
        for r in p.rules:
            ctx = build_rule_context(r, p.asig)
            ty, _ = cc_infer(ctx, r.rhs, p.asig, p.precedence, p.all_measures)
            plain = infer(ctx.gamma, r.rhs, p.asig)
            assert plain == ty


def nat(k):
    t = zero
    for _ in range(k):
        t = App(s, t)
    return t


def test_inferred_sizes_bound_values(div):
    """Sizes inferred for first-order terms over x, y bound the height of
    the normal form of every ground instance."""
    rng = random.Random(1)
    gamma = {"x": ABase("N", x), "y": ABase("N", y)}
    checked = 0
    for _ in range(300):
        t = random_term(div.signature, N, 4, rng, ctx=(vx, vy))
        try:
            ty = infer(gamma, t, div.asig)
        except InferenceError:
            continue
        for i in range(4):
            for j in range(4):
                v, _ = normalize_term(substitute(t, {"x": nat(i), "y": nat(j)}), div.rules)
                assert ground_size_oracle(v, div.vsig) <= eval_size(ty.size, {"x": i, "y": j})
        checked += 1
    assert checked > 100


def test_lhs_sigma_is_height_on_ground_patterns(lists):
    rng = random.Random(6)
    cons = Signature(lists.sorts, lists.constructors, {})
    for _ in range(200):
        sort = rng.choice(("N", "L"))
        t = random_term(cons, Base(sort), 6, rng)
        e = lhs_sigma(t, sort, {}, lists.asig, {})
        assert eval_size(e, {}) == ground_size_oracle(t, lists.vsig)
