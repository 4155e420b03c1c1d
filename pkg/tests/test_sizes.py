import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sizelab.sizes import (
    INF,
    LEQ,
    SIZE_SYMBOLS,
    ZERO,
    Cmp,
    NonMonotoneAnnotation,
    SFun,
    SizeSymbol,
    SizeSyntaxError,
    SVar,
    UnboundSizeVariable,
    apply_size_subst,
    check_monotone,
    compare,
    compare_finite,
    eval_size,
    lin,
    normalize,
    parse_size,
    show,
    size_positions,
    smax,
    succ,
)
from strategies import NAMES, eval_np, grid, random_size, sizes

x, y, z = SVar("x"), SVar("y"), SVar("z")


def test_normalize_max_idempotent_commutative():
    assert normalize(smax(x, smax(y, x))) == normalize(smax(x, y))
    assert str(normalize(smax(x, smax(y, x)))) == "max(x,y)"


def test_normalize_succ_distributes_over_max():
    nf = normalize(succ(smax(x, y)))
    assert nf == normalize(smax(succ(x), succ(y)))
    env = grid(("x", "y"), 4)
    assert np.array_equal(eval_np(nf.to_expr(), env), eval_np(succ(smax(x, y)), env))


def test_infinity_absorbs():
    assert normalize(succ(INF)).is_inf
    assert apply_size_subst(smax(SVar("a"), SVar("b")), {"a": INF}) == INF


def test_compare_examples():
    assert compare(x, succ(x)) == Cmp.LT
    assert compare(x, smax(x, y)) == Cmp.LE
    assert compare(succ(x), x) == Cmp.INCOMPARABLE
    assert compare(x, INF) == Cmp.LT
    assert compare(INF, INF) == Cmp.EQ
    assert compare(INF, x) == Cmp.INCOMPARABLE


def test_strictly_extensive_plus_interpretation():
    # 2x+y+1 against s(max(x,y)): they coincide at x = y = 0, so the
    # comparison is LE and not LT
    e = lin([(2, x), (1, y)], 1)
    assert compare(succ(smax(x, y)), e) == Cmp.LE
    assert eval_size(succ(smax(x, y)), {"x": 0, "y": 0}) == eval_size(e, {"x": 0, "y": 0}) == 1
    env = grid(("x", "y"), 4)
    assert np.all(eval_np(succ(smax(x, y)), env) <= eval_np(e, env))


def test_eval_examples():
    assert eval_size(succ(smax(x, y)), {"x": 2, "y": 5}) == 6
    assert eval_size(ZERO, {}) == 0
    assert eval_size(lin([(2, x), (1, y)], 1), {"x": 3, "y": 1}) == 8
    assert eval_size(succ(INF), {}) == math.inf
    with pytest.raises(UnboundSizeVariable):
        eval_size(x, {})


def test_apply_subst_examples():
    assert apply_size_subst(succ(SVar("a")), {"a": x}) == succ(x)
    assert apply_size_subst(SVar("a"), {}) == SVar("a")


def test_compare_finite_ignores_infinity():
    assert compare_finite(x, INF) == Cmp.INCOMPARABLE
    assert compare_finite(x, succ(x)) == Cmp.LT


def test_parse_and_show_round_trip():
    for text in ["0", "x", "s(x)", "max(x,s(y))", "2*x+y+1", "inf", "3*(x+y)"]:
        e = parse_size(text)
        assert parse_size(show(e)) == e
    assert parse_size("s(inf)") == INF
    assert parse_size("2*x+y+1") == lin([(2, x), (1, y)], 1)
    with pytest.raises(SizeSyntaxError):
        parse_size("max(x,")


def test_monotonicity_of_builtin_symbols():
    check_monotone(succ(x))
    check_monotone(smax(x, y))
    check_monotone(lin([(2, x), (1, y)], 1))
    pos, neg, occ = size_positions(succ(x))
    assert occ["x"] <= pos and not neg


def test_non_monotone_extension_symbol_is_caught():
    SIZE_SYMBOLS["monus"] = SizeSymbol(2, frozenset({1}), frozenset({2}), lambda a, b: max(a - b, 0))
    try:
        e = SFun("monus", (x, y))
        with pytest.raises(NonMonotoneAnnotation):
            check_monotone(e)
        pos, neg, _ = size_positions(e)
        assert (1,) in pos and (2,) in neg
        assert compare(e, succ(e)) == Cmp.INCOMPARABLE
    finally:
        del SIZE_SYMBOLS["monus"]


@settings(max_examples=300, deadline=None)
@given(sizes(), sizes())
def test_compare_is_sound(a, b):
    env = grid()
    va, vb = eval_np(a, env), eval_np(b, env)
    c = compare(a, b)
    if c == Cmp.LT:
        assert np.all(va < vb)
    elif c == Cmp.LE:
        assert np.all(va <= vb)
    elif c == Cmp.EQ:
        assert np.all(va == vb)


@settings(max_examples=200, deadline=None)
@given(sizes())
def test_normalize_is_idempotent_and_preserves_value(e):
    nf = normalize(e)
    assert normalize(nf.to_expr()) == nf
    env = grid()
    assert np.array_equal(eval_np(nf.to_expr(), env), eval_np(e, env))


@settings(max_examples=200, deadline=None)
@given(sizes(p_inf=0), sizes(p_inf=0), st.lists(sizes(depth=2, p_inf=0), min_size=3, max_size=3))
def test_lt_is_stable_under_finite_substitution(a, b, values):
    phi = dict(zip(NAMES, values))
    if compare(a, b) == Cmp.LT:
        assert compare(apply_size_subst(a, phi), apply_size_subst(b, phi)) == Cmp.LT


def test_compare_transitive_on_samples():
    rng = random.Random(7)
    exprs = [random_size(rng, 3, p_inf=0) for _ in range(60)]
    for a, b, c in itertools.product(exprs[:20], repeat=3):
        if compare(a, b) in LEQ and compare(b, c) in LEQ:
            assert compare(a, c) in LEQ


def test_ground_descending_chains_are_short():
    rng = random.Random(3)
    for _ in range(200):
        e = random_size(rng, 3, names=(), p_inf=0)
        top = eval_size(e, {})
        chain = [e]
        while True:
            nxt = [f for f in (ZERO, *(succ(ZERO, k) for k in range(int(top))))
                   if compare(f, chain[-1]) == Cmp.LT]
            if not nxt:
                break
            chain.append(max(nxt, key=lambda f: eval_size(f, {})))
        assert len(chain) <= top + 1
