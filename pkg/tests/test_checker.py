import itertools
import random

import pytest

from sizelab.checker import (
    NotStrictlyExtensive,
    PrecedenceFallbackFailed,
    Status,
    check_monotonicity,
    check_nonconstructor,
    check_system,
)
from sizelab.orders import (
    MeasureCmp,
    MeasureSpec,
    OrderError,
    PrecedenceCycle,
    build_precedence,
    ground_lt,
    measure_compare,
)
from sizelab.problem import ProblemError
from sizelab.sizes import LEQ, SVar, compare, eval_size, lin, smax, succ
from strategies import random_size

x, y = SVar("x"), SVar("y")
LEX2 = MeasureSpec("lex", ("a", "b"), (SVar("a"), SVar("b")))
MUL2 = MeasureSpec("mul", ("a", "b"), (SVar("a"), SVar("b")))
LEX1 = MeasureSpec("lex", ("a",), (SVar("a"),))

NAT = "SORTS N\nCONS\n 0 : N\n s : N -> N\n"


def ground_valuations(names=("x", "y"), hi=4):
    for vals in itertools.product(range(hi + 1), repeat=len(names)):
        yield dict(zip(names, vals))


def holds_everywhere(b, a, spec):
    for mu in ground_valuations():
        gb = [eval_size(e, mu) for e in spec.apply(b)]
        ga = [eval_size(e, mu) for e in spec.apply(a)]
        if not ground_lt(gb, ga, spec.kind):
            return False
    return True


def test_measure_compare_examples():
    assert measure_compare((x,), (succ(x),), LEX1) == MeasureCmp.LT
    b, a = (succ(x), y), (succ(x), succ(y))
    assert measure_compare(b, a, LEX2) == MeasureCmp.LT
    assert holds_everywhere(b, a, LEX2)
    b, a = (x, y), (succ(x), y)
    assert measure_compare(b, a, MUL2) == MeasureCmp.LT
    assert holds_everywhere(b, a, MUL2)
    assert measure_compare((x,), (x,), LEX1) == MeasureCmp.GE_OR_UNKNOWN


def test_measure_compare_lt_is_sound_irreflexive_and_transitive():
    rng = random.Random(12)
    for spec in (LEX2, MUL2):
        for _ in range(1000):
            t = [tuple(random_size(rng, 2, ("x", "y"), p_inf=0) for _ in range(2)) for _ in range(3)]
            assert measure_compare(t[0], t[0], spec) != MeasureCmp.LT
            lt01 = measure_compare(t[0], t[1], spec) == MeasureCmp.LT
            lt12 = measure_compare(t[1], t[2], spec) == MeasureCmp.LT
            if lt01:
                assert holds_everywhere(t[0], t[1], spec)
            if lt01 and lt12:
                assert holds_everywhere(t[0], t[2], spec)


def test_check_system_examples(div, brouwer, parse):
    assert check_system(div).status == Status.TERMINATES
    assert check_system(brouwer).status == Status.TERMINATES
    v = check_system(parse(NAT + "FUNS\n f : N{a} -> N{a}\nRULES\n f x -> f x\n"))
    assert v.status == Status.UNKNOWN
    assert "RecursiveCallNotDecreasing" in v.reason


def test_empty_rule_set_terminates(parse):
    assert check_system(parse(NAT + "FUNS\n f : N{a} -> N{a}\nRULES\n")).status == Status.TERMINATES


def test_div_trace(div):
    v = check_system(div)
    t = v.traces[4]
    assert t.a == ("s(x)",) and t.rhs_size == "s(x)" and t.bound == "s(x)" and t.ok
    assert t.calls[0]["b"] == ["x"] and t.calls[0]["result"] == "LT"


def test_rejections(parse):
    v = check_system(parse("SORTS B\nCONS\n c : (B -> B) -> B\nFUNS\n f : B{a} -> B\nRULES\n"))
    assert v.status == Status.REJECTED and "NegativeOccurrence" in v.reason
    v = check_system(parse(NAT + "FUNS\n f : N{a} -> N{b} -> N\nRULES\n f x (s x) -> 0\n"))
    assert v.status == Status.REJECTED
    with pytest.raises(ProblemError, match="cycle"):
        parse(NAT + "FUNS\n f : N{a} -> N\n g : N{a} -> N\nPREC\n f > g\n g > f\nRULES\n")


def test_precedence_cycles_and_unknown_symbols():
    with pytest.raises(PrecedenceCycle):
        build_precedence({"f", "g"}, set(), [("f", ">", "g"), ("g", ">", "f")])
    with pytest.raises(OrderError):
        build_precedence({"f"}, set(), [("f", ">", "h")])
    p = build_precedence({"f", "g", "h"}, {"0"}, [("f", "~", "g"), ("g", ">", "h")])
    assert p.equiv("f", "g") and p.lt("h", "f") and p.lt("0", "h") and not p.lt("f", "g")


def test_verdicts_are_deterministic(div, brouwer, plus_f):
    for p in (div, brouwer, plus_f):
        a, b = check_system(p).to_dict(), check_system(p).to_dict()
        a.pop("seconds"), b.pop("seconds")
        assert a == b


def test_adding_rules_never_helps(parse):
    base = (NAT + "FUNS\n - : N{a} -> N -> N{a}\n / : N{a} -> N -> N{a}\nPREC\n / > -\nRULES\n")
    rules = [r.strip() for r in """
        - x 0 -> x
        - 0 x -> 0
        - (s x) (s y) -> - x y
        / 0 x -> 0
        / (s x) y -> s (/ (- x y) y)
        / x y -> / x y
        - x y -> s x
    """.strip().splitlines()]
    rng = random.Random(0)
    for _ in range(40):
        sub = [r for r in rules if rng.random() < 0.6]
        extra = sub + [r for r in rules if r not in sub and rng.random() < 0.5]
        small = check_system(parse(base + "\n".join(sub) + "\n")).status
        big = check_system(parse(base + "\n".join(extra) + "\n")).status
        if small == Status.UNKNOWN:
            assert big == Status.UNKNOWN


def test_nonconstructor_examples(plus_f, parse):
    nc = check_nonconstructor(plus_f)
    assert nc.ok
    assert [c.condition for c in nc.conditions] == ["strictly-extensive"]
    assert check_system(plus_f).status == Status.TERMINATES

    text = plus_text().replace("+ = 2*a+b+1\n", "+ = max(a,b)\n").replace("+ = lex(2*a+b+1)\n", "")
    nc = check_nonconstructor(parse(text))
    assert not nc.ok
    with pytest.raises(NotStrictlyExtensive):
        nc.raise_first()

    p = parse(NAT + "FUNS\n F : N{a} -> N\n G : N{a} -> N\nPREC\n F ~ G\nINTERP\n F = inf\n G = inf\n"
              "RULES\n F (G x) -> 0\n G x -> F (G x)\n")
    nc = check_nonconstructor(p)
    with pytest.raises(PrecedenceFallbackFailed):
        nc.raise_first()


def plus_text():
    from conftest import problem_path

    return open(problem_path("plusF")).read()


def test_strictly_extensive_bound():
    # s(max(x,y)) <= 2x+y+1 is what the +/F example relies on
    assert compare(succ(smax(x, y)), lin([(2, x), (1, y)], 1)) in LEQ


def test_monotonicity_report(div, plus_f):
    assert check_monotonicity(div)
    assert check_monotonicity(plus_f)
