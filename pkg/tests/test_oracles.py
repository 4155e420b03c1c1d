import random

import pytest

from sizelab.oracles import (
    NonConstructor,
    NonGround,
    explore,
    fuzz,
    ground_size_oracle,
    ground_terms,
    random_derivation,
    random_term,
)
from sizelab.terms import App, Base, Sym, Var, app, typecheck_simple
from conftest import load

s, zero = Sym("s"), Sym("0")


def test_height_oracle_examples(div):
    assert ground_size_oracle(zero, div.vsig) == 0
    assert ground_size_oracle(App(s, App(s, zero)), div.vsig) == 2
    with pytest.raises(NonConstructor):
        ground_size_oracle(App(s, app(Sym("-"), zero, zero)), div.vsig)
    with pytest.raises(NonGround):
        ground_size_oracle(Var("x", Base("N")), div.vsig)


def test_enumeration_counts(div):
    # N_1 = {0}; N_h = {0} + s(N_{h-1}) + -(N_{h-1}^2) + /(N_{h-1}^2)
    counts = [1]
    for _ in range(2):
        n = counts[-1]
        counts.append(1 + n + 2 * n * n)
    assert [len(ground_terms(div, "N", h)) for h in (1, 2, 3)] == counts
    assert len(set(ground_terms(div, "N", 3))) == counts[-1]


def test_random_terms_are_well_typed_and_closed(brouwer):
    rng = random.Random(0)
    for _ in range(200):
        sort = rng.choice(brouwer.sorts)
        t = random_term(brouwer.signature, Base(sort), 4, rng)
        assert typecheck_simple({}, t, brouwer.signature) == Base(sort)


def test_explore_halts_on_terminating_systems(div):
    res = explore(ground_terms(div, "N", 3), div.rules)
    assert res.halted and res.cycle is None and res.longest > 0


def test_explore_finds_the_self_loop():
    p = load("selfloop")
    res = explore(ground_terms(p, p.sorts[0], 2), p.rules, cap=1000)
    assert not res.halted


def test_random_derivation_reaches_normal_form(div):
    # / x y computes ceil(x / (y+1)): / 2 1 -> s (/ (- 1 1) 1) ->> s (/ 0 1) -> s 0
    t = app(Sym("/"), App(s, App(s, zero)), App(s, zero))
    n, nf = random_derivation(t, div.rules, random.Random(1))
    assert n > 0 and nf == App(s, zero)


def test_fuzz_finds_no_increase_on_div(div):
    res = fuzz(div, 50, 4, seed=3)
    assert res.runs == 50 and not res.increases


def test_fuzz_budget_env(div, monkeypatch):
    monkeypatch.setenv("STRS_FUZZ_BUDGET", "7")
    assert fuzz(div, 50, 3).runs == 7
