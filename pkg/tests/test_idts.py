import pytest

from sizelab import idts
from sizelab.idts import Arr, erase, erase_rule, reaches, to_idts, translate_subst, translate_system
from sizelab.terms import App, Base, Sym, Var, app, lam, reducts, substitute
from strategies import commutation_sample, step_sample

N, O = Base("N"), Base("O")
x = Var("x", N)


def problems(*ps):
    return list(ps)


def test_translation_examples(div):
    sig = div.signature
    assert str(to_idts(lam(x, x), sig)) == "lam[N;N](\\x0. x0)"
    assert str(to_idts(App(lam(x, App(Sym("s"), x)), Sym("0")), sig)) == "@[N;N](lam[N;N](\\x0. s(x0)), 0)"
    assert str(to_idts(Sym("s"), sig)) == "lam[N;N](\\x0. s(x0))"


def test_erase_examples(div):
    t = to_idts(App(lam(x, App(Sym("s"), x)), Sym("0")), div.signature)
    assert str(erase(t)) == "@[N;N](\\x0. s(x0), 0)"
    assert str(erase(to_idts(Sym("s"), div.signature))) == "\\x0. s(x0)"


def test_beta_family_is_restricted_to_types_in_use(div, brouwer, lists, plus_f):
    assert translate_system(div.rules, div.signature)[1] == []
    assert translate_system(plus_f.rules, plus_f.signature)[1] == []
    assert [r.name for r in translate_system(lists.rules, lists.signature)[1]] == ["beta[N;N]"]
    _, beta = translate_system(brouwer.rules, brouwer.signature)
    pairs = {tuple(str(ty) for ty in r.lhs.sym.types) for r in beta}
    nn = Arr(N, N)
    assert pairs == {(str(a), str(b)) for a, b in [
        (N, O), (O, nn), (N, N), (Arr(N, O), Arr(nn, N)), (nn, N)]}


def test_translated_rules_are_structural(div, brouwer, lists, plus_f):
    for p in (div, brouwer, lists, plus_f):
        tr, beta = translate_system(p.rules, p.signature)
        for r in tr:
            assert idts.is_structural(r.lhs, p.signature) and idts.is_structural(r.rhs, p.signature)


def test_rules_to_json(lists):
    _, beta = translate_system(lists.rules, lists.signature)
    js = idts.rules_to_json(beta)
    assert js[0]["text"] == "@[N;N](lam[N;N](\\x0. Z(x0)), X) -> Z(X)"
    assert js[0]["rhs"] == {"meta": "Z", "args": [{"meta": "X", "args": []}]}


def test_substitution_counterexample(div):
    """Mapping an applied variable to a bare symbol breaks exact commutation:
    the left side beta-reduces inside the translation, the right does not."""
    g = Var("g", idts.from_idts_type(Arr(N, N)))
    t, theta = App(g, Sym("0")), {"g": Sym("s")}
    left = to_idts(substitute(t, theta), div.signature)
    right = idts.isubst(to_idts(t, div.signature), translate_subst(theta, div.signature))
    assert str(left) == "s(0)"
    assert str(right) == "@[N;N](lam[N;N](\\x0. s(x0)), 0)"
    beta = idts.beta_rule_family({(N, N)})
    assert reaches(right, left, beta, max_steps=1)


def commutes(p, t, theta):
    left = to_idts(substitute(t, theta), p.signature)
    right = idts.isubst(to_idts(t, p.signature), translate_subst(theta, p.signature))
    return left, right


def test_translation_commutes_with_substitution(div, brouwer, plus_f, lists):
    exact = 0
    for p, t, theta in commutation_sample(problems(div, brouwer, plus_f, lists), 500, 1):
        left, right = commutes(p, t, theta)
        beta = idts.beta_rule_family(idts.types_in_use(p.signature, [right]))
        if left == right:
            exact += 1
        else:
            # only variables applied to a partial symbol application differ
            assert reaches(right, left, beta, max_steps=12)
    assert exact >= 400


@pytest.mark.xfail(strict=True, reason="fails when an applied variable is mapped to a partial symbol application")
def test_translation_commutes_exactly_on_every_sample(div, brouwer, plus_f, lists):
    for p, t, theta in commutation_sample(problems(div, brouwer, plus_f, lists), 500, 1):
        left, right = commutes(p, t, theta)
        assert left == right


def test_one_step_simulation(div, brouwer, plus_f, lists):
    sample = step_sample(problems(div, brouwer, plus_f, lists), 500, 2)
    systems = {p.name: translate_system(p.rules, p.signature) for p in (div, brouwer, plus_f, lists)}
    for p, t, u, rid, symbol_value in sample:
        tr, beta = systems[p.name]
        it, iu = to_idts(t, p.signature), to_idts(u, p.signature)
        one = iu in [w for w, _, _ in idts.reducts(it, tr + beta)]
        if not symbol_value:
            assert one, (str(t), str(u), rid)
        else:
            assert one or reaches(it, iu, tr + beta)


def test_erasure_simulates_steps(div, brouwer, plus_f, lists):
    sample = step_sample(problems(div, brouwer, plus_f, lists), 500, 3)
    systems = {p.name: translate_system(p.rules, p.signature) for p in (div, brouwer, plus_f, lists)}
    for p, t, _, _, _ in sample:
        tr, beta = systems[p.name]
        rules = tr + beta
        erased = [erase_rule(r) for r in rules]
        it = to_idts(t, p.signature)
        targets = [w for w, _, _ in idts.reducts(erase(it), erased)]
        for w, _, _ in idts.reducts(it, rules):
            assert erase(w) in targets


def test_map_with_symbol_argument_needs_a_beta_step(lists):
    """``map s (cons 0 nil)``: the rule produces ``s 0`` directly, the
    translation an ``@`` redex first."""
    sig = lists.signature
    t = app(Sym("map"), Sym("s"), app(Sym("cons"), Sym("0"), Sym("nil")))
    tr, beta = translate_system(lists.rules, sig)
    u = next(u for u, pos, rid in reducts(t, lists.rules) if pos == ())
    it, iu = to_idts(t, sig), to_idts(u, sig)
    assert iu not in [w for w, _, _ in idts.reducts(it, tr + beta)]
    assert reaches(it, iu, tr + beta, max_steps=2)
