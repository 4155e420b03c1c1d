import pytest

from sizelab.checker import Status, check_system
from sizelab.problem import (
    DuplicateSymbol,
    InvalidProblemAnnotation,
    ProblemError,
    ProblemSyntaxError,
    UnknownSort,
    UnknownSymbol,
    format_problem,
    parse_problem,
)
from conftest import SHIPPED, load

NAT = "SORTS N\nCONS\n 0 : N\n s : N -> N\n"


def test_parse_div(div):
    assert div.sorts == ("N",)
    assert (len(div.constructors), len(div.defined), len(div.rules)) == (2, 2, 5)
    assert str(div.rules[4].lhs) == "/ (s x) y"


@pytest.mark.parametrize("text, error, line, col", [
    (NAT + "FUNS\n f : M{a} -> N\nRULES\n", UnknownSort, 6, 6),
    (NAT + "FUNS\n f : N{a} -> N\nRULES\n f x -> g x\n", UnknownSymbol, 8, 9),
    (NAT + "FUNS\n s : N{a} -> N\nRULES\n", DuplicateSymbol, 6, 2),
    (NAT + "FUNS\n f : N{a} -> N{b}\nRULES\n", InvalidProblemAnnotation, 6, 2),
    (NAT + "FUNS\n f : N{a} -> \nRULES\n", ProblemSyntaxError, 6, 13),
    (NAT + "FUNS\n f : N{a} -> N\nRULES\n f x -> f\n", ProblemError, 8, 2),
])
def test_errors_carry_positions(text, error, line, col):
    with pytest.raises(error) as exc:
        parse_problem(text)
    assert (exc.value.line, exc.value.col) == (line, col)
    assert str(exc.value).startswith(f"line {line}, column {col}: ")


@pytest.mark.parametrize("name", SHIPPED)
def test_format_round_trips(name):
    p = load(name)
    again = parse_problem(format_problem(p), name=p.name)
    assert again == p
    assert format_problem(again) == format_problem(p)


def test_empty_rules_terminate():
    p = parse_problem(NAT + "FUNS\n f : N{a} -> N{a}\nRULES\n")
    assert not p.rules
    assert check_system(p).status == Status.TERMINATES


def test_comments_and_blank_lines_are_ignored():
    p = parse_problem("# header\n\n" + NAT + "FUNS\n f : N{a} -> N{a}  # trailing\nRULES\n f 0 -> 0\n")
    assert len(p.rules) == 1
