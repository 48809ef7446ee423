import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afs.errors import EvalError, ParseError
from afs.harness import GenConfig, gen_case
from afs.parser import parse_process, parse_program
from afs.syntax import (
    Add,
    Less,
    Lit,
    Var,
    alpha_eq,
    evaluate,
    free_names,
    pretty,
    pretty_program,
    substitute,
)

from conftest import CORPUS


def raw(text):
    return parse_process(text, rename=False)


def test_substitution_avoids_capture():
    p = raw("recv a (x). send x y. 0")
    q = substitute(p, "y", "x")
    # the bound x is renamed, the substituted x stays free
    assert free_names(q) == {"a", "x"}
    assert alpha_eq(q, raw("recv a (z). send z x. 0"))


def test_substitution_stops_at_binders():
    p = raw("recv a (x). send x 1. 0")
    assert substitute(p, "x", "b") == p


def test_substitution_renames_both_ends_of_a_restriction():
    p = raw("new (a: end, b) send c a. 0")
    q = substitute(p, "c", "a")
    assert free_names(q) == {"a"}


def test_alpha_equivalence():
    assert alpha_eq(raw("recv a (x). send x 1. 0"), raw("recv a (z). send z 1. 0"))
    assert not alpha_eq(raw("recv a (x). send x 1. 0"), raw("recv a (x). send y 1. 0"))
    assert alpha_eq(raw("new (a: end, b) 0"), raw("new (c: end, d) 0"))
    assert not alpha_eq(raw("send a 1. 0"), raw("send b 1. 0"))


def test_free_names_of_restriction():
    assert free_names(raw("new (a: end, b) (send c a. 0)")) == {"c"}
    assert free_names(raw("acc s (x). send x y. 0")) == {"s", "y"}


def test_expressions_evaluate():
    assert evaluate(Add(Lit(5), Lit(1))) == Lit(6)
    assert evaluate(Less(Lit(5), Lit(7))) == Lit(True)
    with pytest.raises(EvalError):
        evaluate(Add(Lit("a"), Lit(1)))
    with pytest.raises(EvalError):
        evaluate(Var("x"))


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("send a . 0", 1, 8),
        ("recv a (x. 0", 1, 10),
        ("sel a . 0", 1, 7),
        ("new (a: nat, b) 0", 1, 9),
        ("send a 1. 0 |", 1, 14),
        ("branch a { }", 1, 12),
    ],
)
def test_parse_errors_carry_positions(text, line, col):
    with pytest.raises(ParseError) as info:
        parse_process(text)
    assert (info.value.line, info.value.col) == (line, col)


def test_keywords_may_be_labels():
    p = parse_process("sel a cancel. 0")
    assert p.label == "cancel"


def test_prefix_binds_tighter_than_parallel():
    p = parse_process("send a 1. 0 | recv b (x). 0")
    assert type(p).__name__ == "Par"


def test_binders_are_made_distinct():
    p = parse_process("recv a (x). 0 | recv b (x). 0")
    assert p.left.binder != p.right.binder


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.afs")), ids=lambda p: p.stem)
def test_corpus_round_trips(path):
    declared, p = parse_program(path.read_text())
    declared2, q = parse_program(pretty_program(declared, p))
    assert declared2 == declared
    assert alpha_eq(p, q)


@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=5))
@settings(max_examples=150, deadline=None)
def test_generated_terms_round_trip(i, depth):
    case = gen_case(GenConfig(seed=7, max_type_depth=depth), i)
    for p in (case.pair, case.mutated):
        assert alpha_eq(parse_process(pretty(p)), p)
