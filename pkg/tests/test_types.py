import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afs.parser import parse_type
from afs.types import (
    BOOL,
    NAT,
    STRING,
    Accept,
    Branch,
    End,
    Input,
    Interface,
    Output,
    Request,
    Select,
    dual,
    is_shareable,
    is_weakenable,
)

grounds = st.sampled_from([NAT, STRING, BOOL])
labels = st.lists(st.sampled_from(["a", "b", "buy", "cancel", "l0"]), min_size=1, max_size=3, unique=True)


def _labelled(children):
    return st.builds(lambda ls, ts: tuple(sorted(zip(ls, ts), key=lambda p: p[0].encode())),
                     labels, st.lists(children, min_size=3, max_size=3))


session_types = st.recursive(
    st.just(End()),
    lambda inner: st.one_of(
        st.builds(Output, st.one_of(grounds, inner), inner),
        st.builds(Input, st.one_of(grounds, inner), inner),
        _labelled(inner).map(Select),
        _labelled(inner).map(Branch),
        st.builds(Request, st.one_of(grounds, inner)),
        st.builds(Accept, st.one_of(grounds, inner)),
    ),
    max_leaves=12,
)


@given(session_types)
def test_duality_is_an_involution(t):
    assert dual(dual(t)) == t


@given(session_types)
@settings(max_examples=200)
def test_printed_types_reparse(t):
    assert parse_type(str(t)) == t


def test_dual_swaps_direction_but_keeps_payloads():
    t = parse_type("!(?(nat).end).&{a: end, b: ?(string).end}")
    assert dual(t) == parse_type("?(?(nat).end).+{a: end, b: !(string).end}")


def test_dual_of_request_is_accept():
    assert dual(parse_type("req !(nat).end")) == parse_type("acc !(nat).end")


@pytest.mark.parametrize(
    "text, shareable, weakenable",
    [
        ("end", False, True),
        ("nat", True, True),
        ("req end", True, True),
        ("acc end", False, False),
        ("!(nat).end", False, False),
    ],
)
def test_structural_classes(text, shareable, weakenable):
    t = parse_type(text)
    assert is_shareable(t) is shareable
    assert is_weakenable(t) is weakenable


def test_branch_labels_are_sorted_by_bytes():
    t = parse_type("&{b: end, B: end, a: end}")
    assert t.labels == ("B", "a", "b")


def test_interface_is_compared_as_a_multiset():
    i1 = Interface([("x", NAT), ("s", parse_type("req end"))])
    i2 = Interface([("s", parse_type("req end")), ("x", NAT)])
    assert i1 == i2
    assert i1.names() == {"x", "s"}
