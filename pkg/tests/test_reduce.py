import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afs.congruence import EMPTY, embed, forms_congruent, normalize
from afs.errors import StaleRedex
from afs.harness import GenConfig, gen_case
from afs.parser import parse_process
from afs.reduce import BROKEN_CREQ, STANDARD, Redex, apply_redex, enumerate_redexes, run, step
from afs.syntax import all_names
from afs.typecheck import check
from afs.types import Interface

from conftest import load


def form(text):
    return normalize(parse_process(text))


def only_redex(cf):
    rxs = enumerate_redexes(cf)
    assert len(rxs) == 1
    return rxs[0]


def test_communication_substitutes_the_value():
    cf = form("new (a: !(nat).end, b) (send a (2 + 3). 0 | recv b (x). send q x. 0)")
    rx = only_redex(cf)
    assert rx.rule == "R-Com"
    assert apply_redex(cf, rx) == form("send q 5. 0")


def test_branching_selects_the_arm():
    cf = form("new (a: +{l: end, r: !(nat).end}, b) (sel a r. send a 1. 0 | branch b { l: 0, r: recv b (x). 0 })")
    rx = only_redex(cf)
    assert (rx.rule, rx.label) == ("R-Bra", "r")
    assert str(rx) == "R-Bra on (a,b) [label r]"


def test_session_start_keeps_the_accept():
    cf = form("new (s: req !(nat).end, t) (req s (c). 0 | acc t (x). send x 1. 0)")
    nxt = apply_redex(cf, only_redex(cf))
    assert nxt == form("new (s: req !(nat).end, t) (send c 1. 0 | acc t (x). send x 1. 0)")


def test_cancelled_request_cancels_its_argument():
    cf = form("new (s: req !(nat).end, t) (req s (c). 0 | cancel t | send q 1. 0)")
    rx = only_redex(cf)
    assert rx.rule == "C-Req"
    nxt = apply_redex(cf, rx)
    assert forms_congruent(nxt, form("cancel c | send q 1. 0"))


def test_cancelled_accept_drops_the_cancel():
    cf = form("new (t: acc end, s) (acc t (x). 0 | cancel s)")
    rx = only_redex(cf)
    assert rx.rule == "C-Acc"
    assert apply_redex(cf, rx) == form("new (t: acc end, s) acc t (x). 0")


def test_cancelled_output_cancels_the_sent_name():
    cf = form("new (a: !(?(nat).end).end, b) (send a c. 0 | cancel b)")
    rx = only_redex(cf)
    assert rx.rule == "C-Out"
    assert apply_redex(cf, rx) == form("cancel c")


def test_cancelled_input_binds_a_fresh_cancelled_pair():
    cf = form("new (a: ?(!(nat).end).end, b) (recv a (x). send x 1. 0 | cancel b)")
    rx = only_redex(cf)
    assert rx.rule == "C-Inp"
    nxt = apply_redex(cf, rx)
    assert len(nxt.restrictions) == 1
    old = set().union(*(all_names(c) for c in cf.components))
    assert not set(nxt.restrictions[0].endpoints()) & (old - {"x"})
    assert run(nxt).final == EMPTY


def test_cancelled_branch_takes_the_greatest_label():
    cf = form("new (a: &{x: end, y: !(nat).end}, b) (branch a { x: 0, y: send a 2. 0 } | cancel b)")
    rx = only_redex(cf)
    assert rx.rule == "C-Bra"
    assert apply_redex(cf, rx) == form("new (a: !(nat).end, b) (send a 2. 0 | cancel b)")


def test_cancelled_select_continues():
    cf = form("new (a: +{x: end, y: end}, b) (sel a x. send q 1. 0 | cancel b)")
    assert only_redex(cf).rule == "C-Sel"
    assert run(cf).final == form("send q 1. 0")


def test_catch_runs_the_handler_and_keeps_the_cancel():
    cf = form("new (a: !(nat).end, b) (do send a 1. 0 catch send q 1. 0 | cancel b)")
    rx = only_redex(cf)
    assert rx.rule == "C-Cat"
    # the cancel stays, then goes with the restriction once nothing else uses b
    assert apply_redex(cf, rx) == form("send q 1. 0")


def test_catch_is_discarded_by_communication():
    cf = form("new (a: !(nat).end, b) (do send a 1. 0 catch send q 1. 0 | recv b (x). 0)")
    assert run(cf).final == EMPTY


def test_conditional_steps_on_closed_test():
    cf = form("if 1 < 2 then send q 1. 0 else send r 1. 0")
    assert only_redex(cf).rule == "E-If"
    assert run(cf).final == form("send q 1. 0")


def test_stale_redexes_are_refused():
    cf = form("send q 1. 0")
    with pytest.raises(StaleRedex):
        apply_redex(cf, Redex("R-Com", ("a", "b"), (0, 1)))


def test_two_requests_one_accept_race():
    cf = form("new (s: req !(nat).end, t) (req s (c). 0 | req s (d). 0 | acc t (x). send x 1. 0)")
    rxs = enumerate_redexes(cf)
    assert [r.rule for r in rxs] == ["R-Ses", "R-Ses"]
    first = step(cf)[1]
    assert first == apply_redex(cf, rxs[0])
    q1, q2 = (apply_redex(cf, r) for r in rxs)
    assert forms_congruent(run(q1).final, run(q2).final)


def test_empty_trace():
    trace = run(EMPTY)
    assert len(trace) == 0 and trace.terminal == "normal"


def test_budget_is_reported():
    declared, p = load("bookshop.afs")
    trace = run(normalize(p), 5)
    assert trace.terminal == "budget-exhausted" and len(trace) == 5
    with pytest.raises(ValueError):
        run(normalize(p), -1)


@pytest.mark.parametrize(
    "name, rules",
    [
        ("intro_linear.afs", ["R-Com", "R-Com", "R-Com"]),
        ("intro_cancel.afs", ["R-Com", "R-Com", "C-Out"]),
        ("docatch.afs", ["C-Cat"]),
        ("cancel_chain.afs", ["C-Inp", "C-Out"]),
        ("checkprice_a.afs", ["R-Ses", "R-Com", "R-Com", "R-Bra"]),
        ("checkprice_b.afs", ["R-Ses", "R-Com", "R-Com", "C-Bra"]),
    ],
)
def test_corpus_traces(name, rules):
    _, p = load(name)
    assert run(normalize(p)).rules() == rules


def _typed_case(i, depth):
    return gen_case(GenConfig(seed=13, max_type_depth=depth), i).mutated


@given(st.integers(0, 10_000), st.integers(1, 5))
@settings(max_examples=100, deadline=None)
def test_every_step_preserves_typing(i, depth):
    cf = normalize(_typed_case(i, depth))
    for _ in range(50):
        rxs = enumerate_redexes(cf)
        if not rxs:
            break
        for rx in rxs:
            check(Interface(), embed(apply_redex(cf, rx)))
        cf = apply_redex(cf, rxs[-1])


@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(0, 7))
@settings(max_examples=100, deadline=None)
def test_schedules_agree_on_normal_forms(i, depth, k):
    cf = normalize(_typed_case(i, depth))
    det = run(cf).final
    cur = cf
    for _ in range(500):
        nxt = STANDARD.step(cur, k)
        if nxt is None:
            break
        cur = nxt[1]
    assert forms_congruent(det, cur)


def test_cancel_of_a_request_persists():
    cf = form("new (s: req !(nat).end, t) (req s (c). 0 | req s (d). 0 | cancel t)")
    assert [r.rule for r in enumerate_redexes(cf)] == ["C-Req", "C-Req"]
    trace = run(cf)
    assert trace.rules() == ["C-Req", "C-Req"]
    assert forms_congruent(trace.final, form("cancel c | cancel d"))
    broken = BROKEN_CREQ.run(cf)
    assert broken.rules() == ["C-Req"]


def test_cancel_persists_past_a_catch():
    cf = form("new (s: req !(nat).end, t) (do req s (c). 0 catch cancel c | req s (d). 0 | cancel t)")
    trace = run(cf)
    assert sorted(trace.rules()) == ["C-Cat", "C-Req"]
    assert forms_congruent(trace.final, form("cancel c | cancel d"))
