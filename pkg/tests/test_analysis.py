import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afs.analysis import barbs, characteristic, is_inactive, progress_check
from afs.congruence import EMPTY, normalize
from afs.harness import GenConfig, gen_case, gen_type
from afs.parser import parse_process, parse_program, parse_type
from afs.reduce import enumerate_redexes
from afs.syntax import alpha_eq
from afs.types import End

from conftest import load


def form(text):
    return normalize(parse_process(text))


def test_barbs():
    assert barbs(form("send a 5. 0")) == {"a"}
    assert barbs(form("new (a: !(nat).end, b) (send a 5. 0 | recv b (x). 0)")) == set()
    assert barbs(form("send b 5. cancel b")) == {"b"}
    assert barbs(form("do recv a (x). 0 catch 0 | cancel c")) == {"a", "c"}


def test_inactivity():
    assert is_inactive(EMPTY)
    assert is_inactive(form("new (a: req end, b) acc b (x). 0"))
    assert not is_inactive(form("send a 5. 0"))
    assert not is_inactive(form("acc b (x). 0"))


def test_characteristic_clauses():
    assert characteristic("a", End()) == parse_process("0")
    p = characteristic("a", parse_type("?(end).end"))
    assert alpha_eq(p, parse_process("recv a (x). (0 | 0)", rename=False))
    p = characteristic("a", parse_type("!(nat).end"))
    assert alpha_eq(p, parse_process("send a 0. 0"))
    p = characteristic("a", parse_type("req !(bool).end"))
    assert alpha_eq(p, parse_process("new (b: ?(bool).end, c) (req a (c). 0 | recv b (x). 0)"))


def test_chooser_picks_the_selection():
    t = parse_type("+{x: !(nat).end, y: end}")
    assert characteristic("a", t) == parse_process("sel a x. send a 0. 0")
    assert characteristic("a", t, lambda ls: "y") == parse_process("sel a y. 0")


@given(st.integers(0, 10_000), st.integers(2, 5))
@settings(max_examples=200, deadline=None)
def test_characteristic_processes_barb_on_their_name(i, depth):
    cfg = GenConfig(seed=17, max_type_depth=depth)
    t = gen_type(cfg, cfg.case_rng(i))
    cf = normalize(characteristic("a", t))
    assert isinstance(t, End) or "a" in barbs(cf)


@given(st.integers(0, 10_000), st.integers(1, 5))
@settings(max_examples=100, deadline=None)
def test_inactive_forms_have_no_redexes_and_no_barbs(i, depth):
    from afs.reduce import run

    cf = run(normalize(gen_case(GenConfig(seed=19, max_type_depth=depth), i).mutated)).final
    if is_inactive(cf):
        assert not enumerate_redexes(cf) and not barbs(cf)


def test_progress_on_an_open_output():
    declared, p = parse_program("interface {b: !(nat).end} in send b 5. 0")
    report = progress_check(declared, p)
    assert report.classification == "active"
    assert report.barbed == {"b"}
    assert report.witness is not None and report.witness.redex.rule == "R-Com"
    assert report.status == "witnessed"


def test_progress_on_the_closed_system():
    declared, p = load("bookshop.afs")
    report = progress_check(declared, p)
    assert report.classification == "inactive"
    assert report.witness is None
    assert len(report.trace) == 13


@pytest.mark.parametrize("name", ["checkprice_a.afs", "checkprice_b.afs", "buyercancel.afs"])
def test_progress_on_cancelled_purchases(name):
    declared, p = load(name)
    assert progress_check(declared, p).status == "inactive"


@pytest.mark.parametrize("name", ["buyer.afs", "buyermsg.afs", "seller.afs", "bank.afs", "docatch.afs"])
def test_open_corpus_terms_are_witnessed(name):
    declared, p = load(name)
    report = progress_check(declared, p)
    assert report.status == "witnessed"
    assert report.witness.name in declared.names()


def test_progress_report_lines():
    declared, p = parse_program("interface {b: !(nat).end} in send b 5. 0")
    lines = progress_check(declared, p).lines()
    assert lines[0] == "steps: 0 (normal)"
    assert "status: witnessed" in lines
    assert lines[-1] == "fires: R-Com on (b,b')"
