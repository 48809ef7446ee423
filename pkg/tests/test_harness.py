import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afs.congruence import EMPTY, normalize
from afs.harness import (
    PROPERTIES,
    GenConfig,
    check_diamond,
    check_subject_reduction,
    gen_case,
    gen_session_pair,
    gen_type,
    mutate_cancel,
    run_suite,
)
from afs.parser import parse_process, parse_type
from afs.reduce import BROKEN_COUT, run
from afs.typecheck import check
from afs.types import Branch, End, Interface, Select, dual, subterms


def test_config_invariants():
    with pytest.raises(ValueError):
        GenConfig(cases=0)
    with pytest.raises(ValueError):
        GenConfig(max_type_depth=0)
    with pytest.raises(ValueError):
        GenConfig(mutation_rate=1.5)


def test_depth_one_is_always_end():
    cfg = GenConfig(max_type_depth=1)
    assert all(gen_type(cfg, random.Random(i)) == End() for i in range(50))


@given(st.integers(0, 100_000))
def test_generated_choices_are_nonempty_and_bounded(seed):
    cfg = GenConfig(max_labels=3)
    t = gen_type(cfg, random.Random(seed))
    assert dual(dual(t)) == t
    for u in subterms(t):
        if isinstance(u, (Select, Branch)):
            assert 1 <= len(u.branches) <= 3


def test_pair_at_end_is_nil():
    assert normalize(gen_session_pair(End(), GenConfig())) == EMPTY


def test_pair_for_a_single_output():
    p = gen_session_pair(parse_type("!(nat).end"), GenConfig())
    trace = run(normalize(p))
    assert trace.rules() == ["R-Com"] and trace.final == EMPTY


def test_zero_mutation_rate_is_identity():
    cfg = GenConfig(mutation_rate=0.0)
    for i in range(30):
        case = gen_case(cfg, i)
        assert case.mutated == case.pair


def test_truncating_the_first_prefix():
    # the receiver gives up at once; the composition still reduces to nothing
    p = parse_process(
        "new (a: !(nat).!(string).?(bool).end, b) (send a 5. send a \"x\". recv a (y). 0 | cancel b)"
    )
    check(Interface(), p)
    assert run(normalize(p)).final == EMPTY


@given(st.integers(0, 10_000), st.integers(1, 5), st.floats(0.0, 1.0))
@settings(max_examples=150, deadline=None)
def test_mutation_preserves_typing(i, depth, rate):
    cfg = GenConfig(seed=23, max_type_depth=depth, mutation_rate=rate)
    rng = cfg.case_rng(i)
    pair = gen_session_pair(gen_type(cfg, rng), cfg, rng)
    check(Interface(), pair)
    check(Interface(), mutate_cancel(pair, cfg, rng))


def test_two_requests_one_accept_is_a_diamond():
    p = parse_process("new (s: req !(nat).end, t) (req s (c). 0 | req s (d). 0 | acc t (x). send x 1. 0)")
    assert check_diamond(p).ok


def test_request_and_cancel_race():
    p = parse_process("new (s: req end, t) (req s (c). 0 | req s (d). 0 | cancel t)")
    assert check_diamond(p).ok


def test_single_redex_is_a_vacuous_diamond():
    assert check_diamond(parse_process("new (a: !(nat).end, b) (send a 1. 0 | recv b (x). 0)")).ok


def test_broken_output_cancellation_is_caught():
    p = parse_process("new (a: !(?(nat).end).end, b) (new (c: !(nat).end, d) (send a d. 0 | send c 1. 0) | cancel b)")
    assert check_subject_reduction(p).ok
    out = check_subject_reduction(p, engine=BROKEN_COUT)
    assert not out.ok and "UnusedLinear" in out.detail


def test_suite_is_deterministic():
    cfg = GenConfig(seed=99, cases=15)
    assert run_suite(cfg).text() == run_suite(cfg).text()


def test_suite_report_and_summary():
    report = run_suite(GenConfig(seed=1, cases=10))
    assert report.ok
    lines = report.lines()
    assert lines[0] == "fuzz seed=1 cases=10 depth=5 mutation=0.3"
    assert [ln.split()[1].rstrip(":") for ln in lines[1:8]] == list(PROPERTIES)
    summary = json.loads(report.summary_json())
    assert [r["name"] for r in summary["properties"]] == list(PROPERTIES)
    assert all(r["pass"] == 10 and r["fail"] == 0 and r["seeds"] == [] for r in summary["properties"])


def test_failures_carry_seeds_and_shrunk_counterexamples():
    report = run_suite(GenConfig(seed=42, cases=60), engine=BROKEN_COUT)
    assert not report.ok
    assert report.failing_seeds["subject_reduction"]
    cx = next(c for c in report.counterexamples if c.prop == "subject_reduction")
    # the shrunk case still fails, and reproduces from its index and depth
    case = gen_case(GenConfig(seed=42), cx.index, cx.depth)
    assert not check_subject_reduction(case.mutated, engine=BROKEN_COUT).ok
    assert cx.seed == case.seed == report.failing_seeds["subject_reduction"][0]
