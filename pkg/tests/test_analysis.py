import json
from dataclasses import replace

import pytest
from hypothesis import given, settings

from pibound import corpus
from pibound.analysis import (
    DecompositionError,
    decompose_normal_form,
    depth_budget,
    fidelity_check,
    growth_witness,
    measure,
    measure_trace,
    name_bound,
    recs,
)
from pibound.congruence import depth_estimate
from pibound.parser import parse_process
from pibound.semantics import Trace, run
from pibound.syntax import (
    END,
    MINUS,
    NIL,
    PLUS,
    Chan,
    Inp,
    New,
    Out,
    Pair,
    PName,
    Rec,
    Recv,
    Send,
    Var,
    par,
    unfold,
)
from pibound.typesystems import EMPTY_ENV

from .strategies import name_typed_pairs, well_typed_pairs

CH = Chan(END)


# -- fidelity


def test_handshake_fidelity():
    e = corpus.load("handshake")
    trace = run(e.process, 5)
    [rec] = fidelity_check(e.env, e.process, trace)
    assert rec.bound and rec.subject == "x"
    assert rec.before == Pair(Send(CH, END), Recv(CH, END))
    assert rec.after == rec.expected == Pair(END, END)
    assert rec.match and rec.rechecked
    assert rec.as_dict()["after"] == "(end, end)"


def test_empty_trace_has_no_records():
    e = corpus.load("handshake")
    assert fidelity_check(e.env, e.process, Trace(e.process, (), "leftmost")) == []


def test_corrupted_annotation_is_reported():
    e = corpus.load("handshake")
    trace = run(e.process, 5)
    [s] = trace.steps
    bad_state = replace(s.state, annot=Pair(Send(CH, END), Recv(CH, END)))
    bad = replace(trace, steps=(replace(s, state=bad_state),))
    [rec] = fidelity_check(e.env, e.process, bad)
    assert not rec.match and rec.reason


def test_free_session_fidelity():
    gamma = {PName("f", PLUS): Send(CH, END), PName("f", MINUS): Recv(CH, END), PName("d"): CH}
    p = parse_process("f+!(d).0 | f-?(y).0")
    [rec] = fidelity_check(gamma, p, run(p, 3))
    assert not rec.bound and rec.match and rec.rechecked
    assert rec.after == Pair(END, END)


@pytest.mark.parametrize("name", ["recursive_session", "spawner", "server_name"])
def test_recursive_corpus_fidelity(name):
    e = corpus.load(name)
    records = fidelity_check(e.env, e.process, run(e.process, 30))
    assert records and all(r.match and r.rechecked for r in records)


# -- measurement


def test_measure_recursive_session():
    rep = measure(corpus.load("recursive_session").process, 50)
    assert rep.max_depth == 1 and rep.steps == 50


def test_measure_nested_sessions_grows():
    rep = measure(corpus.load("nested_sessions").process, 50)
    assert rep.max_depth == 2
    counts = list(rep.restriction_counts)
    assert max(counts[25:]) > max(counts[:25])
    assert rep.label("names").startswith("unbounded-growth witness")


def test_measure_spawner():
    rep = measure(corpus.load("spawner").process, 50)
    assert rep.outputs[-1] >= 49
    assert rep.max_depth <= 1 and rep.max_width <= 2
    assert rep.label("depth") == "no growth observed at horizon 50"


def test_report_serialization():
    rep = measure(corpus.load("handshake").process, 5, "random", seed=9)
    d = json.loads(rep.to_json())
    assert d["seed"] == 9 and d["policy"] == "random"
    assert len(d["per_step"]) == rep.steps + 1
    assert "max_width" in rep.summary()


def test_growth_witness():
    assert growth_witness([0, 1, 2, 3, 4, 5])
    assert not growth_witness([1, 1, 1, 1])
    assert not growth_witness([1, 2])


# -- counting and budgets


def test_recs_examples():
    r = Rec("X", Inp(PName("a"), "y", Var("X")))
    assert recs(NIL).recs == 0
    assert recs(r).recs == 1
    assert recs(unfold(r)).recs == 1
    assert recs(r).occurrences == {"X": 1}


def test_depth_budget_examples():
    assert depth_budget(EMPTY_ENV, NIL) == 0
    p = New("x", Pair(Send(CH, END), Recv(CH, END)), NIL)
    assert depth_budget(EMPTY_ENV, p) == 1


def test_depth_budget_decreases_per_step():
    e = corpus.load("handshake")
    budgets = [depth_budget(e.env, s) for s in run(e.process, 5).states]
    assert budgets == [1, 0]


def test_name_bound_of_server():
    e = corpus.load("server_name")
    assert name_bound(e.env, e.process) == 0


# -- decomposition


def test_decompose_examples():
    assert decompose_normal_form(NIL) == (NIL, NIL)
    r = parse_process("rec X. a?(y).X")
    out = Out(PName("a"), PName("b"), NIL)
    assert decompose_normal_form(par(r, out)) == (r, out)
    with pytest.raises(DecompositionError):
        decompose_normal_form(par(r, parse_process("rec Y. b?(z).Y")), k=1)


@settings(max_examples=40, deadline=None)
@given(name_typed_pairs)
def test_states_decompose_within_initial_recs(pair):
    _, p = pair
    k = recs(p).recs
    for s in run(p, 20).states:
        p1, p2 = decompose_normal_form(s, k)
        assert recs(p2).recs == 0 and not isinstance(p2, New)


# -- properties along traces


@settings(max_examples=60, deadline=None)
@given(well_typed_pairs)
def test_fidelity_on_generated(pair):
    gamma, p = pair
    records = fidelity_check(gamma, p, run(p, 20))
    assert all(r.match and r.rechecked for r in records)


@settings(max_examples=60, deadline=None)
@given(well_typed_pairs)
def test_depth_stays_within_budget(pair):
    gamma, p = pair
    ceiling = depth_estimate(p) + depth_budget(gamma, p)
    assert measure(p, 20).max_depth <= ceiling


@settings(max_examples=60, deadline=None)
@given(name_typed_pairs)
def test_recs_never_increase(pair):
    _, p = pair
    rep = measure_trace(run(p, 20))
    assert all(b <= a for a, b in zip(rep.recs, rep.recs[1:]))
