import pytest
from hypothesis import given, settings

from pibound import corpus
from pibound.congruence import width_profile
from pibound.parser import parse_process, print_process
from pibound.semantics import (
    NoRedex,
    internal_env,
    redexes,
    run,
    step,
    unfolding_contexts,
    unfoldings,
)
from pibound.syntax import (
    END,
    NIL,
    Chan,
    New,
    Out,
    Pair,
    PName,
    Rec,
    Var,
    alpha_equiv,
    has_distinct_names,
    make_distinct,
    par,
    substitute_recvar,
    subterms,
    unfold,
)

from .strategies import well_typed_pairs

CH = Chan(END)


def P(text, untyped=False):
    return parse_process(text, untyped=untyped)


def test_unfoldings_examples():
    r = P("rec X. a?(y).X")
    [u] = unfoldings(r)
    assert alpha_equiv(u, P("a?(y).rec X. a?(y).X"))
    assert unfoldings(NIL) == []


def test_two_unfolding_contexts():
    p = corpus.load("unfolding").process
    assert len(unfoldings(p)) == 2
    ctxs = unfolding_contexts(p)
    assert len(ctxs) == 2
    assert ctxs[0][0].known_names() == {"c"}
    for ctx, rec in ctxs:
        assert ctx.plug(rec) == p


def test_plain_redex():
    [r] = redexes(P("a?(x).0 | a!(b+).0", untyped=True))
    assert str(r.label) == "{a}"
    assert r.result == par(NIL, NIL)
    assert not r.bound_subject


def test_session_redex_advances_annotation():
    p = P("new a : (?#end.end, !#end.end) in (a+?(x).0 | a-!(b).0)")
    [r] = redexes(p)
    assert r.result == New("a", Pair(END, END), par(NIL, NIL))
    assert r.bound_subject and r.annotation_after == Pair(END, END)


def test_redex_through_unfolding():
    [r] = redexes(P("(rec X. a?(y).X) | a!(b).0"))
    assert str(r.label) == "{Rec,a}"
    assert r.label.unfolded and r.unfolded_vars == ("X",)
    assert "unfold X" in r.description


def test_polarities_must_be_dual():
    assert redexes(P("a+?(x).0 | a+!(b).0", untyped=True)) == []
    assert redexes(P("a?(x).0 | a+!(b).0", untyped=True)) == []


def test_step():
    assert step(P("a?(x).x!(c).0 | a!(b).0")) == par(Out(PName("b"), PName("c"), NIL), NIL)
    with pytest.raises(NoRedex):
        step(NIL)
    with pytest.raises(NoRedex):
        step(P("a!(b).0"), 0)


def test_spawner_step_leaves_output_behind():
    p = corpus.load("spawner").process
    q = step(p)
    assert print_process(q).count("b!(c).0") == 2
    assert print_process(step(q)).count("b!(c).0") == 3


def test_run_nil_is_empty():
    t = run(NIL, 10)
    assert len(t) == 0 and t.states == [NIL]


def test_spawner_run_spawns_one_output_per_step():
    t = run(corpus.load("spawner").process, 8)
    assert len(t) == 8
    assert [print_process(s).count("b!(c).0") for s in t.states] == list(range(1, 10))


def test_run_policies_are_reproducible():
    p = corpus.load("recursive_session").process
    assert run(p, 10, "random", seed=4).lines() == run(p, 10, "random", seed=4).lines()
    assert run(p, 10, "random", seed=4).seed == 4
    assert len(run(p, 10, "fair")) == 10
    with pytest.raises(ValueError):
        run(p, 1, "greedy")


def test_run_rejects_open_terms():
    with pytest.raises(ValueError):
        run(Rec("X", Out(PName("a"), PName("b"), Var("Y"))), 1)


def test_trace_lines():
    [line] = run(corpus.load("handshake").process, 5).lines()
    index, label, desc, state = line.split("\t")
    assert (index, label) == ("0", "{x}")
    assert state == "new x : (end, end) in 0 | 0"


def test_internal_env_examples():
    assert internal_env(NIL) == {}
    assert internal_env(New("x", CH, NIL)) == {PName("x"): CH}
    t = Pair(END, END)
    assert internal_env(par(New("x", CH, NIL), New("y", t, NIL))) == {PName("x"): CH, PName("y"): t}


@settings(max_examples=60, deadline=None)
@given(well_typed_pairs)
def test_results_have_distinct_binders(pair):
    _, p = pair
    for s in run(p, 10).states:
        assert has_distinct_names(s)


@settings(max_examples=60, deadline=None)
@given(well_typed_pairs)
def test_unfolding_flags_match_labels(pair):
    _, p = pair
    for r in redexes(p):
        assert r.label.unfolded == bool(r.unfolded_paths)
        assert len(r.unfolded_paths) <= 2
        if not r.label.unfolded:
            assert r.unfolded_state is None


@settings(max_examples=60, deadline=None)
@given(well_typed_pairs)
def test_redex_inside_recursion_body_survives_unfolding(pair):
    # a communication of the unfolded body is a communication of the body,
    # with the recursion substituted back in afterwards
    _, p = pair
    for q in subterms(p):
        if not isinstance(q, Rec):
            continue
        base = [r for r in redexes(q.body) if not r.label.unfolded]
        for r in redexes(unfold(q)):
            if r.label.unfolded:
                continue
            assert any(
                r2.label == r.label and alpha_equiv(make_distinct(substitute_recvar(r2.result, q.var, q)), r.result)
                for r2 in base
            )


def test_bound_session_width_stays_two():
    p = corpus.load("spawner").process
    for s in run(p, 20).states:
        assert max(width_profile(s).values(), default=0) <= 2
