import random

from hypothesis import given, settings

from pibound import corpus
from pibound.congruence import (
    congruent,
    depth_estimate,
    depth_oracle,
    depth_report,
    inner_normal_form,
    nest,
    normalize,
    outer_normal_form,
    restriction_count,
    single_rewrites,
    width_profile,
)
from pibound.parser import parse_process
from pibound.syntax import NIL, New, Par, free_names

from .strategies import untyped_terms


def P(text):
    return parse_process(text, untyped=True)


def _outer_prefix(p):
    k = 0
    while isinstance(p, New):
        k, p = k + 1, p.body
    return k


def test_nest_examples():
    assert nest(NIL) == 0
    assert nest(P("new x in new y in 0")) == 2
    assert nest(P("(new x in 0) | new y in new z in 0")) == 2


def test_inner_form_pushes_scope_down():
    assert inner_normal_form(P("new x in (x!(a).0 | b!(c).0)")) == P("(new x in x!(a).0) | b!(c).0")
    assert inner_normal_form(normalize(P("new x in 0"))) == NIL


def test_inner_form_keeps_shared_restrictions():
    body = corpus.load("nested_sessions").process.body
    nf = inner_normal_form(body)
    assert nest(nf) == 2
    assert congruent(body, nf)


def test_outer_form_examples():
    assert outer_normal_form(P("(new x in x!(a).0) | b!(c).0")) == P("new x in (x!(a).0 | b!(c).0)")
    assert outer_normal_form(NIL) == NIL
    q = outer_normal_form(P("new x in ((new y in y!(x).0) | x!(b).0)"))
    assert _outer_prefix(q) == 2 and nest(q) == 2


def test_normalize_examples():
    assert normalize(P("new x in 0")) == NIL
    assert normalize(P("new x in a!(b).0")) == P("a!(b).0")
    p = P("new x in x!(a).0")
    assert normalize(p) == p


def test_known_depths():
    assert depth_estimate(corpus.load("recursive_session").process) == 1
    assert depth_estimate(corpus.load("nested_sessions").process) == 2
    assert depth_estimate(NIL) == 0


def test_oracle_examples():
    assert depth_oracle(P("new x in new y in 0")) == 0
    assert depth_oracle(corpus.load("recursive_session").process) == 1
    assert depth_oracle(corpus.load("nested_sessions").process) == 2


def test_depth_report_fields():
    rep = depth_report(corpus.load("nested_sessions").process, oracle_budget=50_000)
    assert rep.as_dict() == {"nest_raw": 2, "depth_estimate": 2, "oracle_depth": 2, "restriction_count_normalized": 2}


def test_width_of_spawner():
    p = corpus.load("spawner").process
    assert width_profile(p.body) == {"a": 2}


def test_restriction_count_ignores_unused():
    assert restriction_count(P("new x in new y in x!(a).0")) == 1


def test_single_rewrites_cover_rules():
    rules = {r for r, _ in single_rewrites(P("new x in (x!(a).0 | new y in 0)"))}
    assert {"Par-1", "Nil-1", "New-2", "Nil-2"} <= rules


@given(untyped_terms)
def test_normalize_idempotent(p):
    assert normalize(normalize(p)) == normalize(p)


@given(untyped_terms)
def test_normal_forms_drop_nothing_free(p):
    for q in (inner_normal_form(p), outer_normal_form(p)):
        assert free_names(q) == free_names(p)


@settings(max_examples=60, deadline=None)
@given(untyped_terms)
def test_normal_forms_are_congruent(p):
    for q in (inner_normal_form(p), outer_normal_form(p)):
        assert congruent(p, q, budget=20_000) in (True, None)


@given(untyped_terms)
def test_outer_form_nest_counts_outer_restrictions(p):
    q = outer_normal_form(p)
    assert nest(q) >= _outer_prefix(q)
    # components below the outer prefix carry no active restriction themselves
    body = q
    while isinstance(body, New):
        body = body.body
    assert nest(body) == nest(q) - _outer_prefix(q)


@settings(max_examples=60, deadline=None)
@given(untyped_terms)
def test_estimate_bounds_oracle(p):
    o = depth_oracle(p, budget=20_000)
    if o is not None:
        assert depth_estimate(p) >= o


def test_rewrites_stay_congruent():
    rng = random.Random(3)
    p = corpus.load("nested_sessions").process
    for _ in range(20):
        _, q = rng.choice(single_rewrites(p))
        assert congruent(p, q, budget=50_000)
        p = q


def test_par_commutes_under_estimate():
    a, b = P("new x in x!(y).0"), P("new z in new w in z!(w).0")
    assert depth_estimate(Par(a, b)) == depth_estimate(Par(b, a)) == 2
