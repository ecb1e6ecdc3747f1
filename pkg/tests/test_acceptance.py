"""The eight acceptance criteria, one test each.

Each test prints a ``[PASS]``/``[FAIL]`` line with its runtime; the lines are
repeated in the pytest terminal summary.  Run directly with
``python3 -m pytest tests/test_acceptance.py -s``.
"""

import random
import time
from collections import Counter
from functools import lru_cache

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from pibound import corpus
from pibound.analysis import (
    fidelity_check,
    measure,
    measure_trace,
    name_bound,
    recs,
    session_width,
)
from pibound.congruence import depth_estimate, depth_oracle, random_rewrite
from pibound.generators import (
    WellTypedGenerator,
    base_env,
    random_term,
    well_typed,
    well_typed_corpus,
)
from pibound.semantics import POLICIES, run, unfoldings
from pibound.syntax import (
    MINUS,
    PLUS,
    New,
    Pair,
    PName,
    Rec,
    Var,
    dual,
    par,
    type_depth,
    type_successor,
)
from pibound.typesystems import (
    EMPTY_ENV,
    EMPTY_RECENV,
    Checker,
    CheckError,
    RecEnv,
    TypeEnv,
    accepts,
    check_depth,
    check_name,
    env_add,
    recenv_add,
)

from .acceptance_report import criterion
from .strategies import balanced_pairs, endpoint_types, types

GENERATED = 200
FIDELITY_STEPS = 30
NAME_GENERATED = 100
NAME_STEPS = 100
PROPERTY_CASES = 1000

_settings = settings(
    max_examples=PROPERTY_CASES,
    deadline=None,
    database=None,
    suppress_health_check=[HealthCheck.too_slow],
)


@lru_cache(maxsize=None)
def generated_set():
    """The shared set of depth-accepted processes with their traces, mixing
    scheduling policies so that both leftmost and random schedules appear."""
    out = []
    for i, (gamma, p) in enumerate(well_typed_corpus(GENERATED, seed=1)):
        policy = POLICIES[i % len(POLICIES)]
        out.append((gamma, p, run(p, FIDELITY_STEPS, policy, seed=i)))
    return out


def test_criterion_1_known_depths():
    with criterion(1, "depth of the recursive-session and nested-sessions terms is 1 and 2") as notes:
        for name, expected in (("recursive_session", 1), ("nested_sessions", 2)):
            start = time.perf_counter()
            p = corpus.load(name).process
            est, oracle = depth_estimate(p), depth_oracle(p)
            elapsed = time.perf_counter() - start
            notes.append(f"{name}: estimate {est}, oracle {oracle} in {elapsed:.3f}s")
            assert est == oracle == expected and elapsed < 1.0


def test_criterion_2_untypable_server():
    with criterion(2, "every annotation of the recursive server is rejected by the depth checker", limit=1.0) as notes:
        entries = corpus.untypable()
        assert len(entries) >= 4
        for e in entries:
            for mode in ("strict", "lenient"):
                try:
                    check_depth(e.env, None, e.process, var_mode=mode)
                except CheckError as err:
                    assert err.rules and all(err.rules)
                    notes.append(f"{e.name}/{mode}: {err.rules[0]}")
                else:
                    raise AssertionError(f"{e.name} accepted in {mode} mode")


def test_criterion_3_fidelity():
    with criterion(3, f"fidelity on {GENERATED} generated processes, traces of {FIDELITY_STEPS} steps", limit=60.0) as notes:
        checker = Checker("depth")
        total = bad = 0
        for gamma, p, trace in generated_set():
            assert checker.accepts(gamma, p)
            records = fidelity_check(gamma, p, trace)
            total += len(records)
            bad += sum(1 for r in records if not (r.match and r.rechecked))
        notes.append(f"{total} records, {bad} mismatches")
        assert len(generated_set()) >= 200 and total > 0 and bad == 0


def test_criterion_4_width():
    with criterion(4, "bound session names occupy at most 2 parallel components") as notes:
        states = [s for _, _, t in generated_set() for s in t.states]
        states += run(corpus.load("spawner").process, 50).states
        widest = max(session_width(s) for s in states)
        notes.append(f"{len(states)} states, widest {widest}")
        assert widest <= 2


def test_criterion_5_spawner():
    with criterion(5, "spawner at 50 steps: at least 49 parallel outputs, depth at most 1") as notes:
        rep = measure(corpus.load("spawner").process, 50)
        notes.append(f"{rep.outputs[-1]} outputs, max depth {rep.max_depth}")
        assert rep.steps == 50 and rep.outputs[-1] >= 49 and rep.max_depth <= 1


def _two_self_calls(seed):
    g = WellTypedGenerator(random.Random(seed), delegation=False)
    s = g.endpoint_type(in_rec=True)
    a = g.thread(PName("r", PLUS), s, Var("X"), True)
    b = g.thread(PName("r", MINUS), dual(s), Var("X"), True)
    return Rec("X", New("r", Pair(s, dual(s)), par(a, b)))


def test_criterion_6_name_soundness():
    with criterion(6, f"name soundness over {NAME_STEPS}-step traces and targeted rejections", limit=60.0) as notes:
        cases = [(e.env, e.process) for e in corpus.load_all() if accepts(e.env, e.process, "name")]
        cases += [well_typed(50_000 + i, system="name") for i in range(NAME_GENERATED)]
        worst = 0
        for gamma, p in cases:
            check_name(gamma, None, p)
            ceiling = name_bound(gamma, p)
            counts = measure_trace(run(p, NAME_STEPS)).restriction_counts
            assert max(counts) <= ceiling, (p, max(counts), ceiling)
            worst = max(worst, max(counts))
        notes.append(f"{len(cases)} accepted processes, largest restriction count {worst}")
        for name in ("nested_sessions", "nested_sessions_flat"):
            e = corpus.load(name)
            for mode in ("strict", "lenient"):
                assert not accepts(e.env, e.process, "name", mode)
        rejected = 0
        for seed in range(100):
            p = _two_self_calls(seed)
            assert accepts(base_env(), p, "depth")
            for mode in ("strict", "lenient"):
                assert not accepts(base_env(), p, "name", mode)
            rejected += 1
        notes.append(f"nested sessions rejected; {rejected} two-call bodies rejected")


def test_criterion_7_oracle():
    with criterion(7, "normal-form depth equals the exhaustive oracle on 500 random terms", limit=30.0) as notes:
        rng = random.Random(7)
        depths = Counter()
        for i in range(500):
            p = random_term(rng, max_restrictions=3, max_prefixes=6)
            est, oracle = depth_estimate(p), depth_oracle(p)
            assert oracle is not None and est == oracle, (i, p, est, oracle)
            depths[est] += 1
        notes.append("500/500 agree; depths " + ", ".join(f"{d}: {n}" for d, n in sorted(depths.items())))


def _envs(draw_keys):
    return st.dictionaries(draw_keys, types, max_size=4).map(TypeEnv)


names_a = st.sampled_from([PName(x, q) for x in "abc" for q in (PLUS, MINUS)])
names_b = st.sampled_from([PName(x, q) for x in "xyz" for q in (PLUS, MINUS)])


def test_criterion_8_properties():
    with criterion(8, f"algebraic and preservation properties, {PROPERTY_CASES} cases each") as notes:
        counts = dict.fromkeys(["dual", "successor", "env_add", "recenv_add", "congruence", "recs"], 0)

        @_settings
        @given(endpoint_types)
        def dual_involution(s):
            counts["dual"] += 1
            assert dual(dual(s)) == s

        @_settings
        @given(balanced_pairs)
        def successor_decrement(t):
            counts["successor"] += 1
            if type_depth(t) == 0:
                return
            assert type_depth(type_successor(t)) == type_depth(t) - 1

        @_settings
        @given(_envs(names_a), _envs(names_b))
        def env_addition(g1, g2):
            counts["env_add"] += 1
            assert env_add(EMPTY_ENV, g1) == g1 == env_add(g1, EMPTY_ENV)
            assert env_add(g1, g2) == env_add(g2, g1)

        recvars = st.sampled_from(["X", "Y", "Z"])

        @_settings
        @given(st.dictionaries(recvars, _envs(names_a), max_size=2), st.dictionaries(st.sampled_from(["U", "V"]), _envs(names_b), max_size=2))
        def recenv_addition(d1, d2):
            counts["recenv_add"] += 1
            d1, d2 = RecEnv(d1), RecEnv(d2)
            assert recenv_add(EMPTY_RECENV, d1) == d1 == recenv_add(d1, EMPTY_RECENV)
            assert recenv_add(d1, d2) == recenv_add(d2, d1)

        @_settings
        @given(st.integers(0, 10_000), st.integers(0, 2**32 - 1))
        def subject_congruence(seed, rseed):
            counts["congruence"] += 1
            gamma, p = well_typed(seed)
            _, q = random_rewrite(p, random.Random(rseed))
            assert accepts(gamma, q), q

        @_settings
        @given(st.integers(0, 10_000), st.integers(0, 20))
        def recs_non_increasing(seed, k):
            counts["recs"] += 1
            _, p = well_typed(seed, system="name")
            state = run(p, k).states[-1]
            before = recs(state).recs
            for q in unfoldings(state):
                assert recs(q).recs <= before
            for s in run(state, 1).steps:
                assert recs(s.state).recs <= before

        for prop in (dual_involution, successor_decrement, env_addition, recenv_addition, subject_congruence, recs_non_increasing):
            prop()
        notes.append(", ".join(f"{k} {v}" for k, v in counts.items()))
        assert all(v >= PROPERTY_CASES for v in counts.values())
