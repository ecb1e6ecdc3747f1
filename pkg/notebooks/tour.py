"""A walk through the bundled examples.

Run with ``python3 notebooks/tour.py``.  Each section prints what the library
computes for one example, with a short note on what to look for.
"""

from pibound import corpus
from pibound.analysis import measure
from pibound.congruence import depth_estimate, depth_oracle, inner_normal_form, normalize
from pibound.parser import print_process
from pibound.semantics import run
from pibound.typesystems import CheckError, Checker


def section(title):
    print()
    print(title)
    print("-" * len(title))


section("Depth of two recursive processes")
# Both open a fresh session on every unfolding.  The first keeps one session
# alive at a time, the second nests a session inside another.
for name in ("recursive_session", "nested_sessions"):
    p = corpus.load(name).process
    print(f"{name}: estimate {depth_estimate(p)}, oracle {depth_oracle(p)}")
    print("  inner normal form:", print_process(inner_normal_form(normalize(p))))

section("Neither is name-bounded")
# The number of live restrictions keeps growing along a trace.
for name in ("recursive_session", "nested_sessions"):
    rep = measure(corpus.load(name).process, 40)
    print(f"{name}: restrictions {list(rep.restriction_counts)[::8]} ... -> {rep.label('names')}")

section("Checking")
for name in ("handshake", "recursive_session", "nested_sessions", "server_chan"):
    e = corpus.load(name)
    for system in ("depth", "name"):
        try:
            Checker(system).check(e.env, None, e.process)
            verdict = "accepted"
        except CheckError as err:
            verdict = f"rejected ({err.rules[0]})"
        print(f"{name:20s} {system:5s} {verdict}")

section("A process with unboundedly many components but depth 1")
trace = run(corpus.load("spawner").process, 5)
for line in trace.lines():
    print(" ", line)
rep = measure(corpus.load("spawner").process, 50)
print(f"after 50 steps: {rep.outputs[-1]} outputs, max depth {rep.max_depth}, max width {rep.max_width}")
