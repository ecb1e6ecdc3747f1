"""Fidelity and boundedness over generated well-typed processes.

Run with ``python3 notebooks/fidelity_sweep.py [N]``.  For each generated
process the script runs a random 30-step trace, checks that every annotation
advanced to its successor and that every state still type checks, and
records the largest depth and session width seen.
"""

import sys
from collections import Counter

from pibound.analysis import fidelity_check, measure_trace
from pibound.generators import well_typed_corpus
from pibound.semantics import run

n = int(sys.argv[1]) if len(sys.argv) > 1 else 100
records = mismatches = 0
depths, widths, lengths = Counter(), Counter(), Counter()
for i, (gamma, p) in enumerate(well_typed_corpus(n, seed=2)):
    trace = run(p, 30, "random", seed=i)
    recs = fidelity_check(gamma, p, trace)
    records += len(recs)
    mismatches += sum(1 for r in recs if not (r.match and r.rechecked))
    rep = measure_trace(trace)
    depths[rep.max_depth] += 1
    widths[rep.max_width] += 1
    lengths[len(trace) // 10 * 10] += 1

print(f"{n} processes, {records} fidelity records, {mismatches} mismatches")
print("max depth per process:", dict(sorted(depths.items())))
print("max session width per process:", dict(sorted(widths.items())))
print("trace lengths (bucketed by 10):", dict(sorted(lengths.items())))
