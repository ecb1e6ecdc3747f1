"""Measurement harness: fidelity monitoring, boundedness metrics along traces,
recursion counting and the normal-form decomposition."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from .congruence import (
    DepthReport,
    active_soup,
    depth_report,
    inner_normal_form,
    normalize,
    width_profile,
)
from .semantics import Trace, internal_env, run
from .syntax import (
    Chan,
    New,
    Out,
    Pair,
    PName,
    Process,
    Type,
    UndefinedSuccessor,
    count_recs,
    par,
    recvar_occurrences,
    subterms,
    type_depth,
    type_successor,
)
from .typesystems import Checker, CheckError, TypeEnv


def _show(t: Type | None) -> str | None:
    from .parser import print_type

    return None if t is None else print_type(t)


# ---------------------------------------------------------------------------
# Fidelity


@dataclass(frozen=True)
class FidelityRecord:
    step: int
    subject: str
    bound: bool
    before: Type | None
    after: Type | None
    expected: Type | None
    match: bool
    rechecked: bool
    reason: str = ""

    def as_dict(self) -> dict:
        return {
            "step": self.step,
            "subject": self.subject,
            "bound": self.bound,
            "before": _show(self.before),
            "after": _show(self.after),
            "expected": _show(self.expected),
            "match": self.match,
            "rechecked": self.rechecked,
            "reason": self.reason,
        }


def _successor(t: Type | None) -> Type | None:
    if t is None:
        return None
    try:
        return type_successor(t)
    except UndefinedSuccessor:
        return None


def _free_step(gamma: TypeEnv, inp: PName, outp: PName) -> tuple[Type | None, Type | None, TypeEnv, str]:
    """Type of a free subject before the step, its successor and the advanced environment."""
    ti, to = gamma.get(inp), gamma.get(outp)
    if ti is None or to is None:
        return None, None, gamma, "subject missing from environment"
    if inp == outp:
        if isinstance(ti, Chan):
            return ti, ti, gamma, ""
        return ti, None, gamma, "non-channel type on an unpolarized subject"
    before = Pair(to, ti)
    after = _successor(before)
    if after is None:
        return before, None, gamma, "endpoint types have no common successor"
    return before, after, gamma.set(outp, after.left).set(inp, after.right), ""


def fidelity_check(
    gamma: Mapping[PName, Type], p: Process, trace: Trace, system: str = "depth", var_mode: str = "lenient"
) -> list[FidelityRecord]:
    """Compare every step of ``trace`` against the annotation successor and
    re-check each successor state.  Mismatches are returned, never raised."""
    checker = Checker(system, var_mode)
    env = TypeEnv(gamma)
    state = p
    records = []
    for s in trace.steps:
        r = s.redex
        a = r.label.subject
        reason = ""
        if r.bound_subject:
            ref = internal_env(r.unfolded_state if r.unfolded_state is not None else state)
            new = internal_env(s.state)
            key = PName(a)
            before, after = ref.get(key), new.get(key)
            expected = _successor(before)
            match = expected is not None and after == expected
            if not match:
                reason = "annotation did not advance to its successor"
            others = {k: v for k, v in ref.items() if k != key}
            changed = sorted(str(k) for k, v in others.items() if k in new and new[k] != v)
            if changed:
                match = False
                reason = "other annotations changed: " + ", ".join(changed)
        else:
            before, expected, env, reason = _free_step(env, r.input_subject, r.output_subject)
            after = expected
            match = expected is not None
        try:
            checker.check(env, None, s.state)
            rechecked = True
        except CheckError as e:
            rechecked = False
            reason = reason or f"successor rejected: {e}"
        records.append(FidelityRecord(s.index, a, r.bound_subject, before, after, expected, match, rechecked, reason))
        state = s.state
    return records


# ---------------------------------------------------------------------------
# Counting and budgets


@dataclass(frozen=True)
class RecsCount:
    recs: int
    occurrences: Counter

    def as_dict(self) -> dict:
        return {"recs": self.recs, "occurrences": dict(sorted(self.occurrences.items()))}


def recs(p: Process) -> RecsCount:
    """Simultaneous recursion instances (every recursion node) and the
    multiset of recursion variable occurrences."""
    return RecsCount(count_recs(p), recvar_occurrences(p))


def depth_budget(gamma: Mapping[PName, Type], p: Process) -> int:
    """Sum of the depths of the types in ``gamma`` and of every restriction annotation of ``p``."""
    total = sum(type_depth(t) for t in gamma.values())
    total += sum(type_depth(t) for t in internal_env(p).values() if t is not None)
    return total


def name_bound(gamma: Mapping[PName, Type], p: Process) -> int:
    """Restriction-count ceiling used for name soundness checks: the initial
    restrictions plus, per recursion instance, the depth ceiling."""
    from .congruence import depth_estimate, restriction_count

    return restriction_count(p) + recs(p).recs * (depth_estimate(p) + depth_budget(gamma, p))


class DecompositionError(ValueError):
    pass


def _has_restriction(p: Process) -> bool:
    return any(isinstance(q, New) for q in subterms(p))


def decompose_normal_form(p: Process, k: int | None = None) -> tuple[Process, Process]:
    """Split ``p`` (up to congruence) into a recursive part and a part with no
    recursion and no restrictions.

    The second component collects the active parallel components of the
    inner normal form that contain neither; with ``k`` given, a recursive part
    holding more than ``k`` recursion instances is reported as a failure.
    """
    q = inner_normal_form(normalize(p))
    comps = _top_components(q)
    plain = [c for c in comps if count_recs(c) == 0 and not _has_restriction(c)]
    rest = [c for c in comps if not (count_recs(c) == 0 and not _has_restriction(c))]
    p1, p2 = par(*rest), par(*plain)
    if k is not None and count_recs(p1) > k:
        raise DecompositionError(f"recursive part has {count_recs(p1)} recursion instances, more than {k}")
    return p1, p2


def _top_components(p: Process) -> list[Process]:
    from .syntax import Nil, Par

    out, stack = [], [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Par):
            stack.extend((q.right, q.left))
        elif not isinstance(q, Nil):
            out.append(q)
    return out


# ---------------------------------------------------------------------------
# Boundedness along traces


def session_width(state: Process) -> int:
    """Largest number of parallel components, in inner normal form, that one
    bound session name (any restriction not annotated as a channel) occurs in."""
    nf = inner_normal_form(normalize(state))
    widths = width_profile(nf)
    kinds = {r.name: r.annot for r in subterms(nf) if isinstance(r, New)}
    return max((w for x, w in widths.items() if not isinstance(kinds.get(x), Chan)), default=0)


def _component_counts(state: Process) -> tuple[int, int]:
    _, atoms = active_soup(normalize(state))
    return len(atoms), sum(1 for a in atoms if isinstance(a, Out))


def growth_witness(series: list[int]) -> bool:
    """True when the second half of a series reaches a strictly higher maximum
    than the first half and the series never settles (finite evidence only)."""
    if len(series) < 4:
        return False
    half = len(series) // 2
    return max(series[half:]) > max(series[:half])


@dataclass(frozen=True)
class BoundednessReport:
    steps: int
    policy: str
    seed: int | None
    reports: tuple[DepthReport, ...]
    restriction_counts: tuple[int, ...]
    widths: tuple[int, ...]
    recs: tuple[int, ...]
    components: tuple[int, ...]
    outputs: tuple[int, ...]
    max_width_by_name: dict = field(default_factory=dict)

    @property
    def max_depth(self) -> int:
        return max(r.depth_estimate for r in self.reports)

    @property
    def max_restrictions(self) -> int:
        return max(self.restriction_counts)

    @property
    def max_width(self) -> int:
        return max(self.widths)

    @property
    def depths(self) -> list[int]:
        return [r.depth_estimate for r in self.reports]

    def label(self, metric: str) -> str:
        series = {"depth": self.depths, "names": list(self.restriction_counts), "width": list(self.widths)}[metric]
        if growth_witness(series):
            return f"unbounded-growth witness at horizon {self.steps}"
        return f"no growth observed at horizon {self.steps}"

    def as_dict(self) -> dict:
        return {
            "steps": self.steps,
            "policy": self.policy,
            "seed": self.seed,
            "max_depth_estimate": self.max_depth,
            "max_restrictions": self.max_restrictions,
            "max_width": self.max_width,
            "depth_label": self.label("depth"),
            "names_label": self.label("names"),
            "width_label": self.label("width"),
            "per_step": [
                {
                    "step": i,
                    **r.as_dict(),
                    "width": w,
                    "recs": k,
                    "components": c,
                    "outputs": o,
                }
                for i, (r, w, k, c, o) in enumerate(
                    zip(self.reports, self.widths, self.recs, self.components, self.outputs)
                )
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def summary(self) -> str:
        return "\n".join(
            [
                f"steps: {self.steps}",
                f"policy: {self.policy}",
                f"seed: {self.seed}",
                f"max_depth_estimate: {self.max_depth} ({self.label('depth')})",
                f"max_restrictions: {self.max_restrictions} ({self.label('names')})",
                f"max_width: {self.max_width} ({self.label('width')})",
                f"final_components: {self.components[-1]}",
                f"final_outputs: {self.outputs[-1]}",
                f"final_recs: {self.recs[-1]}",
            ]
        )


def measure_trace(trace: Trace) -> BoundednessReport:
    reports, counts, widths, rs, comps, outs = [], [], [], [], [], []
    for state in trace.states:
        rep = depth_report(state)
        reports.append(rep)
        counts.append(rep.restriction_count_normalized)
        widths.append(session_width(state))
        rs.append(count_recs(state))
        c, o = _component_counts(state)
        comps.append(c)
        outs.append(o)
    return BoundednessReport(
        steps=len(trace),
        policy=trace.policy,
        seed=trace.seed,
        reports=tuple(reports),
        restriction_counts=tuple(counts),
        widths=tuple(widths),
        recs=tuple(rs),
        components=tuple(comps),
        outputs=tuple(outs),
    )


def measure(p: Process, max_steps: int, policy: str = "leftmost", seed: int = 0) -> BoundednessReport:
    return measure_trace(run(p, max_steps, policy, seed))


__all__ = [
    "BoundednessReport",
    "DecompositionError",
    "FidelityRecord",
    "RecsCount",
    "decompose_normal_form",
    "depth_budget",
    "fidelity_check",
    "growth_witness",
    "measure",
    "measure_trace",
    "name_bound",
    "recs",
    "session_width",
]
