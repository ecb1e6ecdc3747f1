"""Annotated reduction semantics and the unfolding relation.

Redexes are found by matching active prefixes (those reachable through
parallel composition and restriction only).  A participant hidden behind an
active recursion is exposed by one unfolding, which marks the step with
``Rec``.  The step is performed in place: the object's restriction is
extruded to the smallest subtree holding both prefixes and the subject's
restriction annotation advances to its successor.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator

from .syntax import (
    EPS,
    Chan,
    Inp,
    New,
    Out,
    Pair,
    Par,
    PName,
    Process,
    Rec,
    ReductionLabel,
    Type,
    UndefinedSuccessor,
    Var,
    all_names,
    is_recursion_closed,
    substitute_name,
    type_successor,
    unfold,
)

Path = tuple[int, ...]


def _get(p: Process, path: Path) -> Process:
    for i in path:
        p = p.body if not isinstance(p, Par) else (p.left, p.right)[i]
    return p


def _replace(p: Process, path: Path, q: Process) -> Process:
    if not path:
        return q
    i, rest = path[0], path[1:]
    match p:
        case Par(left, right):
            return Par(_replace(left, rest, q), right) if i == 0 else Par(left, _replace(right, rest, q))
        case New(x, annot, body):
            return New(x, annot, _replace(body, rest, q))
        case Rec(v, body):
            return Rec(v, _replace(body, rest, q))
        case Inp(s, o, body):
            return Inp(s, o, _replace(body, rest, q))
        case Out(s, o, body):
            return Out(s, o, _replace(body, rest, q))
    raise ValueError(f"bad path {path}")


def active_positions(p: Process, path: Path = ()) -> Iterator[tuple[Path, Process]]:
    """Prefixes and recursions not underneath a prefix or a recursion binder,
    in left-to-right order."""
    match p:
        case Par(left, right):
            yield from active_positions(left, path + (0,))
            yield from active_positions(right, path + (1,))
        case New(_, _, body):
            yield from active_positions(body, path + (0,))
        case Inp() | Out() | Rec():
            yield path, p


@dataclass(frozen=True)
class UnfoldingContext:
    """A process with a hole at an active position."""

    process: Process
    hole: Path

    def plug(self, q: Process) -> Process:
        return _replace(self.process, self.hole, q)

    def known_names(self) -> frozenset[str]:
        out = set()
        p = self.process
        for i in self.hole:
            if isinstance(p, New):
                out.add(p.name)
            p = _get(p, (i,))
        return frozenset(out)


def unfoldings(p: Process) -> list[Process]:
    """One result per active recursion, each unfolded once with fresh binders."""
    out = []
    for path, q in active_positions(p):
        if isinstance(q, Rec):
            avoid = all_names(p)
            out.append(_replace(p, path, unfold(q, avoid)))
    return out


def unfolding_contexts(p: Process) -> list[tuple[UnfoldingContext, Rec]]:
    return [(UnfoldingContext(p, path), q) for path, q in active_positions(p) if isinstance(q, Rec)]


@dataclass(frozen=True)
class Redex:
    label: ReductionLabel
    result: Process
    input_path: Path
    output_path: Path
    unfolded_paths: tuple[Path, ...] = ()
    unfolded_vars: tuple[str, ...] = ()
    # the term after the unfoldings and before the communication
    unfolded_state: Process | None = None
    input_subject: PName | None = None
    output_subject: PName | None = None
    bound_subject: bool = False
    annotation_before: Type | None = None
    annotation_after: Type | None = None
    stuck_annotation: bool = False

    @property
    def description(self) -> str:
        parts = [
            f"in@{_fmt_path(self.input_path)}",
            f"out@{_fmt_path(self.output_path)}",
        ]
        if self.unfolded_vars:
            parts.append("unfold " + ",".join(self.unfolded_vars))
        if self.stuck_annotation:
            parts.append("annotation-stuck")
        return " ".join(parts)


def _fmt_path(path: Path) -> str:
    return ".".join(map(str, path)) or "root"


def _dual_subjects(a: PName, b: PName) -> bool:
    return a.base == b.base and a.pol is b.pol.dual


@dataclass(frozen=True)
class RedexSite:
    """A matching input/output pair, before the communication is carried out."""

    input_path: Path
    output_path: Path
    unfolded_paths: tuple[Path, ...]


class RedexSet:
    """The reductions available from one state.

    Sites are enumerated eagerly; the communication for a site is only
    performed when it is requested.
    """

    def __init__(self, p: Process):
        self.process = p
        avoid = all_names(p)
        self._unfolded: dict[Path, Process] = {}
        # (path in the state after unfolding, prefix, unfolded recursion path or None)
        options: list[tuple[Path, Process, Path | None]] = []
        for path, q in active_positions(p):
            if isinstance(q, Rec):
                u = unfold(q, avoid)
                self._unfolded[path] = u
                for sub, r in active_positions(u):
                    if not isinstance(r, Rec):
                        options.append((path + sub, r, path))
            else:
                options.append((path, q, None))
        self.sites: list[RedexSite] = []
        for ipath, inp, irec in options:
            if not isinstance(inp, Inp):
                continue
            for opath, outp, orec in options:
                if isinstance(outp, Out) and _dual_subjects(inp.subject, outp.subject):
                    recs = tuple(sorted({r for r in (irec, orec) if r is not None}))
                    self.sites.append(RedexSite(ipath, opath, recs))
        self._done: dict[int, Redex] = {}

    def __len__(self) -> int:
        return len(self.sites)

    def __getitem__(self, i: int) -> Redex:
        if i < 0:
            i += len(self.sites)
        if i not in self._done:
            site = self.sites[i]
            state = self.process
            for r in site.unfolded_paths:
                state = _replace(state, r, self._unfolded[r])
            self._done[i] = _communicate(self.process, state, site.input_path, site.output_path, site.unfolded_paths)
        return self._done[i]

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def redexes(p: Process) -> list[Redex]:
    """Every annotated reduction of ``p``, at most one unfolding per participant."""
    return list(RedexSet(p))


def _communicate(orig: Process, state: Process, ipath: Path, opath: Path, recs: tuple[Path, ...]) -> Redex:
    unfolded_state = state
    inp = _get(state, ipath)
    outp = _get(state, opath)
    assert isinstance(inp, Inp) and isinstance(outp, Out)
    k = 0
    while k < min(len(ipath), len(opath)) and ipath[k] == opath[k]:
        k += 1
    lca = ipath[:k]
    y = outp.obj

    # scope extrusion of the sent name: lift its restriction to the common ancestor
    for depth in range(len(opath) - 1, k - 1, -1):
        node = _get(state, opath[:depth])
        if isinstance(node, New) and node.name == y.base:
            state = _replace(state, opath[:depth], node.body)
            opath = opath[:depth] + opath[depth + 1:]
            state = _replace(state, lca, New(node.name, node.annot, _get(state, lca)))
            ipath = lca + (0,) + ipath[k:]
            opath = lca + (0,) + opath[k:]
            break

    inp = _get(state, ipath)
    outp = _get(state, opath)
    avoid = all_names(state)
    state = _replace(state, ipath, substitute_name(inp.body, inp.obj, y, avoid))
    state = _replace(state, opath, outp.body)

    a = inp.subject.base
    bound, before, after, stuck = False, None, None, False
    for depth in range(len(lca), -1, -1):
        node = _get(state, lca[:depth])
        if isinstance(node, New) and node.name == a:
            bound, before = True, node.annot
            after = before
            if before is not None:
                try:
                    after = type_successor(before)
                except UndefinedSuccessor:
                    stuck = True
            state = _replace(state, lca[:depth], New(a, after, node.body))
            break

    vars_ = tuple(_get(orig, r).var for r in recs)
    return Redex(
        label=ReductionLabel(a, unfolded=bool(recs)),
        result=state,
        input_path=ipath,
        output_path=opath,
        unfolded_paths=recs,
        unfolded_vars=vars_,
        unfolded_state=unfolded_state if recs else None,
        input_subject=inp.subject,
        output_subject=outp.subject,
        bound_subject=bound,
        annotation_before=before,
        annotation_after=after,
        stuck_annotation=stuck,
    )


class NoRedex(IndexError):
    pass


def step(p: Process, index: int = 0) -> Process:
    rs = RedexSet(p)
    if not 0 <= index < len(rs):
        raise NoRedex(f"redex index {index} out of range ({len(rs)} redexes)")
    return rs[index].result


@dataclass(frozen=True)
class TraceStep:
    index: int
    redex: Redex
    state: Process


@dataclass(frozen=True)
class Trace:
    initial: Process
    steps: tuple[TraceStep, ...]
    policy: str
    seed: int | None = None

    @property
    def states(self) -> list[Process]:
        return [self.initial] + [s.state for s in self.steps]

    def __len__(self) -> int:
        return len(self.steps)

    def lines(self) -> list[str]:
        from .parser import print_process

        return [
            f"{s.index}\t{s.redex.label}\t{s.redex.description}\t{print_process(s.state)}"
            for s in self.steps
        ]


POLICIES = ("leftmost", "random", "fair")


def run(p: Process, max_steps: int, policy: str = "leftmost", seed: int = 0) -> Trace:
    """Execute up to ``max_steps`` reductions, stopping early when stuck.

    ``fair`` cycles through the redex list, ``random`` draws from a generator
    seeded with ``seed``.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    if not is_recursion_closed(p):
        raise ValueError("process is not recursion-closed")
    rng = random.Random(seed)
    steps = []
    state = p
    for i in range(max_steps):
        rs = RedexSet(state)
        if not len(rs):
            break
        if policy == "leftmost":
            chosen = rs[0]
        elif policy == "random":
            chosen = rs[rng.randrange(len(rs))]
        else:
            chosen = rs[i % len(rs)]
        state = chosen.result
        steps.append(TraceStep(i, chosen, state))
    return Trace(p, tuple(steps), policy, seed if policy == "random" else None)


def internal_env(p: Process) -> dict[PName, Type | None]:
    """Annotation of every restriction-bound name, active or not."""
    out: dict[PName, Type | None] = {}
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, New):
            out[PName(q.name, EPS)] = q.annot
        match q:
            case Par(left, right):
                stack.extend((right, left))
            case New(_, _, body) | Rec(_, body) | Inp(_, _, body) | Out(_, _, body):
                stack.append(body)
    return out


__all__ = [
    "Chan",
    "NoRedex",
    "Pair",
    "Redex",
    "RedexSet",
    "RedexSite",
    "Trace",
    "TraceStep",
    "UnfoldingContext",
    "Var",
    "active_positions",
    "internal_env",
    "redexes",
    "run",
    "step",
    "unfolding_contexts",
    "unfoldings",
]
