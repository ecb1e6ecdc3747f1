"""Structural congruence: normal forms, normalization and the nesting metrics."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

from .syntax import (
    NIL,
    Chan,
    Inp,
    New,
    Nil,
    Out,
    Par,
    Process,
    Rec,
    Type,
    Var,
    free_names,
    par,
)

# connected groups with more restricted names than this are ordered greedily
EXACT_LIMIT = 8


def nest(p: Process) -> int:
    match p:
        case Nil() | Var() | Inp() | Out():
            return 0
        case New(_, _, body):
            return 1 + nest(body)
        case Par(left, right):
            return max(nest(left), nest(right))
        case Rec(_, body):
            return nest(body)
    raise TypeError(p)


def normalize(p: Process) -> Process:
    """Erase every restriction whose name is not free in its scope."""
    match p:
        case Nil() | Var():
            return p
        case Inp(s, o, body):
            return Inp(s, o, normalize(body))
        case Out(s, o, body):
            return Out(s, o, normalize(body))
        case Par(left, right):
            return Par(normalize(left), normalize(right))
        case Rec(v, body):
            return Rec(v, normalize(body))
        case New(x, annot, body):
            body = normalize(body)
            return New(x, annot, body) if x in free_names(body) else body
    raise TypeError(p)


def _flatten(p: Process, restr: list[tuple[str, Type | None]], atoms: list[Process], inner) -> None:
    match p:
        case Nil():
            return
        case Par(left, right):
            _flatten(left, restr, atoms, inner)
            _flatten(right, restr, atoms, inner)
        case New(x, annot, body):
            restr.append((x, annot))
            _flatten(body, restr, atoms, inner)
        case Rec(v, body):
            atoms.append(Rec(v, inner(body)))
        case _:
            atoms.append(p)


def active_soup(p: Process) -> tuple[list[tuple[str, Type | None]], list[Process]]:
    """Active restrictions and the non-parallel, non-restriction components of ``p``."""
    restr: list[tuple[str, Type | None]] = []
    atoms: list[Process] = []
    _flatten(p, restr, atoms, lambda b: b)
    return restr, atoms


def inner_normal_form(p: Process) -> Process:
    """Push every active restriction as far inward as possible.

    Among the scope-minimal arrangements the one with least nesting is picked;
    restrictions of unused names disappear.
    """
    restr: list[tuple[str, Type | None]] = []
    atoms: list[Process] = []
    _flatten(p, restr, atoms, inner_normal_form)
    return _place(restr, atoms)


def _place(restr: list[tuple[str, Type | None]], atoms: list[Process]) -> Process:
    annots = dict(restr)
    order = {x: i for i, (x, _) in enumerate(restr)}
    fns = [free_names(a) & annots.keys() for a in atoms]
    weights = [nest(a) for a in atoms]
    memo: dict[tuple[frozenset[str], tuple[int, ...]], tuple[int, Process]] = {}

    def groups(names: frozenset[str], idxs: tuple[int, ...]) -> list[tuple[frozenset[str], tuple[int, ...]]]:
        parent = {i: i for i in idxs}

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        owner: dict[str, int] = {}
        for i in idxs:
            for x in fns[i] & names:
                if x in owner:
                    parent[find(i)] = find(owner[x])
                else:
                    owner[x] = i
        comps: dict[int, list[int]] = {}
        for i in idxs:
            comps.setdefault(find(i), []).append(i)
        out = []
        for members in comps.values():
            used = frozenset().union(*(fns[i] & names for i in members))
            out.append((used, tuple(members)))
        out.sort(key=lambda g: g[1][0])
        return out

    def build(names: frozenset[str], idxs: tuple[int, ...]) -> tuple[int, Process]:
        key = (names, idxs)
        if key in memo:
            return memo[key]
        depth = 0
        parts = []
        for used, members in groups(names, idxs):
            if not used:
                depth = max([depth] + [weights[i] for i in members])
                parts.extend(atoms[i] for i in members)
                continue
            if len(used) <= EXACT_LIMIT:
                candidates = sorted(used, key=order.__getitem__)
            else:
                count = {x: sum(1 for i in members if x in fns[i]) for x in used}
                candidates = [max(sorted(used, key=order.__getitem__), key=count.__getitem__)]
            best = None
            for x in candidates:
                d, q = build(used - {x}, members)
                if best is None or d + 1 < best[0]:
                    best = (d + 1, New(x, annots[x], q))
            depth = max(depth, best[0])
            parts.append(best[1])
        result = (depth, par(*parts))
        memo[key] = result
        return result

    return build(frozenset(annots), tuple(range(len(atoms))))[1]


def outer_normal_form(p: Process) -> Process:
    """Pull every active restriction to the top level; unused ones are erased.

    Restrictions inside recursion bodies cannot cross the binder and are
    normalized in place.
    """
    restr: list[tuple[str, Type | None]] = []
    atoms: list[Process] = []
    _flatten(p, restr, atoms, outer_normal_form)
    body = par(*atoms)
    used = free_names(body)
    for x, annot in reversed(restr):
        if x in used:
            body = New(x, annot, body)
    return body


def depth_estimate(p: Process) -> int:
    return nest(inner_normal_form(normalize(p)))


def active_restrictions(p: Process) -> list[New]:
    """Restrictions not underneath a prefix (recursion bodies included)."""
    out = []
    stack = [p]
    while stack:
        q = stack.pop()
        match q:
            case New(_, _, body):
                out.append(q)
                stack.append(body)
            case Par(left, right):
                stack.extend((right, left))
            case Rec(_, body):
                stack.append(body)
    return out


def restriction_count(p: Process) -> int:
    """Number of active restrictions after erasing superfluous ones."""
    return len(active_restrictions(normalize(p)))


def width_profile(p: Process) -> dict[str, int]:
    """For each active bound name, the number of parallel components of its
    scope (in inner normal form) in which it occurs."""
    out: dict[str, int] = {}
    for r in active_restrictions(inner_normal_form(normalize(p))):
        comps = _components_under(r.body)
        out[r.name] = sum(1 for c in comps if r.name in free_names(c))
    return out


def session_names(p: Process) -> set[str]:
    """Bound names whose annotation is not an unlimited channel type."""
    return {r.name for r in active_restrictions(p) if not isinstance(r.annot, Chan)}


def _components_under(p: Process) -> list[Process]:
    # a restriction's scope in inner normal form: strip nested restrictions
    # that enclose the whole scope, then split the parallel composition
    _restr, atoms = [], []
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Par):
            stack.extend((q.right, q.left))
        elif isinstance(q, Nil):
            continue
        else:
            atoms.append(q)
    if len(atoms) == 1 and isinstance(atoms[0], New):
        return _components_under(atoms[0].body)
    return atoms


# ---------------------------------------------------------------------------
# Single rewrites on terms, in any context


def _local_rewrites(p: Process):
    match p:
        case Par(left, right):
            yield "Par-1", Par(right, left)
            if isinstance(left, Par):
                yield "Par-2", Par(left.left, Par(left.right, right))
            if isinstance(right, Par):
                yield "Par-2", Par(Par(left, right.left), right.right)
            if isinstance(right, Nil):
                yield "Nil-1", left
            if isinstance(left, New) and left.name not in free_names(right):
                yield "New-2", New(left.name, left.annot, Par(left.body, right))
        case New(x, annot, body):
            if isinstance(body, Nil):
                yield "Nil-2", body
            elif x not in free_names(body):
                yield "Erase", body
            if isinstance(body, New):
                yield "New-1", New(body.name, body.annot, New(x, annot, body.body))
            if isinstance(body, Par):
                if x not in free_names(body.right):
                    yield "New-2", Par(New(x, annot, body.left), body.right)
                if x not in free_names(body.left):
                    yield "New-2", Par(body.left, New(x, annot, body.right))
    if not isinstance(p, Par) or not isinstance(p.right, Nil):
        yield "Nil-1", Par(p, NIL)


def single_rewrites(p: Process) -> list[tuple[str, Process]]:
    """Every term reachable by one congruence axiom (or one erasure of an
    unused restriction) applied at one position of ``p``."""
    out = list(_local_rewrites(p))
    match p:
        case Par(left, right):
            out += [(r, Par(q, right)) for r, q in single_rewrites(left)]
            out += [(r, Par(left, q)) for r, q in single_rewrites(right)]
        case New(x, annot, body):
            out += [(r, New(x, annot, q)) for r, q in single_rewrites(body)]
        case Rec(v, body):
            out += [(r, Rec(v, q)) for r, q in single_rewrites(body)]
        case Inp(s, o, body):
            out += [(r, Inp(s, o, q)) for r, q in single_rewrites(body)]
        case Out(s, o, body):
            out += [(r, Out(s, o, q)) for r, q in single_rewrites(body)]
    return out


def random_rewrite(p: Process, rng) -> tuple[str, Process]:
    return rng.choice(single_rewrites(p))


# ---------------------------------------------------------------------------
# Exhaustive oracle over the congruence axioms.  Terms are canonicalized with
# parallel composition as a multiset; this is independent of the placement
# algorithm above.


def _canon(p: Process):
    match p:
        case Nil():
            return ("par", ())
        case Par():
            return _mk_par([_canon(p.left), _canon(p.right)])
        case New(x, annot, body):
            return ("new", x, annot, _canon(body))
        case Rec(v, body):
            return ("rec", v, _canon(body))
        case Inp(s, o, body):
            return ("pre", "in", s, o, _canon(body))
        case Out(s, o, body):
            return ("pre", "out", s, o, _canon(body))
    return ("var", p.var)


def _mk_par(items) -> tuple:
    flat = []
    for c in items:
        if c[0] == "par":
            flat.extend(c[1])
        else:
            flat.append(c)
    if len(flat) == 1:
        return flat[0]
    return ("par", tuple(sorted(flat, key=repr)))


@lru_cache(maxsize=None)
def _cfn(c) -> frozenset[str]:
    match c[0]:
        case "var":
            return frozenset()
        case "pre" if c[1] == "in":
            return frozenset({c[2].base}) | (_cfn(c[4]) - {c[3]})
        case "pre":
            return frozenset({c[2].base, c[3].base}) | _cfn(c[4])
        case "par":
            return frozenset().union(*(_cfn(x) for x in c[1]))
        case "new":
            return _cfn(c[3]) - {c[1]}
        case "rec":
            return _cfn(c[2])


def _cnest(c) -> int:
    match c[0]:
        case "var" | "pre":
            return 0
        case "par":
            return max((_cnest(x) for x in c[1]), default=0)
        case "new":
            return 1 + _cnest(c[3])
        case "rec":
            return _cnest(c[2])


def _rewrites(c, deep: bool = False):
    """One-rule successors of canonical term ``c``; ``deep`` also rewrites
    underneath prefixes."""
    kind = c[0]
    if kind == "new":
        _, x, t, b = c
        if b[0] == "new":
            yield ("new", b[1], b[2], ("new", x, t, b[3]))  # New-1
        if b == ("par", ()):
            yield b  # Nil-2
        elif x not in _cfn(b):
            yield b  # derived from Nil-1, New-2, Nil-2
        if b[0] == "par":
            comps = b[1]
            for i, comp in enumerate(comps):
                if x not in _cfn(comp):
                    rest = comps[:i] + comps[i + 1:]
                    yield _mk_par([("new", x, t, _mk_par(rest)), comp])  # New-2, right to left
        for b2 in _rewrites(b, deep):
            yield ("new", x, t, b2)
    elif kind == "par":
        comps = c[1]
        for i, ci in enumerate(comps):
            if ci[0] == "new":
                for j, cj in enumerate(comps):
                    if i != j and ci[1] not in _cfn(cj):
                        rest = [comps[k] for k in range(len(comps)) if k not in (i, j)]
                        yield _mk_par(rest + [("new", ci[1], ci[2], _mk_par([ci[3], cj]))])  # New-2
            for ci2 in _rewrites(ci, deep):
                yield _mk_par(list(comps[:i]) + [ci2] + list(comps[i + 1:]))
    elif kind == "rec":
        for b2 in _rewrites(c[2], deep):
            yield ("rec", c[1], b2)
    elif kind == "pre" and deep:
        for b2 in _rewrites(c[4], deep):
            yield c[:4] + (b2,)


def congruence_class(p: Process, budget: int, deep: bool = False) -> set | None:
    """Canonical forms of every term reachable by congruence rewrites, or
    ``None`` when more than ``budget`` states would be needed.  Without
    ``deep`` the terms under prefixes are left alone, which is all the
    nesting depth can see."""
    start = _canon(p)
    seen = {start}
    queue = deque([start])
    while queue:
        c = queue.popleft()
        for d in _rewrites(c, deep):
            if d not in seen:
                if len(seen) >= budget:
                    return None
                seen.add(d)
                queue.append(d)
    return seen


def depth_oracle(p: Process, budget: int = 50_000) -> int | None:
    """Exact minimum nesting over the congruence class, by exhaustive search."""
    states = congruence_class(p, budget)
    if states is None:
        return None
    return min(_cnest(c) for c in states)


def congruent(p: Process, q: Process, budget: int = 50_000) -> bool | None:
    """Decide congruence by search; ``None`` if the budget runs out."""
    states = congruence_class(p, budget, deep=True)
    if states is None:
        return None
    return _canon(q) in states


@dataclass(frozen=True)
class DepthReport:
    nest_raw: int
    depth_estimate: int
    oracle_depth: int | None
    restriction_count_normalized: int

    def as_dict(self) -> dict:
        return {
            "nest_raw": self.nest_raw,
            "depth_estimate": self.depth_estimate,
            "oracle_depth": self.oracle_depth,
            "restriction_count_normalized": self.restriction_count_normalized,
        }


def depth_report(p: Process, oracle_budget: int | None = None) -> DepthReport:
    return DepthReport(
        nest_raw=nest(p),
        depth_estimate=depth_estimate(p),
        oracle_depth=None if oracle_budget is None else depth_oracle(p, oracle_budget),
        restriction_count_normalized=restriction_count(p),
    )


__all__ = [
    "DepthReport",
    "NIL",
    "active_restrictions",
    "active_soup",
    "congruence_class",
    "congruent",
    "depth_estimate",
    "depth_oracle",
    "depth_report",
    "inner_normal_form",
    "nest",
    "normalize",
    "outer_normal_form",
    "random_rewrite",
    "single_rewrites",
    "restriction_count",
    "session_names",
    "width_profile",
]
