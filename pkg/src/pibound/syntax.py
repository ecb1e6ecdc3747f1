"""Abstract syntax of the polarized pi-calculus with recursion and typed restriction.

Processes and types are immutable dataclasses.  Names are plain strings;
freshened names carry a ``#k`` suffix (``r`` -> ``r#1``, ``r#2``, ...).
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Union


class Polarity(enum.Enum):
    PLUS = "+"
    MINUS = "-"
    EPS = ""

    @property
    def dual(self) -> "Polarity":
        if self is Polarity.PLUS:
            return Polarity.MINUS
        if self is Polarity.MINUS:
            return Polarity.PLUS
        return Polarity.EPS

    def __repr__(self) -> str:
        return f"Polarity.{self.name}"


PLUS, MINUS, EPS = Polarity.PLUS, Polarity.MINUS, Polarity.EPS


@dataclass(frozen=True)
class PName:
    """A name occurrence tagged with a polarity."""

    base: str
    pol: Polarity = EPS

    def __str__(self) -> str:
        return self.base + self.pol.value

    # enum members are not orderable; order on the printed form instead
    def __lt__(self, other: "PName") -> bool:
        return (self.base, self.pol.value) < (other.base, other.pol.value)


def pname(text: str) -> PName:
    """``pname("a+")`` -> ``PName("a", PLUS)``."""
    if text.endswith("+"):
        return PName(text[:-1], PLUS)
    if text.endswith("-"):
        return PName(text[:-1], MINUS)
    return PName(text, EPS)


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class End:
    def __str__(self) -> str:
        return "end"


@dataclass(frozen=True)
class Send:
    payload: "Type"
    cont: "Type"


@dataclass(frozen=True)
class Recv:
    payload: "Type"
    cont: "Type"


@dataclass(frozen=True)
class Pair:
    left: "Type"
    right: "Type"


@dataclass(frozen=True)
class Chan:
    payload: "Type"


Type = Union[End, Send, Recv, Pair, Chan]
END = End()


class UndefinedSuccessor(ValueError):
    """Raised when a type has no successor (no communication is possible)."""


def is_endpoint(t: Type) -> bool:
    return isinstance(t, (End, Send, Recv))


def dual(s: Type) -> Type:
    match s:
        case End():
            return END
        case Send(payload, cont):
            return Recv(payload, dual(cont))
        case Recv(payload, cont):
            return Send(payload, dual(cont))
    raise TypeError(f"duality is only defined on endpoint types, got {s}")


def is_balanced_pair(t: Type) -> bool:
    if not isinstance(t, Pair) or not is_endpoint(t.right):
        return False
    return t.left == dual(t.right)


def type_successor(t: Type) -> Type:
    """The annotation after one communication on a channel of type ``t``."""
    match t:
        case Chan():
            return t
        case Pair(Send(_, c1), Recv(_, c2)) | Pair(Recv(_, c1), Send(_, c2)):
            return Pair(c1, c2)
    raise UndefinedSuccessor(f"type {t} has no successor")


def type_depth(t: Type) -> int:
    match t:
        case End():
            return 0
        case Send(_, cont) | Recv(_, cont):
            return 1 + type_depth(cont)
        case Pair(left, right):
            return max(type_depth(left), type_depth(right))
    return 0


# ---------------------------------------------------------------------------
# Processes


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Inp:
    subject: PName
    obj: str
    body: "Process"


@dataclass(frozen=True)
class Out:
    subject: PName
    obj: PName
    body: "Process"


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class New:
    name: str
    annot: Type | None
    body: "Process"


@dataclass(frozen=True)
class Rec:
    var: str
    body: "Process"


@dataclass(frozen=True)
class Var:
    var: str


Process = Union[Nil, Inp, Out, Par, New, Rec, Var]


def _memo_hash(cls):
    # terms are immutable and get hashed repeatedly (oracle sets, caches), so
    # the structural hash is computed once per node
    plain = cls.__hash__

    def __hash__(self):
        d = self.__dict__
        h = d.get("_hash")
        if h is None:
            h = plain(self)
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = __hash__
    return cls


for _cls in (Nil, Inp, Out, Par, New, Rec, Var):
    _memo_hash(_cls)

NIL = Nil()


@dataclass(frozen=True)
class ReductionLabel:
    subject: str
    unfolded: bool = False

    def __str__(self) -> str:
        return "{Rec," + self.subject + "}" if self.unfolded else "{" + self.subject + "}"


def par(*procs: Process) -> Process:
    """Left-nested parallel composition; ``par()`` is ``0``."""
    if not procs:
        return NIL
    out = procs[0]
    for p in procs[1:]:
        out = Par(out, p)
    return out


def par_components(p: Process) -> list[Process]:
    """Flatten nested ``Par`` nodes into a list of operands."""
    out: list[Process] = []
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Par):
            stack.append(q.right)
            stack.append(q.left)
        else:
            out.append(q)
    return out


def children(p: Process) -> tuple[Process, ...]:
    match p:
        case Inp(_, _, body) | Out(_, _, body) | New(_, _, body) | Rec(_, body):
            return (body,)
        case Par(left, right):
            return (left, right)
    return ()


def subterms(p: Process) -> Iterator[Process]:
    stack = [p]
    while stack:
        q = stack.pop()
        yield q
        stack.extend(children(q))


def size(p: Process) -> int:
    return sum(1 for _ in subterms(p))


# ---------------------------------------------------------------------------
# Names


def free_pnames(p: Process) -> frozenset[PName]:
    """Free polarized name occurrences of ``p``."""
    cached = p.__dict__.get("_fpn")
    if cached is None:
        cached = _free_pnames(p)
        object.__setattr__(p, "_fpn", cached)
    return cached


def _free_pnames(p: Process) -> frozenset[PName]:
    match p:
        case Nil() | Var():
            return frozenset()
        case Inp(subj, obj, body):
            return frozenset({subj}) | frozenset(n for n in free_pnames(body) if n.base != obj)
        case Out(subj, obj, body):
            return frozenset({subj, obj}) | free_pnames(body)
        case Par(left, right):
            return free_pnames(left) | free_pnames(right)
        case New(x, _, body):
            return frozenset(n for n in free_pnames(body) if n.base != x)
        case Rec(_, body):
            return free_pnames(body)
    raise TypeError(p)


def free_names(p: Process) -> frozenset[str]:
    cached = p.__dict__.get("_fn")
    if cached is None:
        cached = frozenset(n.base for n in free_pnames(p))
        object.__setattr__(p, "_fn", cached)
    return cached


def bound_names(p: Process) -> frozenset[str]:
    return frozenset(binder_list(p))


def binder_list(p: Process) -> list[str]:
    """Every binding occurrence of a name, with repetitions."""
    out = []
    for q in subterms(p):
        if isinstance(q, Inp):
            out.append(q.obj)
        elif isinstance(q, New):
            out.append(q.name)
    return out


def rec_binders(p: Process) -> list[str]:
    return [q.var for q in subterms(p) if isinstance(q, Rec)]


def free_recvars(p: Process) -> frozenset[str]:
    cached = p.__dict__.get("_frv")
    if cached is None:
        cached = _free_recvars(p)
        object.__setattr__(p, "_frv", cached)
    return cached


def _free_recvars(p: Process) -> frozenset[str]:
    match p:
        case Var(x):
            return frozenset({x})
        case Rec(x, body):
            return free_recvars(body) - {x}
    return frozenset().union(*(free_recvars(c) for c in children(p)))


def all_names(p: Process) -> set[str]:
    """Every name and recursion variable mentioned anywhere in ``p``."""
    out: set[str] = set()
    for q in subterms(p):
        match q:
            case Inp(subj, obj, _):
                out.update((subj.base, obj))
            case Out(subj, obj, _):
                out.update((subj.base, obj.base))
            case New(x, _, _):
                out.add(x)
            case Rec(x, _) | Var(x):
                out.add(x)
    return out


def base_of(name: str) -> str:
    return name.split("#", 1)[0]


def fresh(name: str, avoid: set[str]) -> str:
    """Smallest ``base#k`` not in ``avoid``; ``avoid`` is updated in place."""
    base = base_of(name)
    k = 1
    while f"{base}#{k}" in avoid:
        k += 1
    out = f"{base}#{k}"
    avoid.add(out)
    return out


# ---------------------------------------------------------------------------
# Substitution


def _subst_occ(n: PName, x: str, y: PName) -> PName:
    if n.base != x:
        return n
    if y.pol is EPS and n.pol is not EPS:
        return PName(y.base, n.pol)
    return y


def substitute_name(p: Process, x: str, y: PName, avoid: set[str] | None = None) -> Process:
    """Capture-avoiding ``p{y/x}``.

    Occurrences of ``x`` take the polarity of ``y``; when ``y`` is unpolarized
    a polarized occurrence keeps its own polarity.
    """
    if x not in free_names(p):
        return p
    if avoid is None:
        avoid = all_names(p) | {x, y.base}
    return _subst(p, x, y, avoid)


def _subst(p: Process, x: str, y: PName, avoid: set[str]) -> Process:
    match p:
        case Nil() | Var():
            return p
        case Out(subj, obj, body):
            return Out(_subst_occ(subj, x, y), _subst_occ(obj, x, y), _subst(body, x, y, avoid))
        case Inp(subj, obj, body):
            subj = _subst_occ(subj, x, y)
            if obj == x:
                return Inp(subj, obj, body)
            if obj == y.base and x in free_names(body):
                new = fresh(obj, avoid)
                body = _subst(body, obj, PName(new), avoid)
                obj = new
            return Inp(subj, obj, _subst(body, x, y, avoid))
        case New(z, annot, body):
            if z == x:
                return p
            if z == y.base and x in free_names(body):
                new = fresh(z, avoid)
                body = _subst(body, z, PName(new), avoid)
                z = new
            return New(z, annot, _subst(body, x, y, avoid))
        case Par(left, right):
            return Par(_subst(left, x, y, avoid), _subst(right, x, y, avoid))
        case Rec(v, body):
            return Rec(v, _subst(body, x, y, avoid))
    raise TypeError(p)


def freshen_binders(p: Process, avoid: set[str]) -> Process:
    """Rename every binder of ``p`` (names and recursion variables) to a fresh name."""
    match p:
        case Nil() | Var():
            return p
        case Inp(subj, obj, body):
            new = fresh(obj, avoid)
            body = _subst(body, obj, PName(new), avoid) if obj in free_names(body) else body
            return Inp(subj, new, freshen_binders(body, avoid))
        case Out(subj, obj, body):
            return Out(subj, obj, freshen_binders(body, avoid))
        case New(x, annot, body):
            new = fresh(x, avoid)
            body = _subst(body, x, PName(new), avoid) if x in free_names(body) else body
            return New(new, annot, freshen_binders(body, avoid))
        case Par(left, right):
            return Par(freshen_binders(left, avoid), freshen_binders(right, avoid))
        case Rec(v, body):
            new = fresh(v, avoid)
            body = _rename_recvar(body, v, new)
            return Rec(new, freshen_binders(body, avoid))
    raise TypeError(p)


def _rename_recvar(p: Process, old: str, new: str) -> Process:
    return _subst_rec(p, old, Var(new), None)


def substitute_recvar(p: Process, var: str, q: Process, avoid: set[str] | None = None) -> Process:
    """``p[q/var]`` with the bound names of each inserted copy of ``q`` freshened."""
    if avoid is None:
        avoid = all_names(p) | all_names(q)
    return _subst_rec(p, var, q, avoid)


def _subst_rec(p: Process, var: str, q: Process, avoid: set[str] | None) -> Process:
    match p:
        case Var(v):
            if v != var:
                return p
            return q if avoid is None else freshen_binders(q, avoid)
        case Nil():
            return p
        case Rec(v, body):
            if v == var:
                return p
            return Rec(v, _subst_rec(body, var, q, avoid))
    if var not in free_recvars(p):
        return p
    if avoid is not None:
        p = _avoid_capture(p, free_names(q), avoid)
    match p:
        case Inp(subj, obj, body):
            return Inp(subj, obj, _subst_rec(body, var, q, avoid))
        case Out(subj, obj, body):
            return Out(subj, obj, _subst_rec(body, var, q, avoid))
        case New(x, annot, body):
            return New(x, annot, _subst_rec(body, var, q, avoid))
        case Par(left, right):
            return Par(_subst_rec(left, var, q, avoid), _subst_rec(right, var, q, avoid))
    raise TypeError(p)


def _avoid_capture(p: Process, names: frozenset[str], avoid: set[str]) -> Process:
    match p:
        case Inp(subj, obj, body) if obj in names:
            new = fresh(obj, avoid)
            return Inp(subj, new, _subst(body, obj, PName(new), avoid))
        case New(x, annot, body) if x in names:
            new = fresh(x, avoid)
            return New(new, annot, _subst(body, x, PName(new), avoid))
    return p


def unfold(rec: Rec, avoid: set[str] | None = None) -> Process:
    """One unfolding ``mu X.P > P[mu X.P/X]``; inserted copies get fresh binders."""
    if avoid is None:
        avoid = all_names(rec)
    return substitute_recvar(rec.body, rec.var, rec, avoid)


def make_distinct(p: Process) -> Process:
    """Rename binders so that all bound names (and recursion binders) are pairwise
    distinct and distinct from the free names.  Already-distinct terms are returned
    unchanged."""
    seen: set[str] = set(free_names(p)) | set(free_recvars(p))
    avoid = all_names(p)

    def go(q: Process) -> Process:
        match q:
            case Nil() | Var():
                return q
            case Inp(subj, obj, body):
                if obj in seen:
                    new = fresh(obj, avoid)
                    body = _subst(body, obj, PName(new), avoid)
                    obj = new
                seen.add(obj)
                return Inp(subj, obj, go(body))
            case Out(subj, obj, body):
                return Out(subj, obj, go(body))
            case New(x, annot, body):
                if x in seen:
                    new = fresh(x, avoid)
                    body = _subst(body, x, PName(new), avoid)
                    x = new
                seen.add(x)
                return New(x, annot, go(body))
            case Par(left, right):
                return Par(go(left), go(right))
            case Rec(v, body):
                if v in seen:
                    new = fresh(v, avoid)
                    body = _rename_recvar(body, v, new)
                    v = new
                seen.add(v)
                return Rec(v, go(body))
        raise TypeError(q)

    return go(p)


# ---------------------------------------------------------------------------
# Well-formedness


def is_guarded(p: Process) -> bool:
    """Every recursion variable occurs underneath an input or output prefix of
    its binder's body."""

    def unguarded(q: Process) -> frozenset[str]:
        match q:
            case Var(v):
                return frozenset({v})
            case Inp() | Out() | Nil():
                return frozenset()
            case Par(left, right):
                return unguarded(left) | unguarded(right)
            case New(_, _, body):
                return unguarded(body)
            case Rec(v, body):
                return unguarded(body) - {v}
        raise TypeError(q)

    for q in subterms(p):
        if isinstance(q, Rec) and q.var in unguarded(q.body):
            return False
    return True


def is_recursion_closed(p: Process) -> bool:
    binders = rec_binders(p)
    return not free_recvars(p) and len(binders) == len(set(binders))


def has_distinct_names(p: Process) -> bool:
    binders = binder_list(p)
    return len(binders) == len(set(binders)) and not (set(binders) & free_names(p))


def alpha_equiv(p: Process, q: Process) -> bool:
    """Equality up to renaming of bound names and recursion variables."""

    def go(p: Process, q: Process, env: dict[str, str], renv: dict[str, str]) -> bool:
        def same(a: PName, b: PName) -> bool:
            return a.pol is b.pol and env.get(a.base, a.base) == b.base

        match p, q:
            case Nil(), Nil():
                return True
            case Var(x), Var(y):
                return renv.get(x, x) == y
            case Inp(s1, o1, b1), Inp(s2, o2, b2):
                return same(s1, s2) and go(b1, b2, {**env, o1: o2}, renv)
            case Out(s1, o1, b1), Out(s2, o2, b2):
                return same(s1, s2) and same(o1, o2) and go(b1, b2, env, renv)
            case Par(l1, r1), Par(l2, r2):
                return go(l1, l2, env, renv) and go(r1, r2, env, renv)
            case New(x, t1, b1), New(y, t2, b2):
                return t1 == t2 and go(b1, b2, {**env, x: y}, renv)
            case Rec(x, b1), Rec(y, b2):
                return go(b1, b2, env, {**renv, x: y})
        return False

    return go(p, q, {}, {})


def count_recs(p: Process) -> int:
    return sum(1 for q in subterms(p) if isinstance(q, Rec))


def recvar_occurrences(p: Process) -> Counter:
    return Counter(q.var for q in subterms(p) if isinstance(q, Var))


def restrictions(p: Process) -> Iterable[New]:
    return (q for q in subterms(p) if isinstance(q, New))
