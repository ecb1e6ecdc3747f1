"""Type environments and the two session type checkers.

``check_depth`` implements the rules for depth-boundedness, ``check_name`` the
restricted variant for name-boundedness.  Both are syntax directed; the only
choice point is where a ``Par`` sends bindings that neither component
mentions.  Acceptance returns a :class:`Derivation`, rejection raises
:class:`CheckError`.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterator

from .syntax import (
    END,
    EPS,
    MINUS,
    PLUS,
    Chan,
    End,
    Inp,
    New,
    Nil,
    Out,
    Pair,
    Par,
    PName,
    Process,
    Rec,
    Recv,
    Send,
    Type,
    Var,
    dual,
    free_pnames,
    free_recvars,
    is_balanced_pair,
    is_endpoint,
)


class TypeEnv(Mapping):
    """Immutable finite map from polarized names to types."""

    __slots__ = ("_d", "_hash")

    def __init__(self, items: Mapping[PName, Type] | None = None, **kw):
        d = dict(items or {})
        for k, v in kw.items():
            d[PName(k)] = v
        self._d = d
        self._hash = None

    def __getitem__(self, k: PName) -> Type:
        return self._d[k]

    def __iter__(self) -> Iterator[PName]:
        return iter(self._d)

    def __len__(self) -> int:
        return len(self._d)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Mapping):
            return dict(self._d) == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        from .parser import print_type

        body = ", ".join(f"{k}: {print_type(t)}" for k, t in sorted(self._d.items()))
        return "{" + body + "}"

    def set(self, k: PName, t: Type) -> "TypeEnv":
        d = dict(self._d)
        d[k] = t
        return TypeEnv(d)

    def remove(self, k: PName) -> "TypeEnv":
        d = dict(self._d)
        del d[k]
        return TypeEnv(d)

    def restrict(self, keys) -> "TypeEnv":
        return TypeEnv({k: v for k, v in self._d.items() if k in keys})


class RecEnv(Mapping):
    """Immutable finite map from recursion variables to type environments."""

    __slots__ = ("_d",)

    def __init__(self, items: Mapping[str, TypeEnv] | None = None):
        self._d = dict(items or {})

    def __getitem__(self, k: str) -> TypeEnv:
        return self._d[k]

    def __iter__(self):
        return iter(self._d)

    def __len__(self) -> int:
        return len(self._d)

    def __hash__(self) -> int:
        return hash(frozenset(self._d.items()))

    def __eq__(self, other) -> bool:
        if isinstance(other, Mapping):
            return dict(self._d) == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        return "{" + ", ".join(f"{k}: {v!r}" for k, v in sorted(self._d.items())) + "}"

    def set(self, k: str, g: TypeEnv) -> "RecEnv":
        d = dict(self._d)
        d[k] = g
        return RecEnv(d)


EMPTY_ENV = TypeEnv()
EMPTY_RECENV = RecEnv()


class EnvError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Predicates


def is_unlimited_type(t: Type) -> bool:
    return isinstance(t, (Chan, End))


def is_terminal_type(t: Type) -> bool:
    return t == END or t == Pair(END, END)


def is_unlimited(g: Mapping[PName, Type]) -> bool:
    return all(is_unlimited_type(t) for t in g.values())


def is_linear(g: Mapping[PName, Type]) -> bool:
    return not any(isinstance(t, Chan) for t in g.values())


def is_terminal(g: Mapping[PName, Type]) -> bool:
    return all(is_terminal_type(t) for t in g.values())


def lin_part(g: Mapping[PName, Type]) -> TypeEnv:
    return TypeEnv({k: t for k, t in g.items() if not isinstance(t, Chan)})


def is_balanced(g: Mapping[PName, Type]) -> bool:
    """Pairs are balanced and the two polarized ends of a free session name, when
    both present, carry dual types."""
    for k, t in g.items():
        if isinstance(t, Pair) and not is_balanced_pair(t):
            return False
        if is_endpoint(t) and k.pol is not EPS:
            other = g.get(PName(k.base, k.pol.dual))
            if other is not None and (not is_endpoint(other) or other != dual(t)):
                return False
    return True


def is_sun(t: Type) -> bool:
    """Unlimited channel towers ``#...#end``."""
    return isinstance(t, Chan) and (t.payload == END or is_sun(t.payload))


def is_slin(t: Type) -> bool:
    match t:
        case End():
            return True
        case Send(payload, cont) | Recv(payload, cont):
            return (is_tlin(payload) or is_sun(payload)) and is_slin(cont)
    return False


def is_tlin(t: Type) -> bool:
    return isinstance(t, Pair) and is_slin(t.left) and (is_slin(t.right) or is_sun(t.right))


def nb_type_wellformed(t: Type) -> bool:
    """Membership in the restricted type language of the name-bounded system."""
    return is_tlin(t) or is_sun(t)


def is_limited(g: Mapping[PName, Type]) -> bool:
    return all(is_balanced_pair(t) for t in g.values())


def is_skew(g: Mapping[PName, Type]) -> bool:
    # linear part plus a part of mixed (T_lin, T_un) pairs; mixed pairs are
    # themselves non-Chan, so the split exists exactly when no binding is Chan
    lin = {k for k, t in g.items() if is_linear({k: t}) and not _is_mixed(t)}
    mixed = {k for k, t in g.items() if _is_mixed(t)}
    return len(lin) + len(mixed) == len(g)


def _is_mixed(t: Type) -> bool:
    return isinstance(t, Pair) and is_slin(t.left) and is_sun(t.right)


@dataclass(frozen=True)
class EnvPredicates:
    unlimited: bool
    linear: bool
    terminal: bool
    balanced: bool
    limited: bool
    skew: bool


def env_predicates(g: Mapping[PName, Type]) -> EnvPredicates:
    return EnvPredicates(
        unlimited=is_unlimited(g),
        linear=is_linear(g),
        terminal=is_terminal(g),
        balanced=is_balanced(g),
        limited=is_limited(g),
        skew=is_skew(g),
    )


# ---------------------------------------------------------------------------
# Environment algebra


def env_add(g1: Mapping[PName, Type], g2: Mapping[PName, Type]) -> TypeEnv:
    """Disjoint union; an unlimited channel may appear on both sides with the
    same type."""
    shared = sorted(k for k in g1 if k in g2 and not (isinstance(g1[k], Chan) and g1[k] == g2[k]))
    if shared:
        raise EnvError("environments overlap on " + ", ".join(map(str, shared)))
    return TypeEnv({**g1, **g2})


def recenv_add(d1: Mapping[str, TypeEnv], d2: Mapping[str, TypeEnv]) -> RecEnv:
    for x in sorted(d1.keys() & d2.keys()):
        if d1[x] != d2[x]:
            raise EnvError(f"recursion environments disagree on {x}")
    return RecEnv({**d2, **d1})


def env_split(
    g: Mapping[PName, Type],
    p1: Process,
    p2: Process,
    unused: str | Mapping[PName, int] = "left",
    share_unlimited: bool = False,
) -> tuple[TypeEnv, TypeEnv]:
    """Partition ``g`` between two parallel components by free-name occurrence.

    Unlimited channels used on both sides go to both; a linear name used on
    both sides is an error.  ``unused`` places the bindings neither side
    mentions: ``"left"``, ``"right"`` or a per-name map to 0/1.  With
    ``share_unlimited`` every unlimited channel goes to both sides.
    """
    f1, f2 = free_pnames(p1), free_pnames(p2)
    left, right = {}, {}
    for k, t in g.items():
        in1, in2 = k in f1, k in f2
        if share_unlimited and isinstance(t, Chan):
            left[k] = right[k] = t
        elif in1 and in2:
            if not isinstance(t, Chan):
                raise EnvError(f"linear name {k} used in both parallel components")
            left[k] = right[k] = t
        elif in1:
            left[k] = t
        elif in2:
            right[k] = t
        else:
            side = unused if isinstance(unused, str) else ("left", "right")[unused[k]]
            (left if side == "left" else right)[k] = t
    return TypeEnv(left), TypeEnv(right)


def nb_pair_add(
    g1: Mapping[PName, Type], d1: Mapping[str, TypeEnv], g2: Mapping[PName, Type], d2: Mapping[str, TypeEnv]
) -> tuple[TypeEnv, RecEnv]:
    """Addition of (environment, recursion environment) pairs in the name system.

    When exactly one side is recursive, the other side must be unlimited and
    the recursive side linear.
    """
    if d1 and d2:
        raise EnvError("both recursion environments are non-empty")
    if d1 or d2:
        for g, d, tag in ((g1, d1, "left"), (g2, d2, "right")):
            if not d and not is_unlimited(g):
                raise EnvError(f"{tag} side is non-recursive but its environment is not unlimited")
            if d and not is_linear(g):
                raise EnvError(f"{tag} side is recursive but its environment is not linear")
    return env_add(g1, g2), recenv_add(d1, d2)


# ---------------------------------------------------------------------------
# Checking


@dataclass(frozen=True)
class Derivation:
    rule: str
    gamma: TypeEnv
    delta: RecEnv
    process: Process
    premises: tuple["Derivation", ...] = ()
    side_conditions: tuple[str, ...] = ()

    def nodes(self) -> Iterator["Derivation"]:
        yield self
        for p in self.premises:
            yield from p.nodes()

    def rules(self) -> list[str]:
        return [n.rule for n in self.nodes()]

    def as_dict(self) -> dict:
        from .parser import print_process

        return {
            "rule": self.rule,
            "gamma": repr(self.gamma),
            "delta": sorted(self.delta),
            "process": print_process(self.process),
            "side_conditions": list(self.side_conditions),
            "premises": [p.as_dict() for p in self.premises],
        }

    def pretty(self, indent: int = 0) -> str:
        from .parser import print_process

        text = print_process(self.process)
        if len(text) > 70:
            text = text[:67] + "..."
        lines = [f"{'  ' * indent}{self.rule}: {self.gamma!r} |- {text}"]
        lines.extend(p.pretty(indent + 1) for p in self.premises)
        return "\n".join(lines)


class CheckError(Exception):
    """Rejection, with every rule tried at the failing subterm and why it failed."""

    def __init__(self, subterm: Process, attempts: list[tuple[str, str]], gamma: TypeEnv | None = None):
        from .parser import print_process

        self.subterm = subterm
        self.attempts = list(attempts) or [("?", "no rule applies")]
        self.gamma = gamma
        text = print_process(subterm)
        if len(text) > 80:
            text = text[:77] + "..."
        why = "; ".join(f"{r}: {c}" for r, c in self.attempts)
        super().__init__(f"cannot type {text}: {why}")

    @property
    def rules(self) -> list[str]:
        return [r for r, _ in self.attempts]

    def as_dict(self) -> dict:
        from .parser import print_process

        return {
            "subterm": print_process(self.subterm),
            "attempts": [{"rule": r, "violated": c} for r, c in self.attempts],
        }


VAR_MODES = ("strict", "lenient")
SYSTEMS = ("depth", "name")
# per Par node, the number of unused bindings for which every placement is tried
MAX_UNUSED_SEARCH = 4


class Checker:
    """Syntax-directed checker for one of the two systems.

    ``var_mode="strict"`` applies the Var rule literally.  ``"lenient"`` lets
    terminal and unlimited bindings escape the domain inclusion, and in
    exchange requires every non-terminal binding captured at the recursion
    binder to be present, with the same type, at the recursive call.  The
    lenient depth checker also treats unlimited channels as copyable: they go
    to both sides of every parallel composition and stay available after
    being sent on a session.
    """

    def __init__(self, system: str = "depth", var_mode: str = "lenient"):
        if system not in SYSTEMS:
            raise ValueError(f"unknown system {system!r}")
        if var_mode not in VAR_MODES:
            raise ValueError(f"unknown var mode {var_mode!r}")
        self.system = system
        self.var_mode = var_mode
        # the name system needs recursive components to stay linear
        self.share_unlimited = system == "depth" and var_mode == "lenient"

    def check(self, gamma: Mapping[PName, Type], delta: Mapping[str, TypeEnv] | None, p: Process) -> Derivation:
        return self._check(TypeEnv(gamma), RecEnv(delta or {}), p, False)

    def accepts(self, gamma: Mapping[PName, Type], p: Process, delta=None) -> bool:
        try:
            self.check(gamma, delta, p)
        except CheckError:
            return False
        return True

    # -- rules
    def _check(self, g: TypeEnv, d: RecEnv, p: Process, under_rec: bool) -> Derivation:
        match p:
            case Nil():
                bad = sorted(k for k, t in g.items() if not is_unlimited_type(t))
                if bad:
                    raise CheckError(p, [("Nil", f"environment not unlimited at {', '.join(map(str, bad))}")], g)
                return Derivation("Nil", g, d, p, (), ("environment unlimited",))
            case Var(x):
                return self._var(g, d, p, x)
            case Rec(x, body):
                if x in d:
                    raise CheckError(p, [("Rec", f"recursion variable {x} already bound")], g)
                prem = self._check(g, d.set(x, g), body, True)
                return Derivation("Rec", g, d, p, (prem,))
            case New():
                return self._new(g, d, p, under_rec)
            case Inp():
                return self._inp(g, d, p, under_rec)
            case Out():
                return self._out(g, d, p, under_rec)
            case Par():
                return self._par(g, d, p, under_rec)
        raise TypeError(p)

    def _var(self, g: TypeEnv, d: RecEnv, p: Var, x: str) -> Derivation:
        if x not in d:
            raise CheckError(p, [("Var", f"{x} not in recursion environment")], g)
        g1 = d[x]
        if self.var_mode == "strict":
            missing = sorted(k for k in g if k not in g1)
        else:
            # unlimited and used-up bindings may be dropped by the recursive call
            missing = sorted(k for k in g if k not in g1 and not is_terminal_type(g[k]) and not isinstance(g[k], Chan))
        if missing:
            raise CheckError(p, [("Var", f"dom(Gamma) not included in Delta({x}): {', '.join(map(str, missing))}")], g)
        lin = lin_part(g)
        if not is_terminal(lin):
            bad = sorted(k for k, t in lin.items() if not is_terminal_type(t))
            raise CheckError(p, [("Var", f"linear part not terminal at {', '.join(map(str, bad))}")], g)
        conds = ["Delta(X) = Gamma1", "dom(Gamma) subset dom(Gamma1)", "Gamma_lin terminal"]
        if self.var_mode == "lenient":
            changed = sorted(k for k in g if k in g1 and g[k] != g1[k])
            if changed:
                raise CheckError(p, [("Var", f"type changed since recursion binder: {', '.join(map(str, changed))}")], g)
            # the next unfolding is typed with what is left here
            lost = sorted(k for k, t in g1.items() if k not in g and not is_terminal_type(t))
            if lost:
                raise CheckError(p, [("Var", f"binding used up before the recursive call: {', '.join(map(str, lost))}")], g)
            conds.extend(("shared names keep their type", "non-terminal bindings of Gamma1 still present"))
        return Derivation("Var", g, d, p, (), tuple(conds))

    def _new(self, g: TypeEnv, d: RecEnv, p: New, under_rec: bool) -> Derivation:
        x, t = p.name, p.annot
        if t is None:
            raise CheckError(p, [("Session", "restriction has no annotation"), ("Chan", "restriction has no annotation")], g)
        if self.system == "name" and not nb_type_wellformed(t):
            raise CheckError(p, [("Session" if isinstance(t, Pair) else "Chan", "annotation outside the restricted type language")], g)
        if isinstance(t, Pair):
            if not is_balanced_pair(t):
                raise CheckError(p, [("Session", "annotation is not a balanced pair (S, dual S)")], g)
            plus, minus = PName(x, PLUS), PName(x, MINUS)
            if plus in g or minus in g:
                raise CheckError(p, [("Session", f"{x} already in environment")], g)
            prem = self._check(env_add(g, {plus: t.left, minus: t.right}), d, p.body, under_rec)
            return Derivation("Session", g, d, p, (prem,), ("annotation balanced",))
        if isinstance(t, Chan):
            if d or under_rec:
                raise CheckError(p, [("Chan", "recursion environment is not empty")], g)
            k = PName(x)
            if k in g:
                raise CheckError(p, [("Chan", f"{x} already in environment")], g)
            prem = self._check(env_add(g, {k: t}), d, p.body, under_rec)
            return Derivation("Chan", g, d, p, (prem,), ("recursion environment empty",))
        raise CheckError(p, [("Session", "lone endpoint annotation"), ("Chan", "lone endpoint annotation")], g)

    def _inp(self, g: TypeEnv, d: RecEnv, p: Inp, under_rec: bool) -> Derivation:
        x, y = p.subject, PName(p.obj)
        t = g.get(x)
        if t is None:
            raise CheckError(p, [("In-1", f"{x} not in environment"), ("In-2", f"{x} not in environment")], g)
        if y in g:
            raise CheckError(p, [("In-1", f"bound name {y} clashes with environment")], g)
        if isinstance(t, Recv):
            if t.payload == END:
                raise CheckError(p, [("In-1", "payload type is end")], g)
            prem = self._check(env_add(g.set(x, t.cont), {y: t.payload}), d, p.body, under_rec)
            return Derivation("In-1", g, d, p, (prem,), ("T1 != end",))
        if isinstance(t, Chan):
            if t.payload == END:
                raise CheckError(p, [("In-2", "payload type is end")], g)
            prem = self._check(env_add(g, {y: t.payload}), d, p.body, under_rec)
            return Derivation("In-2", g, d, p, (prem,), ("T1 != end",))
        raise CheckError(p, [("In-1", f"{x} has no input type"), ("In-2", f"{x} is not an unlimited channel")], g)

    def _out(self, g: TypeEnv, d: RecEnv, p: Out, under_rec: bool) -> Derivation:
        x, y = p.subject, p.obj
        t = g.get(x)
        if t is None:
            raise CheckError(p, [("Out-1", f"{x} not in environment"), ("Out-2", f"{x} not in environment")], g)
        ty = g.get(y)
        if isinstance(t, Send):
            if t.payload == END:
                raise CheckError(p, [("Out-1", "payload type is end")], g)
            if ty is None or ty != t.payload or y == x:
                raise CheckError(p, [("Out-1", f"object {y} does not have the payload type")], g)
            if self.share_unlimited and isinstance(ty, Chan):
                # an unlimited object is copied rather than handed over
                prem = self._check(g.set(x, t.cont), d, p.body, under_rec)
                return Derivation("Out-1", g, d, p, (prem,), ("T1 != end", "unlimited object retained"))
            prem = self._check(g.remove(y).set(x, t.cont), d, p.body, under_rec)
            return Derivation("Out-1", g, d, p, (prem,), ("T1 != end", "object delegated"))
        if isinstance(t, Chan):
            if ty is None or ty != t.payload:
                raise CheckError(p, [("Out-2", f"object {y} does not have the payload type")], g)
            if not is_unlimited_type(ty):
                raise CheckError(p, [("Out-2", "payload type is not unlimited")], g)
            prem = self._check(g, d, p.body, under_rec)
            return Derivation("Out-2", g, d, p, (prem,), ("T2 unlimited",))
        raise CheckError(p, [("Out-1", f"{x} has no output type"), ("Out-2", f"{x} is not an unlimited channel")], g)

    def _unused_placements(self, g: TypeEnv, p1: Process, p2: Process) -> list:
        f = free_pnames(p1) | free_pnames(p2)
        unused = sorted(k for k in g if k not in f and not (self.share_unlimited and isinstance(g[k], Chan)))
        options: list = ["left"]
        if unused:
            options.append("right")
            if 1 < len(unused) <= MAX_UNUSED_SEARCH:
                for bits in itertools.product((0, 1), repeat=len(unused)):
                    if 0 < sum(bits) < len(bits):
                        options.append(dict(zip(unused, bits)))
        return options

    def _delta_splits(self, d: RecEnv, p1: Process, p2: Process) -> list[tuple[RecEnv, RecEnv]]:
        if self.system == "depth":
            return [(d, d)]
        r1 = free_recvars(p1) & d.keys()
        r2 = free_recvars(p2) & d.keys()
        if r1 and r2:
            return []
        if r1:
            return [(d, EMPTY_RECENV)]
        if r2:
            return [(EMPTY_RECENV, d)]
        if d:
            return [(d, EMPTY_RECENV), (EMPTY_RECENV, d)]
        return [(EMPTY_RECENV, EMPTY_RECENV)]

    def _par(self, g: TypeEnv, d: RecEnv, p: Par, under_rec: bool) -> Derivation:
        p1, p2 = p.left, p.right
        splits = self._delta_splits(d, p1, p2)
        if not splits:
            raise CheckError(p, [("Par", "both components use the recursion variable; one recursion environment must be empty")], g)
        first: CheckError | None = None
        for placement in self._unused_placements(g, p1, p2):
            try:
                g1, g2 = env_split(g, p1, p2, placement, self.share_unlimited)
            except EnvError as e:
                raise CheckError(p, [("Par", str(e))], g)
            for d1, d2 in splits:
                try:
                    if self.system == "name":
                        try:
                            nb_pair_add(g1, d1, g2, d2)
                        except EnvError as e:
                            raise CheckError(p, [("Par", str(e))], g)
                    left = self._check(g1, d1, p1, under_rec)
                    right = self._check(g2, d2, p2, under_rec)
                    return Derivation("Par", g, d, p, (left, right), ("split by free names",))
                except CheckError as e:
                    first = first or e
        raise first


def check_depth(gamma, delta, p: Process, var_mode: str = "lenient") -> Derivation:
    return Checker("depth", var_mode).check(gamma, delta, p)


def check_name(gamma, delta, p: Process, var_mode: str = "lenient") -> Derivation:
    return Checker("name", var_mode).check(gamma, delta, p)


def accepts(gamma, p: Process, system: str = "depth", var_mode: str = "lenient") -> bool:
    return Checker(system, var_mode).accepts(gamma, p)
