"""Random process generators for property tests and measurement.

``WellTypedGenerator`` builds processes around session protocols so that they
usually type check, then keeps only the ones the depth checker accepts.
``random_term`` draws small untyped terms for comparing the normal-form
depth with the exhaustive oracle.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .syntax import (
    END,
    MINUS,
    NIL,
    PLUS,
    Chan,
    Inp,
    New,
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
    make_distinct,
    par,
    subterms,
)
from .typesystems import Checker, CheckError, TypeEnv

CH0 = Chan(END)  # #end
CH1 = Chan(CH0)  # #(#end)


def base_env() -> TypeEnv:
    """Free unlimited channels every generated process may use."""
    return TypeEnv({PName("c"): CH1, PName("d"): CH0, PName("e"): CH0})


@dataclass
class WellTypedGenerator:
    """Type-directed generator of ``(environment, process)`` pairs.

    ``delegation`` allows session endpoints as payloads, ``free_sessions``
    adds a free session pair ``f+``/``f-`` to the environment.
    """

    rng: random.Random
    max_components: int = 3
    max_length: int = 3
    delegation: bool = True
    free_sessions: bool = True
    recursion: bool = True

    def __post_init__(self):
        self._n = 0

    def _fresh(self, stem: str) -> str:
        self._n += 1
        return f"{stem}{self._n}"

    # -- types
    def endpoint_type(self, length: int | None = None, in_rec: bool = False, nested: int = 1) -> Type:
        if length is None:
            length = self.rng.randint(1, self.max_length)
        t: Type = END
        for _ in range(length):
            payload = self._payload_type(in_rec, nested)
            t = Send(payload, t) if self.rng.random() < 0.5 else Recv(payload, t)
        return t

    def _payload_type(self, in_rec: bool, nested: int) -> Type:
        if self.delegation and nested > 0 and self.rng.random() < (0.6 if in_rec else 0.4):
            return self.endpoint_type(self.rng.randint(1, 2), in_rec, nested - 1)
        return CH0 if self.rng.random() < 0.7 else CH1

    # -- threads
    def _provide(self, t: Type, in_rec: bool):
        """An object of type ``t`` and a wrapper that introduces it."""
        if t == CH0:
            return PName(self.rng.choice(["d", "e"])), lambda q: q
        if t == CH1:
            return PName("c"), lambda q: q
        z = self._fresh("z")
        other = self.thread(PName(z, MINUS), dual(t), NIL, in_rec)

        def wrap(q: Process) -> Process:
            return New(z, Pair(t, dual(t)), par(q, other))

        return PName(z, PLUS), wrap

    def _consume(self, y: str, t: Type, in_rec: bool) -> Process:
        if isinstance(t, Chan):
            # received unlimited channels are used once more or dropped
            if t == CH0 and self.rng.random() < 0.5:
                return Out(PName("c"), PName(y), NIL)
            return NIL
        return self.thread(PName(y), t, NIL, in_rec)

    def thread(self, ep: PName, s: Type, tail: Process, in_rec: bool = False) -> Process:
        """A sequential process driving endpoint ``ep`` through protocol ``s``."""
        match s:
            case Send(t, cont):
                obj, wrap = self._provide(t, in_rec)
                return wrap(Out(ep, obj, self.thread(ep, cont, tail, in_rec)))
            case Recv(t, cont):
                y = self._fresh("y")
                rest = self.thread(ep, cont, tail, in_rec)
                use = self._consume(y, t, in_rec)
                return Inp(ep, y, par(rest, use))
        return tail

    # -- components
    def session_component(self) -> Process:
        x = self._fresh("x")
        s = self.endpoint_type()
        a = self.thread(PName(x, PLUS), s, NIL)
        b = self.thread(PName(x, MINUS), dual(s), NIL)
        return New(x, Pair(s, dual(s)), par(a, b))

    def channel_component(self) -> Process:
        if self.rng.random() < 0.5:
            k = self._fresh("k")
            send = Out(PName(k), PName(self.rng.choice(["d", "e"])), NIL)
            recv = Inp(PName(k), self._fresh("y"), NIL)
            return New(k, CH1, par(send, recv))
        y = self._fresh("y")
        return par(Out(PName("c"), PName("d"), NIL), Inp(PName("c"), y, self._consume(y, CH0, False)))

    def recursive_component(self) -> Process:
        x = self._fresh("X")
        if self.rng.random() < 0.25:
            # a channel server that keeps emitting, read by finitely many
            # readers or by a reader that also recurses
            body = Out(PName("c"), PName(self.rng.choice(["d", "e"])), Var(x))
            if self.rng.random() < 0.5:
                v = self._fresh("X")
                return par(Rec(x, body), Rec(v, Inp(PName("c"), self._fresh("y"), Var(v))))
            readers = [Inp(PName("c"), self._fresh("y"), NIL) for _ in range(self.rng.randint(1, 2))]
            return par(Rec(x, body), *readers)
        r = self._fresh("r")
        s = self.endpoint_type(in_rec=True)
        both = self.rng.random() < 0.3
        a = self.thread(PName(r, PLUS), s, Var(x), True)
        b = self.thread(PName(r, MINUS), dual(s), Var(x) if both else NIL, True)
        return Rec(x, New(r, Pair(s, dual(s)), par(a, b)))

    def free_session_components(self) -> tuple[TypeEnv, Process]:
        s = self.endpoint_type()
        env = {PName("f", PLUS): s, PName("f", MINUS): dual(s)}
        a = self.thread(PName("f", PLUS), s, NIL)
        b = self.thread(PName("f", MINUS), dual(s), NIL)
        return TypeEnv(env), par(a, b)

    def candidate(self) -> tuple[TypeEnv, Process]:
        env = dict(base_env())
        comps = []
        kinds = ["session", "channel"] + (["rec", "rec"] if self.recursion else [])
        for _ in range(self.rng.randint(1, self.max_components)):
            kind = self.rng.choice(kinds)
            if kind == "session":
                comps.append(self.session_component())
            elif kind == "channel":
                comps.append(self.channel_component())
            else:
                comps.append(self.recursive_component())
        if self.free_sessions and self.rng.random() < 0.3:
            fenv, fp = self.free_session_components()
            env.update(fenv)
            comps.append(fp)
        self.rng.shuffle(comps)
        return TypeEnv(env), make_distinct(par(*comps))

    def generate(self, system: str = "depth", var_mode: str = "lenient", tries: int = 100) -> tuple[TypeEnv, Process]:
        checker = Checker(system, var_mode)
        for _ in range(tries):
            env, p = self.candidate()
            try:
                checker.check(env, None, p)
            except CheckError:
                continue
            return env, p
        raise RuntimeError("no accepted candidate within the try budget")


def well_typed(seed: int, system: str = "depth", **kw) -> tuple[TypeEnv, Process]:
    """Deterministic accepted ``(environment, process)`` pair for ``seed``."""
    if system == "name":
        kw.setdefault("delegation", False)
    return WellTypedGenerator(random.Random(seed), **kw).generate(system)


def well_typed_corpus(n: int, seed: int = 0, system: str = "depth", **kw) -> list[tuple[TypeEnv, Process]]:
    return [well_typed(seed * 100_003 + i, system, **kw) for i in range(n)]


# ---------------------------------------------------------------------------
# Small untyped terms


def random_term(
    rng: random.Random,
    max_restrictions: int = 3,
    max_prefixes: int = 6,
    names=("a", "b", "c"),
    min_restrictions: int = 1,
    min_prefixes: int = 1,
) -> Process:
    """A random term with restriction and prefix counts within the given
    bounds; annotations are omitted.  Draws are repeated until the minimums
    are met."""
    while True:
        p = _draw_term(rng, max_restrictions, max_prefixes, names)
        kinds = [type(q) for q in subterms(p)]
        if kinds.count(New) >= min_restrictions and kinds.count(Inp) + kinds.count(Out) >= min_prefixes:
            return p


def _draw_term(rng: random.Random, max_restrictions: int, max_prefixes: int, names) -> Process:
    budget = {"new": rng.randint(0, max_restrictions), "pre": rng.randint(0, max_prefixes)}
    counter = [0]

    def pick(scope: list[str]) -> str:
        return rng.choice(scope)

    def go(scope: list[str], size: int, recvars: list[str]) -> Process:
        options = ["nil"]
        if size > 1:
            options += ["par", "par"]
        if budget["new"] > 0:
            options += ["new", "new"]
        if budget["pre"] > 0:
            options += ["in", "out", "out"]
            if recvars:
                options.append("pre-var")
            if size > 1 and not recvars:
                options.append("rec")
        match rng.choice(options):
            case "nil":
                return NIL
            case "par":
                k = rng.randint(1, size - 1)
                return par_raw(go(scope, k, recvars), go(scope, size - k, recvars))
            case "new":
                budget["new"] -= 1
                counter[0] += 1
                x = f"n{counter[0]}"
                return New(x, None, go(scope + [x], size, recvars))
            case "in":
                budget["pre"] -= 1
                counter[0] += 1
                y = f"y{counter[0]}"
                return Inp(PName(pick(scope)), y, go(scope + [y], max(size - 1, 1), recvars))
            case "out":
                budget["pre"] -= 1
                return Out(PName(pick(scope)), PName(pick(scope)), go(scope, max(size - 1, 1), recvars))
            case "pre-var":
                budget["pre"] -= 1
                return Out(PName(pick(scope)), PName(pick(scope)), Var(rng.choice(recvars)))
            case "rec":
                counter[0] += 1
                v = f"X{counter[0]}"
                budget["pre"] -= 1
                # guarded by construction: the body starts with a prefix
                body = go(scope, size - 1, recvars + [v])
                return Rec(v, Inp(PName(pick(scope)), f"w{counter[0]}", par_raw(body, Var(v))))
        raise AssertionError

    return make_distinct(go(list(names), rng.randint(1, 6), []))


def par_raw(p: Process, q: Process) -> Process:
    """Binary composition without the flattening done by ``par``."""
    return Par(p, q)
