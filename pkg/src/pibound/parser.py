"""Concrete syntax for processes, types and type environments.

Types::

    end    !T.S    ?T.S    (S, S)    #T    ( T )

Processes (``|`` binds weakest; ``new`` and ``rec`` extend as far right as
possible; a missing continuation means ``.0``)::

    0    x+?(y).P    x-!(y+).P    x?(y).P    P | Q
    new x : T in P    rec X. P    X    ( P )

``//`` starts a comment running to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (
    END,
    EPS,
    MINUS,
    NIL,
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
    free_recvars,
    is_guarded,
    make_distinct,
    rec_binders,
)

KEYWORDS = {"new", "in", "rec", "end"}


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


class WellFormednessError(ParseError):
    pass


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*(?:\#[0-9]+)?)
  | (?P<zero>0)
  | (?P<sym>[()!?.,:|#+-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int


def _tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", _span(text, pos, pos + 1))
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), m.start(), m.end()))
        pos = m.end()
    out.append(Token("eof", "", len(text), len(text)))
    return out


def _span(text: str, start: int, end: int) -> SourceSpan:
    line = text.count("\n", 0, start) + 1
    col = start - (text.rfind("\n", 0, start) + 1) + 1
    return SourceSpan(start, end, line, col)


class _Parser:
    def __init__(self, text: str, untyped: bool = False):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.untyped = untyped

    # -- helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        # eof errors point at the last character so positions stay inside the input
        start = min(tok.start, max(len(self.text) - 1, 0))
        return ParseError(message, _span(self.text, start, max(tok.end, start + 1)))

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "ident", "zero") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self, what: str = "name") -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def polarity(self):
        if self.at("+"):
            self.i += 1
            return PLUS
        if self.at("-"):
            self.i += 1
            return MINUS
        return EPS

    def done(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # -- types
    def type_(self) -> Type:
        t = self.tok
        if self.at("end"):
            self.i += 1
            return END
        if self.at("#"):
            self.i += 1
            return Chan(self.type_())
        if self.at("!") or self.at("?"):
            self.i += 1
            payload = self.type_()
            self.expect(".")
            cont = self.type_()
            return Send(payload, cont) if t.text == "!" else Recv(payload, cont)
        if self.at("("):
            self.i += 1
            first = self.type_()
            if self.at(","):
                self.i += 1
                second = self.type_()
                self.expect(")")
                return Pair(first, second)
            self.expect(")")
            return first
        raise self.error(f"expected a type, found {t.text or 'end of input'!r}")

    # -- processes
    def process(self) -> Process:
        left = self.prefixed()
        while self.at("|"):
            self.i += 1
            left = Par(left, self.prefixed())
        return left

    def prefixed(self) -> Process:
        t = self.tok
        if t.kind == "zero":
            self.i += 1
            return NIL
        if self.at("("):
            self.i += 1
            p = self.process()
            self.expect(")")
            return p
        if self.at("new"):
            self.i += 1
            name = self.ident()
            annot = None
            if self.at(":"):
                self.i += 1
                annot = self.type_()
            elif not self.untyped:
                raise self.error("restriction needs a type annotation (new x : T in P)")
            self.expect("in")
            return New(name, annot, self.process())
        if self.at("rec"):
            self.i += 1
            var = self.ident("recursion variable")
            self.expect(".")
            return Rec(var, self.process())
        if t.kind == "ident" and t.text not in KEYWORDS:
            base = self.ident()
            pol = self.polarity()
            if self.at("?"):
                self.i += 1
                self.expect("(")
                obj = self.ident()
                if self.at("+") or self.at("-"):
                    raise self.error("input objects are binders and carry no polarity")
                self.expect(")")
                return Inp(PName(base, pol), obj, self.continuation())
            if self.at("!"):
                self.i += 1
                self.expect("(")
                obase = self.ident()
                opol = self.polarity()
                self.expect(")")
                return Out(PName(base, pol), PName(obase, opol), self.continuation())
            if pol is not EPS:
                raise self.error("expected '?' or '!' after polarized name")
            return Var(base)
        raise self.error(f"expected a process, found {t.text or 'end of input'!r}")

    def continuation(self) -> Process:
        if self.at("."):
            self.i += 1
            return self.prefixed()
        return NIL


def parse_type(text: str) -> Type:
    p = _Parser(text)
    t = p.type_()
    p.done()
    return t


def parse_process(text: str, untyped: bool = False, check: bool = True) -> Process:
    """Parse a process; binders are renamed apart when they clash.

    With ``check`` (the default) unguarded recursion and repeated recursion
    binders are rejected.
    """
    p = _Parser(text, untyped=untyped)
    proc = p.process()
    p.done()
    if check:
        whole = _span(text, 0, max(len(text), 1))
        if not is_guarded(proc):
            raise WellFormednessError("unguarded recursion variable", whole)
        binders = rec_binders(proc)
        dup = sorted({b for b in binders if binders.count(b) > 1})
        if dup:
            raise WellFormednessError(f"duplicate recursion binder {dup[0]}", whole)
        free = sorted(free_recvars(proc))
        if free:
            raise WellFormednessError(f"unbound recursion variable {free[0]}", whole)
    return make_distinct(proc)


def parse_env(text: str) -> dict[PName, Type]:
    """Lines of the form ``name : TYPE`` (polarity suffix allowed on the name)."""
    env: dict[PName, Type] = {}
    offset = 0
    for line in text.splitlines(keepends=True):
        body = line.split("//", 1)[0]
        if body.strip():
            p = _Parser(body)
            base = p.ident()
            pol = p.polarity()
            p.expect(":")
            t = p.type_()
            try:
                p.done()
            except ParseError as e:
                raise ParseError(e.message, _span(text, offset + e.span.start, offset + e.span.end))
            key = PName(base, pol)
            if key in env:
                raise ParseError(f"duplicate binding for {key}", _span(text, offset, offset + len(line)))
            env[key] = t
        offset += len(line)
    return env


# ---------------------------------------------------------------------------
# Printing


def print_type(t: Type) -> str:
    match t:
        case End():
            return "end"
        case Chan(payload):
            return "#" + _type_atom(payload)
        case Send(payload, cont):
            return "!" + _type_atom(payload) + "." + print_type(cont)
        case Recv(payload, cont):
            return "?" + _type_atom(payload) + "." + print_type(cont)
        case Pair(left, right):
            return f"({print_type(left)}, {print_type(right)})"
    raise TypeError(t)


def _type_atom(t: Type) -> str:
    if isinstance(t, (Send, Recv)):
        return f"({print_type(t)})"
    return print_type(t)


def _open_right(p: Process) -> bool:
    match p:
        case New() | Rec():
            return True
        case Inp(_, _, body) | Out(_, _, body):
            return not isinstance(body, Nil) and _open_right(body)
        case Par(_, right):
            return _open_right(right)
    return False


def print_process(p: Process) -> str:
    match p:
        case Nil():
            return "0"
        case Var(v):
            return v
        case Inp(subj, obj, body):
            return f"{subj}?({obj})" + _cont(body)
        case Out(subj, obj, body):
            return f"{subj}!({obj})" + _cont(body)
        case Par(left, right):
            ls = print_process(left)
            if _open_right(left):
                ls = f"({ls})"
            rs = print_process(right)
            if isinstance(right, Par):
                rs = f"({rs})"
            return f"{ls} | {rs}"
        case New(x, annot, body):
            ann = "" if annot is None else f" : {print_type(annot)}"
            return f"new {x}{ann} in {print_process(body)}"
        case Rec(v, body):
            return f"rec {v}. {print_process(body)}"
    raise TypeError(p)


def _cont(body: Process) -> str:
    if isinstance(body, Nil):
        return ".0"
    s = print_process(body)
    if isinstance(body, Par):
        s = f"({s})"
    return "." + s


def print_env(env: dict[PName, Type]) -> str:
    return "".join(f"{k} : {print_type(t)}\n" for k, t in sorted(env.items()))
