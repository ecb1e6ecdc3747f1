"""Bundled example processes.

Each ``.pi`` file starts with ``//`` header lines: ``description:``,
``env:`` (comma-separated ``name : TYPE`` bindings), ``depth:`` (expected
depth) and a bare ``untypable`` flag.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from ..parser import parse_env, parse_process
from ..syntax import Process
from ..typesystems import TypeEnv


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    source: str
    process: Process
    env: TypeEnv
    description: str = ""
    depth: int | None = None
    untypable: bool = False


def names() -> list[str]:
    return sorted(f.name[:-3] for f in resources.files(__name__).iterdir() if f.name.endswith(".pi"))


def source(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.pi").read_text()


def load(name: str) -> CorpusEntry:
    return parse_entry(name, source(name))


def parse_entry(name: str, text: str, untyped: bool = False) -> CorpusEntry:
    """Parse a process file together with its ``//`` header."""
    meta: dict[str, str] = {}
    flags = set()
    for line in text.splitlines():
        if not line.startswith("//"):
            continue
        body = line[2:].strip()
        if ":" in body:
            key, _, value = body.partition(":")
            meta[key.strip()] = value.strip()
        else:
            flags.add(body)
    env = parse_env("\n".join(meta.get("env", "").split(",")))
    return CorpusEntry(
        name=name,
        source=text,
        process=parse_process(text, untyped=untyped),
        env=TypeEnv(env),
        description=meta.get("description", ""),
        depth=int(meta["depth"]) if "depth" in meta else None,
        untypable="untypable" in flags,
    )


def load_all() -> list[CorpusEntry]:
    return [load(n) for n in names()]


def untypable() -> list[CorpusEntry]:
    """Annotated variants of the recursive channel server that no annotation can type."""
    return [e for e in load_all() if e.untypable]
