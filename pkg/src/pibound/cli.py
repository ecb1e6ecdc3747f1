"""Command line front end.

``FILE`` is a path, ``-`` for standard input, or ``corpus:NAME`` for a
bundled example.  Exit status: 0 on acceptance or success, 1 on rejection
(or a failed fidelity check), 2 on usage and parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus
from .analysis import fidelity_check, measure
from .congruence import depth_report, inner_normal_form, normalize, outer_normal_form
from .parser import ParseError, parse_env, print_process
from .semantics import POLICIES, run
from .typesystems import SYSTEMS, VAR_MODES, Checker, CheckError, TypeEnv


class UsageError(Exception):
    pass


def _read(path: str) -> tuple[str, str]:
    if path == "-":
        return "<stdin>", sys.stdin.read()
    if path.startswith("corpus:"):
        name = path[len("corpus:"):]
        if name not in corpus.names():
            raise UsageError(f"no bundled example named {name!r}; available: {', '.join(corpus.names())}")
        return name, corpus.source(name)
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{path}: no such file")
    return p.stem, p.read_text()


def _load(args) -> corpus.CorpusEntry:
    name, text = _read(args.file)
    return corpus.parse_entry(name, text, untyped=args.untyped)


def _env(args, entry: corpus.CorpusEntry) -> TypeEnv:
    if getattr(args, "env", None):
        _, text = _read(args.env)
        return TypeEnv(parse_env(text))
    return entry.env


def cmd_check(args) -> int:
    entry = _load(args)
    env = _env(args, entry)
    try:
        d = Checker(args.system, args.var_mode).check(env, None, entry.process)
    except CheckError as e:
        if args.json:
            print(json.dumps({"accepted": False, **e.as_dict()}, indent=2))
        else:
            print("rejected")
            print(f"  at: {print_process(e.subterm)}")
            for rule, why in e.attempts:
                print(f"  {rule}: {why}")
        return 1
    if args.json:
        print(json.dumps({"accepted": True, "derivation": d.as_dict()}, indent=2))
    else:
        print("accepted")
        print(d.pretty(1))
    return 0


def cmd_run(args) -> int:
    entry = _load(args)
    trace = run(entry.process, args.steps, args.policy, args.seed)
    for line in trace.lines():
        print(line)
    print(f"# {len(trace)} steps, policy {trace.policy}, seed {trace.seed}")
    return 0


def cmd_measure(args) -> int:
    entry = _load(args)
    report = measure(entry.process, args.steps, args.policy, args.seed)
    print(report.to_json() if args.json else report.summary())
    return 0


def cmd_fidelity(args) -> int:
    entry = _load(args)
    env = _env(args, entry)
    trace = run(entry.process, args.steps, args.policy, args.seed)
    records = fidelity_check(env, entry.process, trace, args.system, args.var_mode)
    ok = all(r.match and r.rechecked for r in records)
    if args.json:
        print(json.dumps({"ok": ok, "records": [r.as_dict() for r in records]}, indent=2))
    else:
        for r in records:
            kind = "bound" if r.bound else "free"
            d = r.as_dict()
            print(
                f"{r.step}\t{r.subject}\t{kind}\t{d['before']} -> {d['after']}\t"
                f"match={r.match}\trechecked={r.rechecked}" + (f"\t{r.reason}" if r.reason else "")
            )
        print(f"# {len(records)} records, {'all match' if ok else 'MISMATCH'}")
    return 0 if ok else 1


def cmd_normalize(args) -> int:
    entry = _load(args)
    p = normalize(entry.process)
    print(print_process(inner_normal_form(p) if args.form == "inner" else outer_normal_form(p)))
    return 0


def cmd_depth(args) -> int:
    entry = _load(args)
    rep = depth_report(entry.process, args.oracle_budget)
    if args.json:
        print(json.dumps(rep.as_dict(), indent=2))
    else:
        for k, v in rep.as_dict().items():
            print(f"{k}: {v}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pibound", description=__doc__.split("\n\n")[0])
    ap.add_argument("--untyped", action="store_true", help="allow restrictions without annotations")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("file", metavar="FILE")
        p.add_argument("--untyped", action="store_true", default=argparse.SUPPRESS)
        p.set_defaults(fn=fn)
        return p

    def checker_opts(p):
        p.add_argument("--system", choices=SYSTEMS, default="depth")
        p.add_argument("--var-mode", choices=VAR_MODES, default="lenient")

    def trace_opts(p, steps):
        p.add_argument("--steps", type=int, default=steps)
        p.add_argument("--policy", choices=POLICIES, default="leftmost")
        p.add_argument("--seed", type=int, default=0)

    p = add("check", cmd_check, "type check a process")
    checker_opts(p)
    p.add_argument("--env", metavar="FILE", help="environment, one 'name : TYPE' per line")
    p.add_argument("--json", action="store_true")

    p = add("run", cmd_run, "execute a process and print the trace")
    trace_opts(p, 10)

    p = add("measure", cmd_measure, "boundedness metrics along a trace")
    trace_opts(p, 50)
    p.add_argument("--json", action="store_true")

    p = add("fidelity", cmd_fidelity, "check annotations evolve by their successor along a trace")
    trace_opts(p, 20)
    checker_opts(p)
    p.add_argument("--env", metavar="FILE", required=True)
    p.add_argument("--json", action="store_true")

    p = add("normalize", cmd_normalize, "print a normal form")
    p.add_argument("--form", choices=("inner", "outer"), default="inner")

    p = add("depth", cmd_depth, "nesting, depth estimate and optional exhaustive oracle")
    p.add_argument("--oracle-budget", type=int, default=None, metavar="B")
    p.add_argument("--json", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        # bad process shape for the requested operation, e.g. open recursion
        print(f"error: {e}", file=sys.stderr)
        return 2
