"""Collects one status line per acceptance criterion."""

import time
from contextlib import contextmanager

RESULTS: list[tuple[int, str]] = []


@contextmanager
def criterion(number: int, title: str, limit: float | None = None):
    """Time the block and record ``PASS``/``FAIL``; a runtime over ``limit``
    seconds fails the criterion."""
    notes: list[str] = []
    start = time.perf_counter()
    ok = False
    try:
        yield notes
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        if limit is not None and elapsed >= limit:
            ok = False
            notes.append(f"over the {limit:g}s limit")
        detail = "; ".join(notes)
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title} ({elapsed:.2f}s){': ' + detail if detail else ''}"
        RESULTS.append((number, line))
        print(line)
    if not ok:
        raise AssertionError(line)
