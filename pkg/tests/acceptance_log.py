"""Collects one verdict per acceptance criterion for the end-of-run summary."""

from __future__ import annotations

RESULTS: dict[str, tuple[bool, str]] = {}


def record(criterion: str, ok: bool, detail: str) -> bool:
    RESULTS[criterion] = (ok, detail)
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    return ok
