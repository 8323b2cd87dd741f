"""Bookkeeping for "repair" operations (normalization, nearest-SPD projection).

Repair counts are collected per context so concurrent rollouts in different
threads do not see each other's counts.  Outside a :func:`counting` block the
hooks are no-ops.
"""
from __future__ import annotations

import contextlib
import contextvars
from collections import Counter
from collections.abc import Iterator

_active: contextvars.ContextVar[Counter | None] = contextvars.ContextVar(
    "geomrl_repairs", default=None
)


def note(kind: str) -> None:
    counter = _active.get()
    if counter is not None:
        counter[kind] += 1


@contextlib.contextmanager
def counting() -> Iterator[Counter]:
    """Count repair invocations made inside the ``with`` block.

    >>> with counting() as c:
    ...     note("normalize")
    >>> c["normalize"]
    1
    """
    counter: Counter = Counter()
    token = _active.set(counter)
    try:
        yield counter
    finally:
        _active.reset(token)
