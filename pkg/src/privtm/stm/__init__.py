"""STM step machines, graph instrumentation and bounded property checks."""
from __future__ import annotations

from .base import IllegalRequest, TmState
from .globallock import GlobalLock
from .tl2 import FencedTL2, PlainTL2
from .twopl import TwoPhaseLocking

ALGORITHMS = {
    "fencedtl2": FencedTL2,
    "tl2": PlainTL2,
    "2pl": TwoPhaseLocking,
    "globallock": GlobalLock,
}


def machine(name: str, threads, init_mem=None) -> TmState:
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown TM {name!r}; choose from {', '.join(ALGORITHMS)}") from None
    return cls(threads, init_mem)


__all__ = ["ALGORITHMS", "machine", "TmState", "IllegalRequest", "FencedTL2", "PlainTL2",
           "TwoPhaseLocking", "GlobalLock"]
