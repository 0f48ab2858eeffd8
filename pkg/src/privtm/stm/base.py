"""Step-machine plumbing shared by the STM implementations.

A machine state is mutable but cheap to copy; the explorer copies it before
every step.  ``step`` performs one micro-step for a thread and returns the
actions it emits as ``(kind, reg, value)`` triples (write-backs and the
response, if any).
"""
from __future__ import annotations

from typing import Optional

from ..actions import ABORTED, BEGINTX, READ, RET, RETU, TRYCOMMIT, WB, WRITE


class IllegalRequest(RuntimeError):
    pass


class TmState:
    """Registers plus per-thread descriptors (plain dicts of immutable values)."""

    name = "abstract"
    __slots__ = ("mem", "th", "g")

    def __init__(self, threads, init_mem: Optional[dict] = None):
        self.mem = dict(init_mem or {})
        self.th = {t: self.fresh_desc() for t in threads}
        self.g = self.fresh_global()

    # subclasses fill these in
    def fresh_desc(self) -> dict:
        return {"req": None, "tx": False}

    def fresh_global(self) -> dict:
        return {}

    def copy(self) -> "TmState":
        new = object.__new__(type(self))
        new.mem = dict(self.mem)
        new.th = {t: dict(d) for t, d in self.th.items()}
        new.g = {k: (dict(v) if isinstance(v, dict) else v) for k, v in self.g.items()}
        return new

    def key(self) -> tuple:
        # descriptor and global dicts keep the insertion order of their
        # fresh_* templates; only nested dicts need sorting
        def freeze(v):
            return tuple(sorted(v.items())) if type(v) is dict else v
        return (tuple(sorted(self.mem.items())),
                tuple(tuple(map(freeze, d.values())) for d in self.th.values()),
                tuple(map(freeze, self.g.values())))

    def read_mem(self, reg: str) -> int:
        return self.mem.get(reg, 0)

    # ----------------------------------------------------------- interface

    def in_tx(self, t: int) -> bool:
        return self.th[t]["tx"]

    def request(self, t: int, kind: str, reg: Optional[str] = None, value: Optional[int] = None):
        d = self.th[t]
        if d["req"] is not None or self.busy(t):
            raise IllegalRequest(f"thread {t} already has an open request")
        if kind == BEGINTX and d["tx"]:
            raise IllegalRequest("nested transaction")
        if kind == TRYCOMMIT and not d["tx"]:
            raise IllegalRequest("trycommit outside a transaction")
        d["req"] = (kind, reg, value)
        self.on_request(t, kind, reg, value)

    def on_request(self, t, kind, reg, value):
        pass

    def busy(self, t: int) -> bool:
        """True while the thread has TM work to do before its next request."""
        return self.th[t]["req"] is not None

    def enabled(self, t: int) -> bool:
        return self.busy(t)

    def step(self, t: int) -> list:
        raise NotImplementedError

    # helpers for subclasses
    def nontx_step(self, t: int) -> list:
        d = self.th[t]
        kind, reg, value = d["req"]
        d["req"] = None
        if kind == READ:
            return [(RET, None, self.read_mem(reg))]
        self.mem[reg] = value
        return [(RETU, None, None)]

    def respond(self, t: int, kind: str, value=None) -> list:
        self.th[t]["req"] = None
        return [(kind, None, value)]




def wb(reg, value):
    return (WB, reg, value)


__all__ = ["TmState", "IllegalRequest", "wb", "ABORTED", "BEGINTX", "READ", "RET", "RETU",
           "TRYCOMMIT", "WRITE"]
