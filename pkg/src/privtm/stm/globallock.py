"""A single global lock held from begintx to commit; writes are buffered
and flushed in one step."""
from __future__ import annotations

from ..actions import BEGINTX, COMMITTED, OK, READ, RET, RETU, TRYCOMMIT, WRITE
from .base import TmState, wb


class GlobalLock(TmState):
    name = "globallock"

    def fresh_desc(self):
        return {"req": None, "tx": False, "wset": (), "flushed": False}

    def fresh_global(self):
        return {"owner": None}

    def enabled(self, t):
        d = self.th[t]
        if d["req"] is None:
            return False
        if d["req"][0] == BEGINTX:
            return self.g["owner"] is None
        return True

    def step(self, t):
        d = self.th[t]
        kind, reg, value = d["req"]
        if not d["tx"] and kind != BEGINTX:
            return self.nontx_step(t)
        if kind == BEGINTX:
            self.g["owner"] = t
            d.update(tx=True, wset=(), flushed=False)
            return self.respond(t, OK)
        ws = dict(d["wset"])
        if kind == READ:
            return self.respond(t, RET, ws[reg] if reg in ws else self.read_mem(reg))
        if kind == WRITE:
            ws[reg] = value
            d["wset"] = tuple(sorted(ws.items()))
            return self.respond(t, RETU)
        if kind == TRYCOMMIT:
            if ws and not d["flushed"]:
                self.mem.update(ws)
                d["flushed"] = True
                return [wb(x, v) for x, v in d["wset"]]
            self.g["owner"] = None
            d.update(tx=False, wset=(), flushed=False)
            return self.respond(t, COMMITTED)
        raise AssertionError(kind)
