"""Two-phase locking with eager in-place writes and undo logging.

Every register has one exclusive lock taken by both reads and writes.  A
thread waiting for a held lock is blocked; when waiting would close a cycle
in the wait-for graph the youngest transaction on the cycle is doomed and
rolls back.
"""
from __future__ import annotations

from ..actions import ABORTED, BEGINTX, COMMITTED, OK, READ, RET, RETU, TRYCOMMIT, WRITE
from .base import TmState, wb


class TwoPhaseLocking(TmState):
    name = "2pl"

    def fresh_desc(self):
        return {"req": None, "tx": False, "serial": 0, "held": (), "undo": (),
                "phase": None, "doomed": False}

    def fresh_global(self):
        return {"lock": {}, "next": 1}

    def _waits_for(self, t):
        d = self.th[t]
        if d["req"] is None or not d["tx"] or d["phase"] is not None:
            return None
        kind, reg, _ = d["req"]
        if kind not in (READ, WRITE) or reg in d["held"]:
            return None
        owner = self.g["lock"].get(reg)
        return owner if owner is not None and owner != t else None

    def _cycle_from(self, t):
        path = [t]
        u = self._waits_for(t)
        while u is not None and u not in path:
            path.append(u)
            u = self._waits_for(u)
        if u is None:
            return None
        return path[path.index(u):]

    def enabled(self, t):
        d = self.th[t]
        if d["req"] is None:
            return False
        if d["doomed"] or self._waits_for(t) is None:
            return True
        cyc = self._cycle_from(t)
        return cyc is not None and not any(self.th[u]["doomed"] for u in cyc)

    def step(self, t):
        d = self.th[t]
        kind, reg, value = d["req"]
        if not d["tx"] and kind != BEGINTX:
            return self.nontx_step(t)
        if d["doomed"] or (d["phase"] or ("",))[0] == "abort":
            return self._abort_step(t, d)
        if self._waits_for(t) is not None:
            cyc = self._cycle_from(t)
            victim = max(cyc, key=lambda u: self.th[u]["serial"])
            self.th[victim]["doomed"] = True
            return []
        g = self.g
        if kind == BEGINTX:
            d.update(tx=True, serial=g["next"], held=(), undo=(), phase=None, doomed=False)
            g["next"] += 1
            return self.respond(t, OK)
        if kind in (READ, WRITE) and reg not in d["held"]:
            g["lock"][reg] = t
            d["held"] = d["held"] + (reg,)
            return []
        if kind == READ:
            return self.respond(t, RET, self.read_mem(reg))
        if kind == WRITE:
            if d["phase"] is None and reg not in dict(d["undo"]):
                d["undo"] = d["undo"] + ((reg, self.read_mem(reg)),)
                d["phase"] = ("logged",)
                return []
            d["phase"] = None
            self.mem[reg] = value
            out = [wb(reg, value)]
            return out + self.respond(t, RETU)
        if kind == TRYCOMMIT:
            if d["held"]:
                reg0 = d["held"][0]
                del g["lock"][reg0]
                d["held"] = d["held"][1:]
                return []
            d.update(tx=False, undo=(), phase=None)
            return self.respond(t, COMMITTED)
        raise AssertionError(kind)

    def _abort_step(self, t, d):
        if d["undo"]:
            reg, old = d["undo"][-1]
            d["undo"] = d["undo"][:-1]
            d["phase"] = ("abort",)
            self.mem[reg] = old
            return [wb(reg, old)]
        if d["held"]:
            del self.g["lock"][d["held"][0]]
            d["held"] = d["held"][1:]
            d["phase"] = ("abort",)
            return []
        d.update(tx=False, phase=None, doomed=False)
        return self.respond(t, ABORTED)
