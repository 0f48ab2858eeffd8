"""TL2 with a global version clock and versioned try-locks, plus the fenced
variant that waits for concurrently active transactions after every
transaction ends."""
from __future__ import annotations

from ..actions import ABORTED, BEGINTX, COMMITTED, OK, READ, RET, RETU, TRYCOMMIT, WRITE
from .base import TmState, wb


class PlainTL2(TmState):
    name = "tl2"
    fenced = False
    retries = 1

    def fresh_desc(self):
        return {"req": None, "tx": False, "serial": 0, "rv": 0, "rset": frozenset(),
                "wset": (), "held": (), "phase": None, "tries": 0, "wv": 0, "v1": None,
                "val": None, "fence": None}

    def fresh_global(self):
        return {"clock": 0, "ver": {}, "lock": {}, "active": {}, "next": 1}

    # --------------------------------------------------------------- status

    def busy(self, t):
        d = self.th[t]
        return d["req"] is not None or d["fence"] is not None

    def enabled(self, t):
        d = self.th[t]
        if d["req"] is not None:
            return True
        f = d["fence"]
        if f is None:
            return False
        if f == "snap":
            return True
        live = set(self.g["active"].values())
        return not (f & live)

    # ----------------------------------------------------------------- steps

    def step(self, t):
        d = self.th[t]
        if d["req"] is None:
            return self._fence_step(t, d)
        kind, reg, value = d["req"]
        if not d["tx"] and kind != BEGINTX:
            return self.nontx_step(t)
        ph = d["phase"]
        if ph is not None and ph[0] == "abort":
            return self._abort_step(t, d)
        if kind == BEGINTX:
            g = self.g
            d.update(tx=True, serial=g["next"], rv=g["clock"], rset=frozenset(), wset=(),
                     held=(), phase=None, tries=0)
            g["next"] += 1
            g["active"][t] = d["serial"]
            return self.respond(t, OK)
        if kind == WRITE:
            ws = dict(d["wset"])
            ws[reg] = value
            d["wset"] = tuple(sorted(ws.items()))
            return self.respond(t, RETU)
        if kind == READ:
            return self._read_step(t, d, reg)
        if kind == TRYCOMMIT:
            return self._commit_step(t, d)
        raise AssertionError(kind)

    def _start_abort(self, t, d):
        d["phase"] = ("abort", 0)
        return []

    def _abort_step(self, t, d):
        i = d["phase"][1]
        if i < len(d["held"]):
            del self.g["lock"][d["held"][i]]
            d["phase"] = ("abort", i + 1)
            return []
        return self._finish(t, d, ABORTED)

    def _finish(self, t, d, kind):
        self.g["active"].pop(t, None)
        d.update(tx=False, held=(), phase=None, rset=frozenset(), wset=(), tries=0,
                 v1=None, val=None)
        if self.fenced:
            d["fence"] = "snap"
        return self.respond(t, kind)

    def _read_step(self, t, d, reg):
        ws = dict(d["wset"])
        if reg in ws:
            return self.respond(t, RET, ws[reg])
        g = self.g
        ph = d["phase"]
        owner = g["lock"].get(reg)
        ver = g["ver"].get(reg, 0)
        if ph is None:                      # pre-validation word
            if (owner is not None and owner != t) or ver > d["rv"]:
                return self._start_abort(t, d)
            d["v1"] = ver
            d["phase"] = ("rval",)
            return []
        if ph[0] == "rval":
            d["val"] = self.read_mem(reg)
            d["phase"] = ("rpost",)
            return []
        # post-validation
        if (owner is not None and owner != t) or ver != d["v1"] or ver > d["rv"]:
            return self._start_abort(t, d)
        val = d["val"]
        d.update(phase=None, v1=None, val=None, rset=d["rset"] | {reg})
        return self.respond(t, RET, val)

    def _commit_step(self, t, d):
        g = self.g
        ws = d["wset"]
        if not ws:
            return self._finish(t, d, COMMITTED)
        ph = d["phase"] or ("lock", 0)
        tag = ph[0]
        if tag == "lock":
            i = ph[1]
            reg = ws[i][0]
            owner = g["lock"].get(reg)
            if owner is None:
                g["lock"][reg] = t
                d["held"] = d["held"] + (reg,)
                d["tries"] = 0
                d["phase"] = ("lock", i + 1) if i + 1 < len(ws) else ("clock",)
            elif d["tries"] < self.retries:
                d["tries"] += 1
                d["phase"] = ph
            else:
                return self._start_abort(t, d)
            return []
        if tag == "clock":
            g["clock"] += 1
            d["wv"] = g["clock"]
            rs = sorted(d["rset"])
            d["phase"] = ("val", 0) if rs else ("wb", 0)
            return []
        if tag == "val":
            rs = sorted(d["rset"])
            reg = rs[ph[1]]
            owner = g["lock"].get(reg)
            if (owner is not None and owner != t) or g["ver"].get(reg, 0) > d["rv"]:
                return self._start_abort(t, d)
            d["phase"] = ("val", ph[1] + 1) if ph[1] + 1 < len(rs) else ("wb", 0)
            return []
        if tag == "wb":
            reg, val = ws[ph[1]]
            self.mem[reg] = val
            d["phase"] = ("wb", ph[1] + 1) if ph[1] + 1 < len(ws) else ("rel", 0)
            return [wb(reg, val)]
        if tag == "rel":
            reg = d["held"][ph[1]]
            g["ver"][reg] = d["wv"]
            del g["lock"][reg]
            d["phase"] = ("rel", ph[1] + 1) if ph[1] + 1 < len(d["held"]) else ("done",)
            return []
        if tag == "done":
            d["held"] = ()
            return self._finish(t, d, COMMITTED)
        raise AssertionError(ph)

    def _fence_step(self, t, d):
        f = d["fence"]
        if f == "snap":
            others = frozenset(s for u, s in self.g["active"].items() if u != t)
            d["fence"] = others if others else None
            return []
        d["fence"] = None
        return []


class FencedTL2(PlainTL2):
    name = "fencedtl2"
    fenced = True
