"""Online opacity-graph construction for TM executions.

The graph is grown by replaying an execution and applying the updates at
the algorithm's instrumentation points:

    TXINIT    at begintx (real-time edges come from the history itself)
    TXREAD    at the response of a non-local transactional read
    TXWRITE   TL2 variants and GlobalLock: just before the first write-back;
              2PL: at the trycommit request
    NTXWRITE  at the response of a non-transactional write
    NTXREAD   at the response of a non-transactional read

After every update the two invariants and acyclicity are evaluated.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..actions import (ABORTED, BEGINTX, COMMITTED, READ, RET, RETU, TRYCOMMIT, WB, WRITE,
                       Action)
from ..atomic import V_INIT
from ..graph import (OpacityGraph, _acyclic_masks, _masks, _reach, _static_relations, cons,
                     derive_rw, vertices_of)

# which form of the second invariant, and where TXWRITE happens
_PROFILES = {
    "fencedtl2": ("fence", "wb"),
    "tl2": ("fence", "wb"),
    "2pl": ("lock", "commit"),
    "globallock": ("lock", "wb"),
}


@dataclass(frozen=True)
class Update:
    index: int            # position in the execution
    kind: str             # TXINIT, TXREAD, ...
    vertex: str
    reg: Optional[str]
    inv1: bool
    inv2: bool
    acyclic: bool
    no_new_rw: bool = True    # reads: no anti-dependency leaves the reader


@dataclass
class WitnessReport:
    algorithm: str
    updates: list = field(default_factory=list)
    graph: Optional[OpacityGraph] = None
    unexplained: list = field(default_factory=list)   # reads with no writer of their value

    @property
    def ok(self) -> bool:
        return not self.unexplained and all(u.inv1 and u.inv2 and u.acyclic for u in self.updates)

    @property
    def reads_ok(self) -> bool:
        return all(u.no_new_rw for u in self.updates)

    def first_failure(self) -> Optional[Update]:
        return next((u for u in self.updates if not (u.inv1 and u.inv2 and u.acyclic)), None)

    def __bool__(self):
        return self.ok


def witness_graph(execution: Sequence[Action], algorithm: str) -> WitnessReport:
    try:
        inv2_form, write_point = _PROFILES[algorithm]
    except KeyError:
        raise ValueError(f"no instrumentation for algorithm {algorithm!r}") from None
    rep = WitnessReport(algorithm)
    hist: list = []
    # graph state keyed by the history index of each vertex's first action
    wr: dict = {}          # reg -> set of (src key, dst key)
    ww: dict = {}          # reg -> list of keys in write order
    vis: set = set()
    cur: dict = {}         # thread -> key of its open transaction
    wset: dict = {}        # tx key -> {reg: last value written}
    last_val: dict = {}    # key -> {reg: value written}
    wrote: set = set()     # transactions past TXWRITE
    local: dict = {}       # tx key -> registers written so far (reads of these are local)

    def snapshot(kind, key, reg, reader=None, before_rw=None):
        h = tuple(hist)
        verts = vertices_of(h)
        idx = {v.indices[0]: i for i, v in enumerate(verts)}
        wr_i = {x: frozenset((idx[a], idx[b]) for a, b in e) for x, e in wr.items() if e}
        ww_i = {x: tuple(idx[a] for a in o) for x, o in ww.items() if o}
        vis_i = frozenset(idx[k] for k in vis if k in idx)
        rw = derive_rw(verts, vis_i, wr_i, ww_i)
        po, cl, rt = _static_relations(h, verts)
        g = OpacityGraph(verts, vis_i, wr_i, ww_i, rw, po, cl, rt)
        tx = [i for i, v in enumerate(verts) if v.is_tx]
        txdep = g.txdep_pairs()
        inv1 = bool(cons(h)) and _acyclic_masks(_masks(len(verts), txdep | set(rt)))
        inv2 = _inv2(g, h, verts, tx, txdep, inv2_form)
        acyclic = _acyclic_masks(_masks(len(verts), g.dep_pairs()))
        fresh_rw = True
        if reader is not None:
            r = idx[reader]
            fresh_rw = not any(a == r for a, _ in g.rw_pairs() - (before_rw or set()))
        rep.updates.append(Update(pos, kind, verts[idx[key]].name, reg, inv1, inv2, acyclic,
                                  fresh_rw))
        rep.graph = g
        return g

    def rw_from(key):
        if rep.graph is None:
            return set()
        return set(rep.graph.rw_pairs())

    def source_of(reg, value, reader):
        for k in reversed(ww.get(reg, [])):
            if k != reader and last_val.get(k, {}).get(reg) == value:
                return k
        return None

    def txwrite(key, pos):
        wrote.add(key)
        vis.add(key)
        vals = wset.get(key, {})
        last_val[key] = dict(vals)
        for x in sorted(vals):
            ww.setdefault(x, []).append(key)
        for x in sorted(vals) or [None]:
            snapshot("TXWRITE", key, x)

    pending_req: dict = {}
    for pos, a in enumerate(execution):
        t = a.thread
        if a.kind == WB:
            key = cur.get(t)
            if key is not None and write_point == "wb" and key not in wrote:
                txwrite(key, pos)
            continue
        if not a.is_interface:
            continue
        hist.append(a)
        hi = len(hist) - 1
        if a.is_request:
            pending_req[t] = hi
        if a.kind == BEGINTX:
            cur[t] = hi
            wset[hi] = {}
            local[hi] = set()
            snapshot("TXINIT", hi, None)
        elif a.kind == WRITE and t in cur:
            wset[cur[t]][a.reg] = a.value
            local[cur[t]].add(a.reg)
        elif a.kind == TRYCOMMIT and write_point == "commit":
            txwrite(cur[t], pos)
        elif a.kind in (COMMITTED, ABORTED):
            key = cur.pop(t)
            if a.kind == COMMITTED:
                vis.add(key)
                last_val.setdefault(key, dict(wset.get(key, {})))
        elif a.kind == RET:
            req = hist[pending_req[t]]
            x, v = req.reg, a.value
            if t in cur:
                key = cur[t]
                if x in local[key]:
                    continue                         # served from its own writes
            else:
                key = pending_req[t]
            src = source_of(x, v, key)
            if src is None and v != V_INIT:
                rep.unexplained.append(pos)
            before = rw_from(key)
            if src is not None:
                wr.setdefault(x, set()).add((src, key))
            if t not in cur:
                vis.add(key)
            snapshot("TXREAD" if t in cur else "NTXREAD", key, x, reader=key, before_rw=before)
        elif a.kind == RETU and t not in cur:
            key = pending_req[t]
            req = hist[key]
            vis.add(key)
            last_val[key] = {req.reg: req.value}
            ww.setdefault(req.reg, []).append(key)
            snapshot("NTXWRITE", key, req.reg)
    return rep


def _inv2(g, h, verts, tx, txdep, form) -> bool:
    uncompleted = [i for i in tx if verts[i].status not in ("committed", "aborted")]
    if not uncompleted:
        return True
    if form == "lock":
        for i in uncompleted:
            last = h[verts[i].indices[-1]]
            if last.is_response and any(a == i and b in tx for a, b in txdep):
                return False
        return True
    reach = _reach(len(verts), txdep)
    has_po_succ = {a for a, _ in g.po}
    for i in uncompleted:
        r = reach[i]
        for j in tx:
            if r >> j & 1 and j in has_po_succ:
                return False
    return True


__all__ = ["witness_graph", "WitnessReport", "Update"]
