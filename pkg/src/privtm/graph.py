"""Consistency, opacity graphs and the graph-based checks.

Vertices are the transactions and non-transactional accesses of a history.
Relations between vertices are stored as sets of ``(src, dst)`` vertex-number
pairs; reachability uses per-vertex bitmasks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Iterator, NamedTuple, Optional, Sequence

from .actions import (ABORTED, ABORTED_STATUS, COMMITTED, COMMITTED_STATUS, FBEGIN, FEND,
                      LIVE_STATUS, PENDING_STATUS, READ, RET, WRITE, Action, structure)
from .atomic import DEFAULT_PERM_CAP, V_INIT, enumerate_atomic_matches
from .races import conflicts


class InconsistentHistory(ValueError):
    pass


class CyclicGraph(ValueError):
    pass


# ------------------------------------------------------------- consistency

class ConsReport(NamedTuple):
    ok: bool
    bad_reads: list      # indices of inconsistent read responses

    def __bool__(self):
        return self.ok


def _read_pairs(s):
    """(request, response) index pairs of completed reads."""
    h = s.actions
    return [(r, s.match[r]) for r, a in enumerate(h)
            if a.kind == READ and r in s.match and h[s.match[r]].kind == RET]


def _nonlocal_writes(s) -> list[int]:
    """Write requests that are not followed by another write to the same
    register in their transaction."""
    h = s.actions
    out = []
    for i, a in enumerate(h):
        if a.kind != WRITE:
            continue
        k = s.tx_of[i]
        if k is not None and any(h[j].kind == WRITE and h[j].reg == a.reg
                                 for j in s.txs[k].indices if j > i):
            continue
        out.append(i)
    return out


def _local_value(s, req: int):
    """Most recent own write to the read's register, or None if non-local."""
    k = s.tx_of[req]
    if k is None:
        return None
    h = s.actions
    reg = h[req].reg
    val = None
    for j in s.txs[k].indices:
        if j >= req:
            break
        if h[j].kind == WRITE and h[j].reg == reg:
            val = (h[j].value,)
    return val


def cons(h: Sequence[Action]) -> ConsReport:
    h = tuple(h)
    s = structure(h)
    eligible = set()
    for j in _nonlocal_writes(s):
        k = s.tx_of[j]
        if k is not None and s.txs[k].status in (ABORTED_STATUS, LIVE_STATUS):
            continue
        eligible.add((h[j].reg, h[j].value))
    bad = []
    for req, resp in _read_pairs(s):
        v = h[resp].value
        loc = _local_value(s, req)
        if loc is not None:
            if loc[0] != v:
                bad.append(resp)
        elif v != V_INIT and (h[req].reg, v) not in eligible:
            bad.append(resp)
    return ConsReport(not bad, bad)


# ------------------------------------------------------------------ graphs

@dataclass(frozen=True)
class Vertex:
    name: str                 # T<k> or n<k>
    is_tx: bool
    thread: int
    indices: tuple
    status: str               # transaction status, or "access"
    writes: tuple = ()        # (reg, last value written) pairs
    reads: tuple = ()         # (reg, value) of non-local completed reads


@dataclass(frozen=True)
class OpacityGraph:
    vertices: tuple
    vis: frozenset
    wr: dict = field(hash=False)      # reg -> frozenset of pairs
    ww: dict = field(hash=False)      # reg -> tuple giving the total order
    rw: dict = field(hash=False)      # reg -> frozenset of pairs
    po: frozenset = frozenset()
    cl: frozenset = frozenset()
    rt: frozenset = frozenset()

    def ww_pairs(self, reg=None) -> set:
        out = set()
        for x, order in self.ww.items():
            if reg is None or x == reg:
                out.update((order[a], order[b]) for a in range(len(order))
                           for b in range(a + 1, len(order)))
        return out

    def wr_pairs(self) -> set:
        return set().union(*self.wr.values()) if self.wr else set()

    def rw_pairs(self) -> set:
        return set().union(*self.rw.values()) if self.rw else set()

    def dep_pairs(self, with_rt: bool = False) -> set:
        e = self.wr_pairs() | self.ww_pairs() | self.rw_pairs() | set(self.po) | set(self.cl)
        if with_rt:
            e |= set(self.rt)
        return e

    def txdep_pairs(self) -> set:
        tx = {i for i, v in enumerate(self.vertices) if v.is_tx}
        return {(a, b) for a, b in self.wr_pairs() | self.ww_pairs() | self.rw_pairs()
                if a in tx and b in tx}

    def name(self, i: int) -> str:
        return self.vertices[i].name


def _reject_fences(h):
    if any(a.kind in (FBEGIN, FEND) for a in h):
        raise ValueError("opacity graphs are defined for fence-free histories")


def vertices_of(h: Sequence[Action], s=None) -> tuple:
    h = tuple(h)
    _reject_fences(h)
    s = s or structure(h)
    starts = []
    for k, tx in enumerate(s.txs):
        starts.append((tx.span[0], True, k))
    for k, acc in enumerate(s.accesses):
        starts.append((acc.request, False, k))
    starts.sort()
    verts = []
    tcount = ncount = 0
    for _, is_tx, k in starts:
        if is_tx:
            tx = s.txs[k]
            tcount += 1
            writes = {}
            reads = []
            for j in tx.indices:
                a = h[j]
                if a.kind == WRITE:
                    writes[a.reg] = a.value
            for req, resp in _read_pairs(s):
                if s.tx_of[req] == k and _local_value(s, req) is None:
                    reads.append((h[req].reg, h[resp].value))
            verts.append(Vertex(f"T{tcount}", True, tx.thread, tx.indices, tx.status,
                                tuple(sorted(writes.items())), tuple(reads)))
        else:
            acc = s.accesses[k]
            ncount += 1
            w = ((acc.reg, acc.value),) if acc.kind == WRITE else ()
            r = ((acc.reg, acc.value),) if acc.kind == READ else ()
            verts.append(Vertex(f"n{ncount}", False, acc.thread, (acc.request, acc.response),
                                "access", w, r))
    return tuple(verts)


def _static_relations(h, verts):
    po, cl, rt = set(), set(), set()
    for i, u in enumerate(verts):
        for j, v in enumerate(verts):
            if i == j:
                continue
            if u.thread == v.thread and u.indices[0] < v.indices[0]:
                po.add((i, j))
            if not u.is_tx and not v.is_tx and u.indices[0] < v.indices[0]:
                cl.add((i, j))
            if (u.is_tx and v.is_tx and u.status in (COMMITTED_STATUS, ABORTED_STATUS)
                    and u.indices[-1] < v.indices[0]):
                rt.add((i, j))
    return frozenset(po), frozenset(cl), frozenset(rt)


def derive_rw(vertices, vis, wr: dict, ww: dict) -> dict:
    """Anti-dependencies determined by visibility, WR and WW."""
    rw = {}
    regs = set(wr) | set(ww) | {x for v in vertices for x, _ in v.reads}
    for x in regs:
        order = ww.get(x, ())
        succ = {order[a]: order[a + 1:] for a in range(len(order))}
        edges = set()
        sourced = set()
        for src, dst in wr.get(x, ()):
            sourced.add(dst)
            for w in succ.get(src, ()):
                if w != dst:
                    edges.add((dst, w))
        writers = [i for i in order if i in vis]
        for i, v in enumerate(vertices):
            if i in sourced:
                continue
            if any(r == x and val == V_INIT for r, val in v.reads):
                edges.update((i, w) for w in writers if w != i)
        if edges:
            rw[x] = frozenset(edges)
    return rw


def _masks(n: int, pairs) -> list[int]:
    m = [0] * n
    for a, b in pairs:
        m[a] |= 1 << b
    return m


def _acyclic_masks(m: list[int]) -> bool:
    n = len(m)
    indeg = [0] * n
    for a in range(n):
        r = m[a]
        while r:
            low = r & -r
            indeg[low.bit_length() - 1] += 1
            r ^= low
    stack = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while stack:
        a = stack.pop()
        seen += 1
        r = m[a]
        while r:
            low = r & -r
            b = low.bit_length() - 1
            indeg[b] -= 1
            if indeg[b] == 0:
                stack.append(b)
            r ^= low
    return seen == n


def is_acyclic(g: OpacityGraph, with_rt: bool = False) -> bool:
    return _acyclic_masks(_masks(len(g.vertices), g.dep_pairs(with_rt)))


def _vis_choices(verts, all_vis: bool):
    fixed = {i for i, v in enumerate(verts)
             if not v.is_tx or v.status == COMMITTED_STATUS}
    free = [i for i, v in enumerate(verts) if v.is_tx and v.status == PENDING_STATUS
            and (all_vis or v.writes)]
    for bits in product((True, False), repeat=len(free)):
        yield frozenset(fixed | {i for i, b in zip(free, bits) if b})


def _wr_choices(verts, vis):
    """Per (reader, reg) the candidate sources; None stands for reading v_init
    without a source.  Returns None when some read cannot be explained."""
    slots = []
    for i, v in enumerate(verts):
        per_reg: dict = {}
        for x, val in v.reads:
            per_reg.setdefault(x, set()).add(val)
        for x, vals in sorted(per_reg.items()):
            if len(vals) > 1:
                return None
            val = next(iter(vals))
            cands = [j for j, u in enumerate(verts)
                     if j != i and j in vis and dict(u.writes).get(x) == val]
            if val == V_INIT:
                cands.append(None)
            if not cands:
                return None
            slots.append((i, x, cands))
    return slots


def _graphs(h, all_vis: bool, acyclic_only: bool) -> Iterator[OpacityGraph]:
    h = tuple(h)
    s = structure(h)
    verts = vertices_of(h, s)
    n = len(verts)
    po, cl, rt = _static_relations(h, verts)
    regs = sorted({x for v in verts for x, _ in v.writes} | {x for v in verts for x, _ in v.reads})
    base = _masks(n, po | cl)
    if acyclic_only and not _acyclic_masks(base):
        return
    for vis in _vis_choices(verts, all_vis):
        slots = _wr_choices(verts, vis)
        if slots is None:
            continue
        writers = {x: [i for i in range(n) if i in vis and x in dict(verts[i].writes)]
                   for x in regs}
        for pick in product(*[c for _, _, c in slots]):
            wr: dict = {}
            for (i, x, _), src in zip(slots, pick):
                if src is not None:
                    wr.setdefault(x, set()).add((src, i))
            wr = {x: frozenset(e) for x, e in wr.items()}
            m0 = list(base)
            for e in wr.values():
                for a, b in e:
                    m0[a] |= 1 << b
            if acyclic_only and not _acyclic_masks(m0):
                continue
            yield from _ww_search(verts, vis, wr, writers, regs, 0, {}, m0,
                                  po, cl, rt, acyclic_only)


def _ww_search(verts, vis, wr, writers, regs, k, ww, m, po, cl, rt, acyclic_only):
    if k == len(regs):
        rw = derive_rw(verts, vis, wr, ww)
        yield OpacityGraph(verts, vis, dict(wr), dict(ww), rw, po, cl, rt)
        return
    x = regs[k]
    for order in permutations(writers[x]):
        ww2 = dict(ww)
        if order:
            ww2[x] = tuple(order)
        m2 = m
        if acyclic_only:
            rwx = derive_rw(verts, vis, {x: wr.get(x, frozenset())}, {x: ww2.get(x, ())})
            m2 = list(m)
            for a in range(len(order)):
                for b in range(a + 1, len(order)):
                    m2[order[a]] |= 1 << order[b]
            for a, b in rwx.get(x, ()):
                m2[a] |= 1 << b
            if not _acyclic_masks(m2):
                continue
        yield from _ww_search(verts, vis, wr, writers, regs, k + 1, ww2, m2,
                              po, cl, rt, acyclic_only)


def enumerate_graphs(h: Sequence[Action]) -> Iterator[OpacityGraph]:
    """Every graph of a consistent history, cyclic or not."""
    if not cons(h):
        raise InconsistentHistory("graphs are enumerated for consistent histories only")
    return _graphs(h, all_vis=True, acyclic_only=False)


def acyclic_graphs(h: Sequence[Action]) -> Iterator[OpacityGraph]:
    """Acyclic graphs, with commit-pending transactions that write nothing
    kept invisible (their visibility changes no edge)."""
    if not cons(h):
        raise InconsistentHistory("graphs are enumerated for consistent histories only")
    return _graphs(h, all_vis=False, acyclic_only=True)


def check_opaque_graph(h: Sequence[Action]) -> Optional[OpacityGraph]:
    if not cons(h):
        return None
    return next(acyclic_graphs(h), None)


def check_opaque_direct(h: Sequence[Action], cap: int = DEFAULT_PERM_CAP) -> Optional[tuple]:
    return next(enumerate_atomic_matches(h, cap), None)


# ------------------------------------------------------------ linearizations

def topological_orders(n: int, pairs) -> Iterator[tuple]:
    preds = [0] * n
    for a, b in pairs:
        preds[b] |= 1 << a
    full = (1 << n) - 1

    def go(done, acc):
        if done == full:
            yield tuple(acc)
            return
        for v in range(n):
            if not done >> v & 1 and not preds[v] & ~done:
                acc.append(v)
                yield from go(done | 1 << v, acc)
                acc.pop()

    yield from go(0, [])


def linearizations(g: OpacityGraph, h: Sequence[Action], markers: bool = True) -> Iterator[tuple]:
    """Topological sorts of ``g`` rendered as non-interleaved histories.

    With ``markers`` a commit-pending transaction gets a synthesized
    committed (visible) or aborted (invisible) marker.
    """
    h = tuple(h)
    if not is_acyclic(g):
        raise CyclicGraph("a cyclic graph has no linearizations")
    next_id = max((a.id for a in h), default=0) + 1
    extra = {}
    if markers:
        for i, v in enumerate(g.vertices):
            if v.is_tx and v.status == PENDING_STATUS:
                kind = COMMITTED if i in g.vis else ABORTED
                extra[i] = Action(next_id, v.thread, kind)
                next_id += 1
    for order in topological_orders(len(g.vertices), g.dep_pairs()):
        out = []
        for i in order:
            out.extend(h[j] for j in g.vertices[i].indices)
            if i in extra:
                out.append(extra[i])
        yield tuple(out)


# --------------------------------------------------------------- CDRF by graph

def _reach(n: int, pairs) -> list[int]:
    """Reflexive-transitive reachability as bitmasks."""
    m = _masks(n, pairs)
    reach = [1 << i for i in range(n)]
    changed = True
    while changed:
        changed = False
        for a in range(n):
            r = reach[a]
            acc = r
            rr = r
            while rr:
                low = rr & -rr
                acc |= m[low.bit_length() - 1]
                rr ^= low
            if acc != r:
                reach[a] = acc
                changed = True
    return reach


def conflicting_vertex_pairs(h: Sequence[Action], verts) -> set:
    owner = {}
    for vi, v in enumerate(verts):
        for j in v.indices:
            owner[j] = vi
    return {(owner[c.nontx], owner[c.tx]) for c in conflicts(h)}


class GraphCdrfReport(NamedTuple):
    ok: bool
    graph: Optional[OpacityGraph]
    pair: Optional[tuple]       # unconnected (access, transaction) vertex names

    def __bool__(self):
        return self.ok


def cdrf_graph(h: Sequence[Action], with_rt: bool = False) -> GraphCdrfReport:
    """Every acyclic graph connects each conflicting vertex pair.

    Paths run over PO, CL and dependencies between transactions; real-time
    edges join only when ``with_rt`` is set.
    """
    h = tuple(h)
    if not cons(h):
        raise InconsistentHistory("the graph criterion needs a consistent history")
    pairs = None
    for g in acyclic_graphs(h):
        if pairs is None:
            pairs = conflicting_vertex_pairs(h, g.vertices)
            if not pairs:
                return GraphCdrfReport(True, None, None)
        edges = set(g.po) | set(g.cl) | g.txdep_pairs()
        if with_rt:
            edges |= set(g.rt)
        reach = _reach(len(g.vertices), edges)
        for a, b in sorted(pairs):
            if not (reach[a] >> b & 1 or reach[b] >> a & 1):
                return GraphCdrfReport(False, g, (g.name(a), g.name(b)))
    return GraphCdrfReport(True, None, None)


# ----------------------------------------------------------- path reductions

@dataclass(frozen=True)
class ReductionViolation:
    kind: str
    src: str
    dst: str

    def __str__(self):
        return f"{self.kind}: {self.src} -> {self.dst}"


def assert_path_reductions(g: OpacityGraph, h: Sequence[Action]) -> list[ReductionViolation]:
    """DEP paths between transactions reduce to RT/txDEP paths, and DEP
    paths between a transaction and an access take the PO;CL* shape."""
    if not is_acyclic(g):
        raise CyclicGraph("reductions are stated for acyclic graphs")
    if not cons(h):
        raise InconsistentHistory("reductions are stated for consistent histories")
    n = len(g.vertices)
    tx = [i for i, v in enumerate(g.vertices) if v.is_tx]
    na = [i for i, v in enumerate(g.vertices) if not v.is_tx]
    dep = _reach(n, g.dep_pairs())
    rtx = _reach(n, g.txdep_pairs() | set(g.rt))
    clr = _reach(n, g.cl)
    po = _masks(n, g.po)
    out = []
    for t in tx:
        for u in tx:
            if t != u and dep[t] >> u & 1 and not rtx[t] >> u & 1:
                out.append(ReductionViolation("tx-tx", g.name(t), g.name(u)))
    for t in tx:
        for m in na:
            if dep[t] >> m & 1:
                ok = any(rtx[t] >> t2 & 1 and po[t2] >> n2 & 1 and clr[n2] >> m & 1
                         for t2 in tx for n2 in na)
                if not ok:
                    out.append(ReductionViolation("tx-access", g.name(t), g.name(m)))
            if dep[m] >> t & 1:
                ok = any(clr[m] >> n2 & 1 and po[n2] >> t2 & 1 and rtx[t2] >> t & 1
                         for t2 in tx for n2 in na)
                if not ok:
                    out.append(ReductionViolation("access-tx", g.name(m), g.name(t)))
    return out


def check_hb_factoring(h: Sequence[Action]) -> list[tuple]:
    """For an atomic TDRF history: vertex-level hb between a transaction and
    an access factors through EF*;PO;CL* (or the mirror).  Returns the
    offending (src, dst) vertex name pairs."""
    from .races import happens_before
    h = tuple(h)
    hb = happens_before(h, check=False)
    verts = vertices_of(h)
    n = len(verts)
    tx = [i for i, v in enumerate(verts) if v.is_tx]
    na = [i for i, v in enumerate(verts) if not v.is_tx]

    def lifted(u, v):
        return any((a, b) in hb for a in verts[u].indices for b in verts[v].indices)

    def before(u, v):
        return verts[u].indices[0] < verts[v].indices[0]

    ef = [[u == v or before(u, v) for v in range(n)] for u in range(n)]
    po = [[u != v and verts[u].thread == verts[v].thread and before(u, v) for v in range(n)]
          for u in range(n)]
    cl = [[u == v or before(u, v) for v in range(n)] for u in range(n)]
    bad = []
    for t in tx:
        for m in na:
            if lifted(t, m):
                if not any(ef[t][t2] and po[t2][n2] and cl[n2][m] for t2 in tx for n2 in na):
                    bad.append((verts[t].name, verts[m].name))
            if lifted(m, t):
                if not any(cl[m][n2] and po[n2][t2] and ef[t2][t] for t2 in tx for n2 in na):
                    bad.append((verts[m].name, verts[t].name))
    return bad


# ------------------------------------------------------------ text format

def serialize_graph(g: OpacityGraph) -> str:
    lines = ["# vis: " + " ".join(g.name(i) for i in sorted(g.vis))]
    for x in sorted(g.wr):
        lines += [f"{g.name(a)} WR {x} {g.name(b)}" for a, b in sorted(g.wr[x])]
    for x in sorted(g.ww):
        lines += [f"{g.name(a)} WW {x} {g.name(b)}" for a, b in sorted(g.ww_pairs(x))]
    for x in sorted(g.rw):
        lines += [f"{g.name(a)} RW {x} {g.name(b)}" for a, b in sorted(g.rw[x])]
    for tag, rel in (("PO", g.po), ("CL", g.cl), ("RT", g.rt)):
        lines += [f"{g.name(a)} {tag} {g.name(b)}" for a, b in sorted(rel)]
    return "".join(line + "\n" for line in lines)


def parse_graph(text: str) -> list[tuple]:
    """Edges as (src, kind, reg-or-None, dst) tuples."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].split()
        if not body:
            continue
        if len(body) == 4 and body[1] in ("WR", "WW", "RW"):
            out.append((body[0], body[1], body[2], body[3]))
        elif len(body) == 3 and body[1] in ("PO", "CL", "RT"):
            out.append((body[0], body[1], None, body[2]))
        else:
            raise ValueError(f"line {lineno}: bad edge {line!r}")
    return out


__all__ = ["InconsistentHistory", "CyclicGraph", "ConsReport", "cons", "Vertex", "OpacityGraph",
           "vertices_of", "derive_rw", "is_acyclic", "enumerate_graphs", "acyclic_graphs",
           "check_opaque_graph", "check_opaque_direct", "topological_orders", "linearizations",
           "cdrf_graph", "GraphCdrfReport", "conflicting_vertex_pairs", "ReductionViolation",
           "assert_path_reductions", "check_hb_factoring", "serialize_graph", "parse_graph"]
