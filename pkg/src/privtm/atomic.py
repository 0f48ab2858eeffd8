"""The strongly atomic reference TM.

A history belongs to it when no transaction overlaps another transaction or a
non-transactional access, and some completion of its commit-pending
transactions justifies every read value.
"""
from __future__ import annotations

from itertools import product
from typing import Iterator, Optional, Sequence

from .actions import (ABORTED, ABORTED_STATUS, COMMITTED, COMMITTED_STATUS, LIVE_STATUS,
                      PENDING_STATUS, READ, RET, TRYCOMMIT, WRITE, Action, structure)

V_INIT = 0
DEFAULT_PERM_CAP = 12


class CapExceeded(RuntimeError):
    """Raised when a history has too many reorderable units to enumerate."""


class NotNonInterleaved(ValueError):
    pass


def is_non_interleaved(h: Sequence[Action]) -> bool:
    s = structure(h)
    for k, tx in enumerate(s.txs):
        lo, hi = tx.span
        for j in range(lo, hi + 1):
            if h[j].is_interface and s.tx_of[j] != k:
                return False
    return True


def completions(h: Sequence[Action]) -> list[tuple]:
    """All completions, each marker placed right after its trycommit."""
    h = tuple(h)
    if not is_non_interleaved(h):
        raise NotNonInterleaved("completions are defined for non-interleaved histories only")
    s = structure(h)
    pend = [tx for tx in s.txs if tx.status == PENDING_STATUS]
    next_id = max((a.id for a in h), default=0) + 1
    out = []
    for choice in product((COMMITTED, ABORTED), repeat=len(pend)):
        extra = {}
        for k, (tx, kind) in enumerate(zip(pend, choice)):
            extra[tx.span[1]] = Action(next_id + k, tx.thread, kind)
        hc = []
        for i, a in enumerate(h):
            hc.append(a)
            if i in extra:
                hc.append(extra[i])
        out.append(tuple(hc))
    return out


def _read_request(s, idx: int) -> int:
    req = s.match.get(idx)
    if req is None or s.actions[req].kind != READ or s.actions[idx].kind != RET:
        raise ValueError(f"index {idx} is not a read response")
    return req


def atomic_read_value(h: Sequence[Action], idx: int,
                      status: Optional[dict] = None, _s=None) -> int:
    """Value the atomic TM lets the read response at ``idx`` return.

    ``status`` optionally overrides transaction statuses by transaction
    number, which is how a completion choice is applied without rebuilding
    the history.
    """
    s = _s if _s is not None else structure(h)
    req = _read_request(s, idx)
    reg = s.actions[req].reg
    mine = s.tx_of[req]
    for j in range(req - 1, -1, -1):
        a = s.actions[j]
        if a.kind != WRITE or a.reg != reg:
            continue
        k = s.tx_of[j]
        if k is not None and k != mine:
            st = status.get(k, s.txs[k].status) if status else s.txs[k].status
            if st in (ABORTED_STATUS, LIVE_STATUS):
                continue
        return a.value
    return V_INIT


def is_atomic(h: Sequence[Action]) -> bool:
    h = tuple(h)
    if not is_non_interleaved(h):
        return False
    s = structure(h)
    reads = [i for i, a in enumerate(h) if a.kind == RET and s.match.get(i) is not None
             and h[s.match[i]].kind == READ]
    pend = [k for k, tx in enumerate(s.txs) if tx.status == PENDING_STATUS
            and any(h[j].kind == WRITE for j in tx.indices)]
    for choice in product((COMMITTED_STATUS, ABORTED_STATUS), repeat=len(pend)):
        status = dict(zip(pend, choice))
        if all(atomic_read_value(h, i, status, s) == h[i].value for i in reads):
            return True
    return False


# ------------------------------------------------------------ serializations

def _units(s) -> list[tuple[int, ...]]:
    """Transactions and non-transactional accesses as blocks, other
    non-transactional actions (fences) as singletons; ordered by first index."""
    seen = set()
    units = []
    for i, a in enumerate(s.actions):
        if i in seen or not a.is_interface:
            continue
        if s.tx_of[i] is not None:
            block = s.txs[s.tx_of[i]].indices
        elif s.access_of[i] is not None:
            acc = s.accesses[s.access_of[i]]
            block = (acc.request, acc.response)
        else:
            block = (i,)
        seen.update(block)
        units.append(tuple(block))
    return units


def unit_order(h: Sequence[Action]):
    """Units and, for each unit, the set of units that must precede it
    (per-thread order plus client order between non-transactional units)."""
    s = structure(h)
    units = _units(s)
    n = len(units)
    preds = [0] * n
    for v in range(n):
        for u in range(v):
            a, b = units[u][0], units[v][0]
            same_thread = h[a].thread == h[b].thread
            both_nontx = s.tx_of[a] is None and s.tx_of[b] is None
            if same_thread or both_nontx:
                preds[v] |= 1 << u
    return s, units, preds


def enumerate_atomic_matches(h: Sequence[Action], cap: int = DEFAULT_PERM_CAP) -> Iterator[tuple]:
    """Every atomic history that is a po/cl-preserving permutation of ``h``.

    Transactions and non-transactional accesses move as blocks; a candidate
    prefix is abandoned as soon as no completion choice can justify its
    reads.
    """
    h = tuple(h)
    s, units, preds = unit_order(h)
    if len(units) > cap:
        raise CapExceeded(f"{len(units)} reorderable units exceed the cap of {cap}; "
                          "use the graph-based checks instead")

    kinds = []
    for u in units:
        k = s.tx_of[u[0]]
        kinds.append(("tx", k) if k is not None else ("na", None))

    def effects(unit_no: int, mem: dict) -> list[dict]:
        """Memories after placing a unit on ``mem``; empty if some read fails."""
        kind, k = kinds[unit_no]
        if kind == "na":
            a = h[units[unit_no][0]]
            if a.kind == READ:
                r = h[units[unit_no][1]]
                return [mem] if mem.get(a.reg, V_INIT) == r.value else []
            if a.kind == WRITE:
                m = dict(mem)
                m[a.reg] = a.value
                return [m]
            return [mem]
        own: dict = {}
        for j in units[unit_no]:
            a = h[j]
            if a.kind == WRITE:
                own[a.reg] = a.value
            elif a.kind == RET and s.match.get(j) is not None and h[s.match[j]].kind == READ:
                reg = h[s.match[j]].reg
                expect = own[reg] if reg in own else mem.get(reg, V_INIT)
                if expect != a.value:
                    return []
        st = s.txs[k].status
        applied = dict(mem)
        applied.update(own)
        if st == COMMITTED_STATUS:
            return [applied]
        if st == PENDING_STATUS and own:
            return [applied, mem]
        return [mem]

    full = (1 << len(units)) - 1

    def dfs(placed: int, order: list[int], mems: list[dict]):
        if placed == full:
            yield tuple(h[j] for u in order for j in units[u])
            return
        for u in range(len(units)):
            if placed >> u & 1 or preds[u] & ~placed:
                continue
            nxt = []
            keys = set()
            for m in mems:
                for m2 in effects(u, m):
                    key = tuple(sorted(m2.items()))
                    if key not in keys:
                        keys.add(key)
                        nxt.append(m2)
            if not nxt:
                continue
            order.append(u)
            yield from dfs(placed | 1 << u, order, nxt)
            order.pop()

    yield from dfs(0, [], [{}])


def count_units(h: Sequence[Action]) -> int:
    return len(_units(structure(h)))


__all__ = ["V_INIT", "CapExceeded", "NotNonInterleaved", "is_non_interleaved", "completions",
           "atomic_read_value", "is_atomic", "enumerate_atomic_matches", "unit_order",
           "count_units", "TRYCOMMIT"]
