"""Conflicts, happens-before, correspondence and the race-freedom checks.

Relations over a history are kept as per-index bitsets: ``reach[i]`` has bit
``j`` set when ``i`` is ordered before ``j``.  Every generating edge points
forward in the history, so closures are one backwards sweep.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

from .actions import (ABORTED, BEGINTX, COMMITTED, FBEGIN, FEND, READ, WRITE, Action, structure)
from .atomic import DEFAULT_PERM_CAP, CapExceeded, enumerate_atomic_matches, is_atomic


class NotAtomic(ValueError):
    """happens-before is only defined for histories of the atomic TM."""


@dataclass(frozen=True)
class ConflictPair:
    nontx: int        # index of the non-transactional request
    tx: int           # index of the transactional request
    reg: str
    kinds: tuple      # (nontx kind, tx kind)


class Relation:
    """A strict order over the indices of one history."""

    def __init__(self, reach: list[int]):
        self.reach = reach

    def __len__(self):
        return len(self.reach)

    def __contains__(self, pair) -> bool:
        i, j = pair
        return bool(self.reach[i] >> j & 1)

    def ordered(self, i: int, j: int) -> bool:
        return (i, j) in self or (j, i) in self

    def pairs(self) -> Iterable[tuple[int, int]]:
        for i, r in enumerate(self.reach):
            j = 0
            while r:
                if r & 1:
                    yield i, j
                r >>= 1
                j += 1


def _close(direct: list[int]) -> Relation:
    n = len(direct)
    reach = [0] * n
    for i in range(n - 1, -1, -1):
        r = direct[i]
        acc = r
        while r:
            low = r & -r
            acc |= reach[low.bit_length() - 1]
            r ^= low
        reach[i] = acc
    return Relation(reach)


def conflicts(h: Sequence[Action]) -> list[ConflictPair]:
    s = structure(h)
    na = [i for i, a in enumerate(h) if a.kind in (READ, WRITE) and s.tx_of[i] is None]
    tx = [i for i, a in enumerate(h) if a.kind in (READ, WRITE) and s.tx_of[i] is not None]
    out = []
    for i in na:
        a = h[i]
        for j in tx:
            b = h[j]
            if a.thread != b.thread and a.reg == b.reg and WRITE in (a.kind, b.kind):
                out.append(ConflictPair(i, j, a.reg, (a.kind, b.kind)))
    return out


def _po_cl_direct(h, s) -> list[int]:
    n = len(h)
    direct = [0] * n
    last_of: dict = {}
    last_na = None
    for i, a in enumerate(h):
        if not a.is_interface:
            continue
        p = last_of.get(a.thread)
        if p is not None:
            direct[p] |= 1 << i
        last_of[a.thread] = i
        if s.tx_of[i] is None:
            if last_na is not None:
                direct[last_na] |= 1 << i
            last_na = i
    return direct


def _ef_direct(h, s, direct: list[int]) -> None:
    # i -> j for every later action j of a different transaction
    tx_mask: dict[int, int] = {}
    for j, k in enumerate(s.tx_of):
        if k is not None:
            tx_mask[k] = tx_mask.get(k, 0) | 1 << j
    all_tx = 0
    for m in tx_mask.values():
        all_tx |= m
    n = len(h)
    for i in range(n):
        k = s.tx_of[i]
        if k is None:
            continue
        later = all_tx & ~tx_mask[k] & ~((1 << (i + 1)) - 1)
        direct[i] |= later


def happens_before(h: Sequence[Action], check: bool = True) -> Relation:
    h = tuple(h)
    if check and not is_atomic(h):
        raise NotAtomic("happens-before is defined for atomic histories only")
    s = structure(h)
    direct = _po_cl_direct(h, s)
    _ef_direct(h, s, direct)
    return _close(direct)


class RaceReport(NamedTuple):
    ok: bool
    races: list          # unordered ConflictPairs

    def __bool__(self):
        return self.ok


def _check_ordered(h, rel: Relation) -> RaceReport:
    races = [c for c in conflicts(h) if not rel.ordered(c.nontx, c.tx)]
    return RaceReport(not races, races)


def tdrf(h: Sequence[Action], check: bool = True) -> RaceReport:
    h = tuple(h)
    return _check_ordered(h, happens_before(h, check))


def _po_cl_pairs(h) -> list[list[int]]:
    """Chains whose consecutive elements generate po and cl."""
    s = structure(h)
    chains: dict = {}
    na = []
    for i, a in enumerate(h):
        if not a.is_interface:
            continue
        chains.setdefault(a.thread, []).append(i)
        if s.tx_of[i] is None:
            na.append(i)
    return list(chains.values()) + [na]


def corresponds(h1: Sequence[Action], h2: Sequence[Action]) -> Optional[tuple]:
    """A bijection witnessing ``h1`` corresponds to ``h2``, or None.

    Ids are unique in well-formed histories, so the only candidate bijection
    maps each action to the action with the same id.
    """
    h1, h2 = tuple(h1), tuple(h2)
    if len(h1) != len(h2):
        return None
    pos = {a.id: j for j, a in enumerate(h2)}
    if len(pos) != len(h2):
        raise ValueError("second history has duplicate ids")
    theta = []
    for a in h1:
        j = pos.get(a.id)
        if j is None or h2[j] != a:
            return None
        theta.append(j)
    if len(set(theta)) != len(theta):
        return None
    for chain in _po_cl_pairs(h1):
        for u, v in zip(chain, chain[1:]):
            if theta[u] > theta[v]:
                return None
    return tuple(theta)


class CdrfReport(NamedTuple):
    ok: bool
    witness: Optional[tuple]     # a matching atomic history with a race
    races: list

    def __bool__(self):
        return self.ok


def cdrf(h: Sequence[Action], cap: int = DEFAULT_PERM_CAP) -> CdrfReport:
    """Every atomic history matching ``h`` is TDRF (enumeration form)."""
    for S in enumerate_atomic_matches(h, cap):
        rep = tdrf(S, check=False)
        if not rep.ok:
            return CdrfReport(False, S, rep.races)
    return CdrfReport(True, None, [])


# ---------------------------------------------------------------- fences

def fhb(h: Sequence[Action]) -> Relation:
    """Fenced happens-before: po, cl, after-fence, before-fence and xpo;ef."""
    h = tuple(h)
    s = structure(h)
    n = len(h)
    direct = _po_cl_direct(h, s)
    fbegins = [i for i, a in enumerate(h) if a.kind == FBEGIN]
    fends = [i for i, a in enumerate(h) if a.kind == FEND]
    for i, a in enumerate(h):
        if a.kind == BEGINTX:
            for f in fbegins:
                if f < i:
                    direct[f] |= 1 << i
        elif a.kind in (COMMITTED, ABORTED):
            for f in fends:
                if f > i:
                    direct[i] |= 1 << f

    # xpo;ef: beta0 is the first action after the first begintx strictly
    # after alpha in alpha's thread; later betas only shrink the target set
    tx_mask: dict[int, int] = {}
    for j, k in enumerate(s.tx_of):
        if k is not None:
            tx_mask[k] = tx_mask.get(k, 0) | 1 << j
    all_tx = 0
    for m in tx_mask.values():
        all_tx |= m
    by_thread: dict = {}
    for i, a in enumerate(h):
        if a.is_interface:
            by_thread.setdefault(a.thread, []).append(i)
    for seq in by_thread.values():
        for p, i in enumerate(seq):
            beta = None
            for q in range(p + 1, len(seq)):
                if h[seq[q]].kind == BEGINTX and q + 1 < len(seq):
                    beta = seq[q + 1]
                    break
            if beta is None or s.tx_of[beta] is None:
                continue
            k = s.tx_of[beta]
            direct[i] |= all_tx & ~tx_mask[k] & ~((1 << (beta + 1)) - 1)
    return _close(direct)


def drf_fenced(h: Sequence[Action], cap: int = DEFAULT_PERM_CAP) -> CdrfReport:
    """Every matching atomic history orders all conflicts by fhb."""
    for S in enumerate_atomic_matches(h, cap):
        rep = _check_ordered(S, fhb(S))
        if not rep.ok:
            return CdrfReport(False, S, rep.races)
    return CdrfReport(True, None, [])


__all__ = ["NotAtomic", "ConflictPair", "Relation", "conflicts", "happens_before", "tdrf",
           "RaceReport", "corresponds", "cdrf", "CdrfReport", "fhb", "drf_fenced", "CapExceeded"]
