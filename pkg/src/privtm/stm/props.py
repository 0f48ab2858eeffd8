"""Bounded checks of TM-level properties against a most-general client.

The client drives two threads over registers ``x`` and ``y`` with the
value 1; every request is submitted when the TM allows it and every
scheduling choice between micro-steps is explored.
"""
from __future__ import annotations

import random
from collections import deque
from typing import NamedTuple, Optional

from ..actions import ABORTED, BEGINTX, COMMITTED, READ, TRYCOMMIT, WB, WRITE, Action
from . import ALGORITHMS

REGS = ("x", "y")
VALUE = 1
SOLO_LIMIT = 200          # internal steps allowed before a solo run counts as stuck


class PropReport(NamedTuple):
    holds: bool
    witness: Optional[tuple]        # execution ending with the unanswered request
    states: int

    def __bool__(self):
        return self.holds


def _cls(algorithm):
    return ALGORITHMS[algorithm] if isinstance(algorithm, str) else algorithm


def _requests(st, t, regs=REGS):
    if not st.in_tx(t):
        return [(BEGINTX, None, None)]
    out = [(READ, x, None) for x in regs] + [(WRITE, x, VALUE) for x in regs]
    return out + [(TRYCOMMIT, None, None)]


def _emit(trace, t, out):
    return trace + tuple(Action(len(trace) + i + 1, t, k, r, v) for i, (k, r, v) in enumerate(out))


def _solo(st, t):
    """Run thread ``t`` alone until it answers its request.  Returns
    (response kind, trace suffix) or (None, suffix) when it blocks."""
    st = st.copy()
    suffix = []
    for _ in range(SOLO_LIMIT):
        if not st.enabled(t):
            return None, suffix
        out = st.step(t)
        suffix.extend(out)
        for k, _, _ in out:
            if k != WB:
                return k, suffix
    return None, suffix


def _reachable(cls, depth: int, threads=(1, 2)):
    """Breadth-first over executions with at most ``depth`` requests,
    yielding (state, trace, request count) once per distinct state."""
    st0 = cls(list(threads), {})
    seen = set()
    queue = deque([(st0, (), 0)])
    while queue:
        st, tr, n = queue.popleft()
        key = st.key()
        if key in seen:
            continue
        seen.add(key)
        yield st, tr, n
        for t in threads:
            if st.busy(t):
                if st.enabled(t):
                    st2 = st.copy()
                    queue.append((st2, _emit(tr, t, st2.step(t)), n))
            elif n < depth:
                for kind, reg, val in _requests(st, t):
                    st2 = st.copy()
                    st2.request(t, kind, reg, val)
                    queue.append((st2, _emit(tr, t, [(kind, reg, val)]), n + 1))


def _uncompleted(st, threads):
    return [t for t in threads if st.in_tx(t)]


def _pending_request(st, t):
    d = st.th[t]
    return d.get("req")


def check_progressive_bounded(algorithm, depth: int = 4) -> PropReport:
    """Every reachable execution with at most one uncompleted transaction
    whose thread awaits a response can be completed by that thread alone."""
    cls = _cls(algorithm)
    threads = (1, 2)
    count = 0
    for st, tr, _ in _reachable(cls, depth, threads):
        count += 1
        open_tx = _uncompleted(st, threads)
        if len(open_tx) != 1:
            continue
        t = open_tx[0]
        if _pending_request(st, t) is None:
            continue
        kind, suffix = _solo(st, t)
        if kind is None:
            return PropReport(False, _emit(tr, t, suffix), count)
    return PropReport(True, None, count)


def check_invisible_reads_bounded(algorithm, depth: int = 4, extra: int = 4) -> PropReport:
    """From every execution with at most one uncompleted transaction T, a
    fresh transaction T' of another thread that only conflicts with T's
    reads gets every request answered without aborting, running alone."""
    cls = _cls(algorithm)
    threads = (1, 2)
    count = 0
    for st, tr, _ in _reachable(cls, depth, threads):
        count += 1
        open_tx = _uncompleted(st, threads)
        if len(open_tx) > 1:
            continue
        others = [t for t in threads if t not in open_tx and not st.busy(t)]
        for t2 in others:
            forbidden = _written_by_open(tr, open_tx)
            regs = tuple(x for x in REGS if x not in forbidden)
            bad = _run_intruder(st, tr, t2, regs, extra)
            if bad is not None:
                return PropReport(False, bad, count)
    return PropReport(True, None, count)


def _written_by_open(tr, open_tx) -> set:
    """Registers written by the open transaction(s) in the trace."""
    out = set()
    for t in open_tx:
        last_begin = max(i for i, a in enumerate(tr) if a.thread == t and a.kind == BEGINTX)
        out |= {a.reg for a in tr[last_begin:] if a.thread == t and a.kind == WRITE}
    return out


def _run_intruder(st, tr, t, regs, extra):
    """Depth-first over the intruding transaction's request choices."""
    stack = [(st, tr, 0)]
    while stack:
        cur, ctr, n = stack.pop()
        if n >= extra:
            continue
        if n > 0 and not cur.in_tx(t):
            continue                 # the intruder completed
        for kind, reg, val in _requests(cur, t, regs):
            s2 = cur.copy()
            s2.request(t, kind, reg, val)
            tr2 = _emit(ctr, t, [(kind, reg, val)])
            resp, suffix = _solo(s2, t)
            tr3 = _emit(tr2, t, suffix)
            if resp is None or resp == ABORTED:
                return tr3
            stack.append((_replay_solo(s2, t), tr3, n + 1))
    return None


def _replay_solo(st, t):
    st = st.copy()
    while True:
        out = st.step(t)
        if any(k != WB for k, _, _ in out):
            return st


# -------------------------------------------------------- write-back shape

class BlockCheck(NamedTuple):
    ok: bool
    ops: tuple
    execution: tuple
    problem: str


def run_solo_block(algorithm, ops, threads=(1,)) -> tuple:
    """Execute begintx, ``ops`` and trycommit alone; returns the execution."""
    cls = _cls(algorithm)
    st = cls(list(threads), {})
    t = threads[0]
    tr: tuple = ()
    for kind, reg, val in [(BEGINTX, None, None)] + list(ops) + [(TRYCOMMIT, None, None)]:
        st.request(t, kind, reg, val)
        tr = _emit(tr, t, [(kind, reg, val)])
        while True:
            if not st.enabled(t):
                raise RuntimeError("solo transaction blocked")
            out = st.step(t)
            tr = _emit(tr, t, out)
            if any(k != WB for k, _, _ in out):
                break
        if tr[-1].kind == ABORTED:
            break
    # let a trailing fence finish
    while st.busy(t) and st.enabled(t):
        tr = _emit(tr, t, st.step(t))
    return tr


def check_writeback_shape(algorithm, ops) -> BlockCheck:
    """A committed solo block writes back the last value written to each
    register, and no write-back to a register precedes its first write."""
    ex = run_solo_block(algorithm, ops)
    if not any(a.kind == COMMITTED for a in ex):
        return BlockCheck(True, tuple(ops), ex, "aborted")
    last, first = {}, {}
    for i, a in enumerate(ex):
        if a.kind == WRITE:
            last[a.reg] = a.value
            first.setdefault(a.reg, i)
    for x, v in last.items():
        if not any(a.kind == WB and a.reg == x and a.value == v for a in ex):
            return BlockCheck(False, tuple(ops), ex, f"no write-back of {x}={v}")
    for i, a in enumerate(ex):
        if a.kind == WB and (a.reg not in first or i < first[a.reg]):
            return BlockCheck(False, tuple(ops), ex, f"write-back to {a.reg} before its first write")
    return BlockCheck(True, tuple(ops), ex, "")


def random_block(rng: random.Random, regs=("x", "y", "z"), max_ops: int = 6,
                 max_writes: int = 4) -> tuple:
    ops = []
    writes = 0
    for _ in range(rng.randint(1, max_ops)):
        if writes < max_writes and rng.random() < 0.6:
            ops.append((WRITE, rng.choice(regs), rng.randint(0, 3)))
            writes += 1
        else:
            ops.append((READ, rng.choice(regs), None))
    return tuple(ops)


__all__ = ["PropReport", "check_progressive_bounded", "check_invisible_reads_bounded",
           "BlockCheck", "run_solo_block", "check_writeback_shape", "random_block"]
