"""Operational interpreter and exhaustive explorer.

A thread is a continuation plus its locals.  ``thread_next`` produces the
thread's next action on its own (a primitive or a request); responses come
from the world the explorer simulates:

* ``tm``     a TM step machine; every micro-step is a scheduling point;
* ``block``  the atomic TM with each atomic block or non-transactional access
             run as one indivisible step;
* ``exact``  the atomic TM one action at a time, every extension filtered by
             membership in the atomic TM (used to cross-check the other modes
             on small programs).

Primitive actions carry tags shaped like the commands they stand for:
``l:=e``, ``l:=v`` after a read, ``assume(b)``/``assume(!(b))`` for branches,
``assume(e==v)`` before a write, ``skip`` and ``l:=committed``/``l:=aborted``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from ..actions import (ABORTED, BEGINTX, COMMITTED, OK, PRIM, READ, RET, RETU, TRYCOMMIT, WB,
                       WRITE, Action, history_of)
from ..atomic import is_atomic
from .ast import (ABORTED_VAL, COMMITTED_VAL, Assign, Atomic, If, Program, Read, Skip, While,
                  Write, consts_in, evaluate, show_value, walk)

DEFAULT_LOOP_BOUND = 3


@dataclass(frozen=True)
class Bounds:
    depth: Optional[int] = None      # interface actions per thread
    loop: int = DEFAULT_LOOP_BOUND
    perm_cap: int = 12
    stutter: bool = True             # prune loop iterations that change nothing


class ThreadState(NamedTuple):
    cont: tuple
    env: tuple                       # sorted (local, value) pairs
    wait: Optional[tuple] = None     # what the pending request expects
    atx: Optional[tuple] = None      # (result local, saved env, rest) inside a block
    loops: tuple = ()                # (loop uid, iterations so far)
    marks: tuple = ()                # (loop uid, local state, global states seen)

    @property
    def done(self) -> bool:
        return not self.cont and self.wait is None


class LoopBound(Exception):
    pass


class Stutter(Exception):
    """The loop head was reached again in a state already seen there."""


def _set(env: tuple, name: str, value: int) -> tuple:
    d = dict(env)
    d[name] = value
    return tuple(sorted(d.items()))


def _bump(loops: tuple, uid: int, delta: Optional[int]) -> tuple:
    d = dict(loops)
    if delta is None:
        d.pop(uid, None)
    else:
        d[uid] = d.get(uid, 0) + delta
    return tuple(sorted(d.items()))


def _iterate(ts: ThreadState, s: While, loop_bound: int, glob) -> ThreadState:
    """Enter one more iteration of ``s``.  With ``glob`` (the state of
    everything outside the thread) an iteration that left the thread's own
    state unchanged is free; seeing the same outside state twice at such a
    head raises :class:`Stutter`."""
    marks = dict((m[0], m[1:]) for m in ts.marks)
    if glob is not None:
        local = (ts.cont, ts.env, ts.atx)
        m = marks.get(s.uid)
        if m is not None and m[0] == local:
            if glob in m[1]:
                raise Stutter(s.uid)
            marks[s.uid] = (local, m[1] | {glob})
            return ts._replace(cont=s.body + ts.cont,
                               marks=tuple((u,) + v for u, v in sorted(marks.items())))
        marks[s.uid] = (local, frozenset({glob}))
    if dict(ts.loops).get(s.uid, 0) >= loop_bound:
        raise LoopBound(s.uid)
    return ts._replace(cont=s.body + ts.cont, loops=_bump(ts.loops, s.uid, 1),
                       marks=tuple((u,) + v for u, v in sorted(marks.items())))


def thread_next(ts: ThreadState, loop_bound: int, glob=None):
    """The thread's next own action: ``("prim", tag, ts')``,
    ``("req", (kind, reg, value), ts')`` or ``("done", None, ts)``.
    Raises :class:`LoopBound` when a loop would exceed its bound."""
    if ts.wait is not None:
        raise RuntimeError("thread is waiting for a response")
    if not ts.cont:
        return "done", None, ts
    s, rest = ts.cont[0], ts.cont[1:]
    env = dict(ts.env)
    if isinstance(s, tuple):
        tag = s[0]
        if tag == "set":
            _, l, v = s
            return "prim", f"{l}:={show_value(v)}", ts._replace(cont=rest, env=_set(ts.env, l, v))
        if tag == "wreq":
            _, reg, v = s
            return "req", (WRITE, reg, v), ts._replace(cont=rest, wait=("write",))
        if tag == "commit":
            return "req", (TRYCOMMIT, None, None), ts._replace(cont=rest, wait=("commit", s[1]))
        raise AssertionError(s)
    if isinstance(s, Assign):
        v = evaluate(s.expr, env)
        return "prim", f"{s.lvar}:={s.expr}", ts._replace(cont=rest, env=_set(ts.env, s.lvar, v))
    if isinstance(s, Skip):
        return "prim", "skip", ts._replace(cont=rest)
    if isinstance(s, If):
        if evaluate(s.cond, env):
            return "prim", f"assume({s.cond})", ts._replace(cont=s.then + rest)
        return "prim", f"assume(!({s.cond}))", ts._replace(cont=s.orelse + rest)
    if isinstance(s, While):
        if evaluate(s.cond, env):
            return "prim", f"assume({s.cond})", _iterate(ts, s, loop_bound, glob)
        return "prim", f"assume(!({s.cond}))", ts._replace(
            cont=rest, loops=_bump(ts.loops, s.uid, None),
            marks=tuple(m for m in ts.marks if m[0] != s.uid))
    if isinstance(s, Write):
        v = evaluate(s.expr, env)
        return "prim", f"assume({s.expr}=={show_value(v)})", ts._replace(
            cont=(("wreq", s.reg, v),) + rest)
    if isinstance(s, Read):
        return "req", (READ, s.reg, None), ts._replace(cont=rest, wait=("read", s.lvar))
    if isinstance(s, Atomic):
        return "req", (BEGINTX, None, None), ts._replace(cont=rest, wait=("begin", s.lvar, s.body))
    raise AssertionError(s)


def thread_respond(ts: ThreadState, kind: str, value=None) -> ThreadState:
    w = ts.wait
    if w is None:
        raise RuntimeError("unexpected response")
    if kind == ABORTED:
        if w[0] == "begin":
            return ts._replace(wait=None, cont=(("set", w[1], ABORTED_VAL),) + ts.cont)
        l, saved, rest = ts.atx
        return ts._replace(wait=None, env=saved, atx=None, cont=(("set", l, ABORTED_VAL),) + rest)
    if w[0] == "begin":
        l, body = w[1], w[2]
        return ts._replace(wait=None, atx=(l, ts.env, ts.cont),
                           cont=body + (("commit", l),) + ts.cont)
    if w[0] == "read":
        return ts._replace(wait=None, cont=(("set", w[1], value),) + ts.cont)
    if w[0] == "write":
        return ts._replace(wait=None)
    if w[0] == "commit":
        l, _, rest = ts.atx
        return ts._replace(wait=None, atx=None, cont=(("set", l, COMMITTED_VAL),) + rest)
    raise AssertionError(w)


def initial_threads(p: Program) -> tuple:
    return tuple(ThreadState(th.body, ()) for th in p.threads)


def outside(tss: tuple, k: int, world) -> tuple:
    """Everything but thread ``k``, hashed, for loop-stutter detection."""
    return hash((tuple(x._replace(marks=()) for j, x in enumerate(tss) if j != k), world))


# ----------------------------------------------------------------- results

@dataclass
class ExploreResult:
    mode: str
    tm: str
    program: Program
    bounds: Bounds
    executions: dict = field(default_factory=dict)   # execution -> final state or None
    finals: dict = field(default_factory=dict)       # final state -> one execution
    prefixes: set = field(default_factory=set)       # exact mode: every trace
    partial: bool = False
    stuck: int = 0
    nodes: int = 0

    @property
    def histories(self) -> set:
        return {history_of(e) for e in self.executions}

    def final_env(self, state) -> dict:
        env, mem = state
        out = dict(self.program.init_mem())
        for r in self.program.registers:
            out.setdefault(r, 0)
        out.update(dict(mem))
        out.update(dict(env))
        return out


def _materialize(chain: tuple, table: list) -> tuple:
    return tuple(Action(i, *table[c]) for i, c in enumerate(chain, 1))


class _Interner:
    def __init__(self):
        self.table: list = []
        self.index: dict = {}

    def __call__(self, content: tuple) -> int:
        k = self.index.get(content)
        if k is None:
            k = len(self.table)
            self.table.append(content)
            self.index[content] = k
        return k


def _final_state(tss, mem: dict) -> tuple:
    env = {}
    for ts in tss:
        env.update(dict(ts.env))
    return tuple(sorted(env.items())), tuple(sorted(mem.items()))


# --------------------------------------------------------------- TM mode

class Alpha(NamedTuple):
    """What the history checks can see of a history: each thread's own
    actions, the order of non-transactional actions, and which transactions
    had completed when each transaction began.  Histories with equal summaries
    have the same graphs, conflicts and observations."""
    proj: tuple                 # per thread: (kind, reg, value) contents
    nontx: tuple                # (thread, kind, reg, value) in history order
    rt: frozenset               # (transaction, transactions completed before it)
    done: frozenset             # completed transactions, as (thread, ordinal)
    open: tuple                 # per thread: transaction in progress or None

    @classmethod
    def start(cls, n: int) -> "Alpha":
        return cls(((),) * n, (), frozenset(), frozenset(), (None,) * n)

    def add(self, k: int, t: int, kind: str, reg, val) -> "Alpha":
        proj = _put(self.proj, k, self.proj[k] + ((kind, reg, val),))
        cur = self.open[k]
        if kind == BEGINTX:
            tx = (t, sum(1 for a in self.proj[k] if a[0] == BEGINTX))
            return self._replace(proj=proj, rt=self.rt | {(tx, self.done)},
                                 open=_put(self.open, k, tx))
        if cur is None:
            return self._replace(proj=proj, nontx=self.nontx + ((t, kind, reg, val),))
        if kind in (COMMITTED, ABORTED):
            return self._replace(proj=proj, done=self.done | {cur}, open=_put(self.open, k, None))
        return self._replace(proj=proj)

    def observation(self) -> tuple:
        return self.proj, self.nontx


def explore(p: Program, tm, bounds: Bounds = Bounds(), record_prims: bool = False,
            reduce: bool = True, seed: Optional[int] = None) -> ExploreResult:
    """Every interleaving of program steps and TM micro-steps.

    With ``reduce`` two schedules reaching the same program and TM state with
    the same :class:`Alpha` summary are merged, keeping the first execution
    as representative; otherwise states are keyed by the whole execution.
    A ``seed`` shuffles the order in which threads are tried; the explored
    set does not depend on it, only which representative is kept.
    """
    from ..stm import ALGORITHMS
    cls = ALGORITHMS[tm] if isinstance(tm, str) else tm
    tids = [th.tid for th in p.threads]
    res = ExploreResult("tm", cls.name, p, bounds)
    intern = _Interner()
    start_tm = cls(tids, p.init_mem())
    stack = [(initial_threads(p), start_tm, (), Alpha.start(len(tids)))]
    seen = set()
    order = list(enumerate(tids))
    rng = random.Random(seed) if seed is not None else None
    while stack:
        tss, st, chain, al = stack.pop()
        skey = st.key()
        key = (tss, skey, al if reduce else chain)
        if key in seen:
            continue
        seen.add(key)
        res.nodes += 1
        moved = False
        if rng is not None:
            rng.shuffle(order)
        for k, t in order:
            ts = tss[k]
            if st.busy(t):
                if not st.enabled(t):
                    continue
                st2 = st.copy()
                out = st2.step(t)
                ch, ts2, al2 = chain, ts, al
                for kind, reg, val in out:
                    ch = ch + (intern((t, kind, reg, val, None)),)
                    if kind != WB:
                        ts2 = thread_respond(ts2, kind, val)
                        al2 = al2.add(k, t, kind, reg, val)
                moved = True
                stack.append((_put(tss, k, ts2), st2, ch, al2))
                continue
            if ts.done:
                continue
            glob = outside(tss, k, skey) if bounds.stutter else None
            ch = chain
            try:
                while True:
                    what, payload, ts = thread_next(ts, bounds.loop, glob)
                    if what == "prim":
                        if record_prims:
                            ch = ch + (intern((t, PRIM, None, None, payload)),)
                        continue
                    break
            except LoopBound:
                res.partial = True
                moved = True
                continue
            except Stutter:
                moved = True         # a pruned repetition is not a dead end
                continue
            moved = True
            if what == "done":
                stack.append((_put(tss, k, ts), st, ch, al))
                continue
            if bounds.depth is not None and len(al.proj[k]) + 1 > bounds.depth:
                res.partial = True
                continue
            kind, reg, val = payload
            st2 = st.copy()
            st2.request(t, kind, reg, val)
            ch = ch + (intern((t, kind, reg, val, None)),)
            al2 = al.add(k, t, kind, reg, val)
            if kind in (READ, WRITE) and not st2.in_tx(t):
                # non-transactional accesses are answered atomically
                for rk, rreg, rval in st2.step(t):
                    ch = ch + (intern((t, rk, rreg, rval, None)),)
                    ts = thread_respond(ts, rk, rval)
                    al2 = al2.add(k, t, rk, rreg, rval)
            stack.append((_put(tss, k, ts), st2, ch, al2))
        if not moved:
            ex = _materialize(chain, intern.table)
            if all(ts.done for ts in tss) and not any(st.busy(t) for t in tids):
                fs = _final_state(tss, st.mem)
                res.executions[ex] = fs
                res.finals.setdefault(fs, ex)
            else:
                res.stuck += 1
                res.executions.setdefault(ex, None)
    return res


def _put(tss: tuple, k: int, ts) -> tuple:
    return tss[:k] + (ts,) + tss[k + 1:]


def _inc(counts: tuple, k: int, n: int) -> tuple:
    if not n:
        return counts
    return counts[:k] + (counts[k] + n,) + counts[k + 1:]


# ------------------------------------------------------------ block mode

def _run_block(ts: ThreadState, t: int, mem: dict, loop_bound: int, collapse_aborts: bool):
    """All outcomes of running one atomic block to its end.  Yields
    (thread state, interface actions, memory)."""
    begin = [(t, BEGINTX, None, None, None)]
    out = []
    # abort right at begintx
    out.append((thread_respond(ts, ABORTED), begin + [(t, ABORTED, None, None, None)], mem))
    work = [(thread_respond(ts, OK), begin + [(t, OK, None, None, None)], {})]
    while work:
        cur, acts, wset = work.pop()
        what, payload, cur = thread_next(cur, loop_bound)
        while what == "prim":
            what, payload, cur = thread_next(cur, loop_bound)
        kind, reg, val = payload
        req = acts + [(t, kind, reg, val, None)]
        if not collapse_aborts:
            out.append((thread_respond(cur, ABORTED), req + [(t, ABORTED, None, None, None)], mem))
        if kind == READ:
            v = wset[reg] if reg in wset else mem.get(reg, 0)
            work.append((thread_respond(cur, RET, v), req + [(t, RET, None, v, None)], wset))
        elif kind == WRITE:
            w2 = dict(wset)
            w2[reg] = val
            work.append((thread_respond(cur, RETU), req + [(t, RETU, None, None, None)], w2))
        elif kind == TRYCOMMIT:
            m2 = dict(mem)
            m2.update(wset)
            out.append((thread_respond(cur, COMMITTED), req + [(t, COMMITTED, None, None, None)], m2))
        else:
            raise AssertionError(kind)
    return out


def explore_atomic(p: Program, bounds: Bounds = Bounds(), collapse_aborts: bool = True,
                   keep_chain: bool = True) -> ExploreResult:
    """Strongly atomic semantics: atomic blocks and non-transactional
    accesses are indivisible steps.  With ``collapse_aborts`` a block aborts
    only at its begintx; otherwise every access and the commit may abort."""
    tids = [th.tid for th in p.threads]
    res = ExploreResult("block", "atomic", p, bounds)
    intern = _Interner()
    seen = set()
    stack = [(initial_threads(p), tuple(sorted(p.init_mem().items())), (), (0,) * len(tids))]
    while stack:
        tss, memt, chain, counts = stack.pop()
        key = (tss, memt, chain if keep_chain else None)
        if key in seen:
            continue
        seen.add(key)
        res.nodes += 1
        moved = False
        mem = dict(memt)
        for k, t in enumerate(tids):
            ts = tss[k]
            if ts.done:
                continue
            glob = outside(tss, k, memt) if bounds.stutter else None
            try:
                what, payload, ts = thread_next(ts, bounds.loop, glob)
                while what == "prim":
                    what, payload, ts = thread_next(ts, bounds.loop, glob)
                moved = True
                if what == "done":
                    stack.append((_put(tss, k, ts), memt, chain, counts))
                    continue
                kind, reg, val = payload
                if kind == BEGINTX:
                    outcomes = _run_block(ts, t, mem, bounds.loop, collapse_aborts)
                elif kind == READ:
                    v = mem.get(reg, 0)
                    outcomes = [(thread_respond(ts, RET, v),
                                 [(t, READ, reg, None, None), (t, RET, None, v, None)], mem)]
                else:
                    m2 = dict(mem)
                    m2[reg] = val
                    outcomes = [(thread_respond(ts, RETU),
                                 [(t, WRITE, reg, val, None), (t, RETU, None, None, None)], m2)]
            except LoopBound:
                res.partial = True
                moved = True
                continue
            except Stutter:
                moved = True
                continue
            for ts2, acts, m2 in outcomes:
                if bounds.depth is not None and counts[k] + len(acts) > bounds.depth:
                    res.partial = True
                    continue
                ch = chain + tuple(intern(a) for a in acts) if keep_chain else ()
                stack.append((_put(tss, k, ts2), tuple(sorted(m2.items())), ch,
                              _inc(counts, k, len(acts))))
        if not moved:
            ex = _materialize(chain, intern.table)
            fs = _final_state(tss, mem)
            res.executions[ex] = fs
            res.finals.setdefault(fs, ex)
    return res


# ------------------------------------------------------------ exact mode

def value_domain(p: Program) -> list:
    vals = {0} | {v for _, v in p.init}
    for th in p.threads:
        for s in walk(th.body):
            for e in (getattr(s, "expr", None), getattr(s, "cond", None)):
                if e is not None:
                    vals |= consts_in(e)
    return sorted(v for v in vals if v not in (COMMITTED_VAL, ABORTED_VAL))


def explore_exact(p: Program, bounds: Bounds = Bounds(stutter=False)) -> ExploreResult:
    """Every trace (all prefixes) of the program under the atomic TM, one
    action per step, each history prefix checked for atomic membership."""
    tids = [th.tid for th in p.threads]
    res = ExploreResult("exact", "atomic", p, bounds)
    start = (initial_threads(p), ())
    stack = [start]
    while stack:
        tss, trace = stack.pop()
        res.nodes += 1
        res.prefixes.add(trace)
        hist = history_of(trace)
        nxt_id = len(trace) + 1
        moved = False
        for k, t in enumerate(tids):
            ts = tss[k]
            if ts.wait is not None:
                kind = ts.wait[0]
                if kind == "begin":
                    cands = [(OK, None), (ABORTED, None)]
                elif kind == "read":
                    vals = {0} | {a.value for a in hist if a.kind == WRITE}
                    cands = [(RET, v) for v in sorted(vals)] + [(ABORTED, None)]
                elif kind == "write":
                    cands = [(RETU, None), (ABORTED, None)]
                else:
                    cands = [(COMMITTED, None), (ABORTED, None)]
                for rk, v in cands:
                    a = Action(nxt_id, t, rk, None, v)
                    if is_atomic(hist + (a,)):
                        moved = True
                        stack.append((_put(tss, k, thread_respond(ts, rk, v)), trace + (a,)))
                continue
            if ts.done:
                continue
            try:
                what, payload, ts2 = thread_next(ts, bounds.loop)
            except LoopBound:
                res.partial = True
                continue
            if what == "done":
                continue
            if what == "prim":
                moved = True
                stack.append((_put(tss, k, ts2), trace + (Action(nxt_id, t, PRIM, tag=payload),)))
                continue
            kind, reg, val = payload
            req = Action(nxt_id, t, kind, reg, val)
            if ts2.atx is None and kind in (READ, WRITE):
                # non-transactional access: request and response are adjacent
                if kind == READ:
                    vals = {0} | {a.value for a in hist if a.kind == WRITE}
                    cands = [(RET, v) for v in sorted(vals)]
                else:
                    cands = [(RETU, None)]
                for rk, v in cands:
                    resp = Action(nxt_id + 1, t, rk, None, v)
                    if is_atomic(hist + (req, resp)):
                        moved = True
                        stack.append((_put(tss, k, thread_respond(ts2, rk, v)),
                                      trace + (req, resp)))
                continue
            if is_atomic(hist + (req,)):
                moved = True
                stack.append((_put(tss, k, ts2), trace + (req,)))
        if not moved and all(ts.done for ts in tss):
            res.executions[trace] = None
    return res


__all__ = ["Bounds", "ThreadState", "ExploreResult", "explore", "explore_atomic",
           "explore_exact", "thread_next", "thread_respond", "initial_threads", "value_domain",
           "LoopBound", "Stutter", "Alpha", "DEFAULT_LOOP_BOUND"]
