"""Random well-formed histories for property tests and the acceptance suite."""
from __future__ import annotations

import random
from typing import Optional

from .actions import (ABORTED, BEGINTX, COMMITTED, OK, READ, RET, RETU, TRYCOMMIT, WRITE,
                      Action, renumber)


def random_history(rng: random.Random, threads: int = 3, max_units: int = 3,
                   regs: tuple = ("x", "y"), values: tuple = (1, 2),
                   max_tx_ops: int = 3, p_tx: float = 0.6, p_stale: float = 0.15,
                   max_vertices: Optional[int] = 8) -> tuple:
    """Interleave per-thread scripts of transactions and accesses.

    Read values mostly come from the current memory or an own write (so many
    histories are consistent), sometimes from any value ever written.
    """
    scripts = []
    nvert = 0
    for t in range(1, threads + 1):
        units = []
        for _ in range(rng.randint(1, max_units)):
            if max_vertices is not None and nvert >= max_vertices:
                break
            nvert += 1
            if rng.random() < p_tx:
                ops = [(rng.choice((READ, WRITE)), rng.choice(regs), rng.choice(values))
                       for _ in range(rng.randint(0, max_tx_ops))]
                end = rng.choices(("commit", "abort", "pending", "live"), (6, 2, 1, 1))[0]
                units.append(("tx", ops, end))
            else:
                units.append(("na", (rng.choice((READ, WRITE)), rng.choice(regs),
                                     rng.choice(values)), None))
        scripts.append(units)

    # each thread becomes a generator of atomic chunks
    mem: dict = {}
    written: dict = {r: {0} for r in regs}
    out: list[Action] = []

    def read_value(reg, own):
        if reg in own:
            v = own[reg]
        else:
            v = mem.get(reg, 0)
        if rng.random() < p_stale:
            v = rng.choice(sorted(written[reg]))
        return v

    def thread_chunks(t, units):
        for ui, (kind, body, end) in enumerate(units):
            if kind == "na":
                op, reg, val = body
                if op == READ:
                    yield [Action(0, t, READ, reg), Action(0, t, RET, None, read_value(reg, {}))]
                else:
                    mem[reg] = val
                    written[reg].add(val)
                    yield [Action(0, t, WRITE, reg, val), Action(0, t, RETU)]
                continue
            own: dict = {}
            yield [Action(0, t, BEGINTX)]
            if end == "abort" and not body and rng.random() < 0.5:
                yield [Action(0, t, ABORTED)]
                continue
            yield [Action(0, t, OK)]
            for op, reg, val in body:
                if op == READ:
                    yield [Action(0, t, READ, reg)]
                    yield [Action(0, t, RET, None, read_value(reg, own))]
                else:
                    yield [Action(0, t, WRITE, reg, val)]
                    own[reg] = val
                    yield [Action(0, t, RETU)]
            last = ui == len(units) - 1
            if end == "live" and last:
                return
            yield [Action(0, t, TRYCOMMIT)]
            if end == "pending" and last:
                if own and rng.random() < 0.5:
                    mem.update(own)
                    for r, v in own.items():
                        written[r].add(v)
                return
            if end == "commit" or end in ("pending", "live"):
                mem.update(own)
                for r, v in own.items():
                    written[r].add(v)
                yield [Action(0, t, COMMITTED)]
            else:
                yield [Action(0, t, ABORTED)]

    gens = {t: thread_chunks(t, u) for t, u in enumerate(scripts, 1)}
    while gens:
        t = rng.choice(sorted(gens))
        try:
            out.extend(next(gens[t]))
        except StopIteration:
            del gens[t]
    return renumber(out)


def random_histories(seed: int, count: int, **kw) -> list[tuple]:
    rng = random.Random(seed)
    return [random_history(rng, **kw) for _ in range(count)]


# ------------------------------------------------------------ micro programs

def _micro_expr(rng, locs):
    if locs and rng.random() < 0.4:
        return rng.choice(locs)
    return str(rng.randint(0, 2))


def _micro_cond(rng, locs):
    if not locs:
        return rng.choice(("1 == 1", "0 == 1"))
    l = rng.choice(locs)
    rhs = rng.choice(("0", "1", "2", "committed", "aborted"))
    return f"{l} {rng.choice(('==', '!='))} {rhs}"


def _micro_stmt(rng, t, locs, regs, in_tx, depth):
    """One statement as (source, max interface actions)."""
    fresh = f"l{t}{len(locs)}"
    kinds = ["assign", "skip", "read", "write", "if"] + ([] if in_tx else ["atomic", "atomic"])
    k = rng.choice(kinds if depth < 2 else [x for x in kinds if x not in ("if", "atomic")])
    if k == "assign":
        locs.append(fresh)
        return f"{fresh} = {_micro_expr(rng, locs[:-1])};", 0
    if k == "skip":
        return "skip;", 0
    if k == "read":
        locs.append(fresh)
        return f"{fresh} = {rng.choice(regs)}.read();", 2
    if k == "write":
        return f"{rng.choice(regs)}.write({_micro_expr(rng, locs)});", 2
    if k == "if":
        c = _micro_cond(rng, locs)
        a, na = _micro_stmt(rng, t, locs, regs, in_tx, depth + 1)
        b, nb = ("skip;", 0) if rng.random() < 0.5 else _micro_stmt(rng, t, locs, regs, in_tx,
                                                                     depth + 1)
        return f"if ({c}) {{ {a} }} else {{ {b} }}", max(na, nb)
    body, n = "", 0
    if rng.random() < 0.6:
        body, n = _micro_stmt(rng, t, locs, regs, True, depth + 1)
    locs.append(fresh)
    return f"{fresh} = atomic {{ {body} }};", n + 4


def random_micro_program(rng: random.Random, max_actions: int = 6, regs=("x", "y"),
                         threads: int = 2) -> tuple[str, int]:
    """A loop-free program whose traces have at most ``max_actions``
    interface actions; returns (source, that bound)."""
    while True:
        parts, total = [], 0
        for t in range(1, threads + 1):
            locs: list = []
            stmts = []
            for _ in range(rng.randint(1, 2)):
                s, n = _micro_stmt(rng, t, locs, regs, False, 0)
                stmts.append(s)
                total += n
            parts.append(f"thread t{t} {{ {' '.join(stmts)} }}")
        if 0 < total <= max_actions:
            return "\n".join(parts) + "\n", total
