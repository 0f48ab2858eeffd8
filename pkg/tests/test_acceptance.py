"""The twelve acceptance criteria.  Each test prints one PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for just the summary.
"""
import functools
import itertools
import random
import sys
import time

import pytest

sys.path.insert(0, __file__.rsplit("/", 1)[0])

from oracles import literal_traces  # noqa: E402
from privtm import corpus  # noqa: E402
from privtm.actions import REQUESTS, history_of, renumber  # noqa: E402
from privtm.atomic import count_units, is_atomic  # noqa: E402
from privtm.gen import random_history, random_micro_program  # noqa: E402
from privtm.graph import (InconsistentHistory, acyclic_graphs, assert_path_reductions,  # noqa: E402
                          cdrf_graph, check_opaque_direct, check_opaque_graph, check_hb_factoring,
                          cons, linearizations)
from privtm.lang import Bounds, explore, explore_atomic, explore_exact, parse_program  # noqa: E402
from privtm.lang.checks import check_postcondition, refines_atomic, tdrf_program  # noqa: E402
from privtm.races import cdrf  # noqa: E402
from privtm.stm.props import (check_invisible_reads_bounded, check_progressive_bounded,  # noqa: E402
                              check_writeback_shape, random_block)
from privtm.stm.witness import witness_graph  # noqa: E402

TMS = ("atomic", "globallock", "2pl", "tl2", "fencedtl2")
N_HIST = 1000
N_BLOCKS = 200
N_PROGRAMS = 100
SAMPLE_LINS = 20


_capsys = None


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    global _capsys
    _capsys = capsys
    yield
    _capsys = None


def report(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    with _capsys.disabled():
        print("\n" + line)
    assert ok, line


def _explore(p, tm, bounds=Bounds()):
    return explore_atomic(p, bounds) if tm == "atomic" else explore(p, tm, bounds)


@functools.lru_cache(maxsize=None)
def consistent_histories():
    """Consistent generated histories within the permutation cap."""
    rng = random.Random(20240)
    out = []
    while len(out) < N_HIST:
        h = random_history(rng, threads=rng.randint(2, 3))
        if count_units(h) <= 12 and cons(h):
            out.append(h)
    return tuple(out)


def test_c01_corpus_tdrf():
    expect = {"fig1": True, "fig2": True, "fig5": True, "fig6": True, "fig3": False}
    bad, times = [], {}
    for name, want in expect.items():
        t0 = time.perf_counter()
        got = tdrf_program(corpus.load(name), Bounds(loop=3)).ok
        times[name] = time.perf_counter() - t0
        if got != want or times[name] >= 10:
            bad.append(name)
    slowest = max(times.values())
    report(1, not bad, f"verdicts fig1,2,5,6=true fig3=false; slowest {slowest:.2f}s"
           + (f"; wrong: {bad}" if bad else ""))


def test_c02_atomic_postconditions():
    bad = []
    for name in ("fig1", "fig2", "fig3", "fig5", "fig6"):
        res = explore_atomic(corpus.load(name))
        rep = check_postcondition(res)
        if rep.verdict == "fail":
            bad.append((name, rep.failing))
    report(2, not bad, "every final state satisfies its postcondition"
           + (f"; violations: {bad}" if bad else ""))


def test_c03_privatization_safe_opacity():
    checked, bad = 0, []
    for name in ("fig1", "fig2", "fig5", "fig6"):
        p = corpus.load(name)
        for tm in ("fencedtl2", "2pl"):
            res = explore(p, tm, Bounds(depth=10))
            for ex in res.executions:
                checked += 1
                if check_opaque_graph(history_of(ex)) is None:
                    bad.append((name, tm, "no acyclic graph"))
                elif not witness_graph(ex, tm).ok:
                    bad.append((name, tm, "invariant broken"))
    report(3, not bad, f"{checked} executions, {len(bad)} failures" + (f": {bad[:3]}" if bad else ""))


def test_c04_weak_tm_violation():
    p = corpus.load("fig3")
    tl2 = check_postcondition(explore(p, "tl2", reduce=False))
    seen = tl2.verdict == "fail" and tl2.failing["l1"] == 1 and tl2.failing["l2"] == 0
    gl = check_postcondition(explore(p, "globallock", reduce=False)).verdict
    at = check_postcondition(explore_atomic(p)).verdict
    report(4, seen and gl == "pass" and at == "pass",
           f"tl2 reaches l1=1,l2=0: {seen}; globallock {gl}; atomic {at}")


def _scenario(tr):
    """T2 reads priv=0 inside its transaction, and its write-back of x lands
    after T1 commits and reads x non-transactionally."""
    pos = {}
    for i, a in enumerate(tr):
        if a.thread == 2 and a.kind == "ret" and a.value == 0 and "priv_read" not in pos:
            pos["priv_read"] = i
        if a.thread == 1 and a.kind == "committed":
            pos["t1_commit"] = i
        if a.thread == 1 and a.kind == "read" and a.reg == "x":
            pos["n"] = i
        if a.thread == 2 and a.kind == "wb" and a.reg == "x":
            pos["wb"] = i
    return len(pos) == 4 and pos["priv_read"] < pos["t1_commit"] < pos["n"] < pos["wb"]


def test_c05_late_writeback_counterexample():
    res = explore(corpus.load("thm25"), "tl2", Bounds(stutter=False))
    ref = refines_atomic(res)
    scen = ref.unmatched is not None and _scenario(ref.unmatched)
    depth = sum(1 for a in (ref.unmatched or ()) if a.kind in REQUESTS)
    prog = check_progressive_bounded("tl2", depth).holds
    inv = check_invisible_reads_bounded("tl2", depth).holds
    report(5, (not ref.ok) and scen and prog and inv,
           f"refines={ref.ok}; scenario={scen}; tl2 at depth {depth}: "
           f"progressive={prog} invisible-reads={inv}")


def test_c06_graph_linearizations_atomic():
    n, lins, bad = 0, 0, 0
    rng = random.Random(61)
    while n < N_HIST:
        h = random_history(rng, threads=rng.randint(2, 3), max_vertices=8)
        if not cons(h):
            continue
        g = check_opaque_graph(h)
        if g is None:
            continue
        n += 1
        for lin in itertools.islice(linearizations(g, h), SAMPLE_LINS):
            lins += 1
            bad += not is_atomic(lin)
    report(6, bad == 0, f"{n} histories, {lins} linearizations, {bad} not atomic")


def test_c07_cdrf_graph_equivalence():
    hs = consistent_histories()
    mism = sum(cdrf(h).ok != cdrf_graph(h).ok for h in hs)
    report(7, mism == 0, f"{len(hs)} histories, {mism} disagreements")


def test_c08_soundness():
    hs = consistent_histories()
    with_graph = bad = 0
    for h in hs:
        if check_opaque_graph(h) is not None:
            with_graph += 1
            bad += check_opaque_direct(h) is None
    report(8, bad == 0, f"{with_graph} histories with a graph, {bad} lacking an atomic match")


def test_c09_path_reductions():
    graphs = red = p18 = 0
    rng = random.Random(91)
    while graphs < N_HIST:
        h = random_history(rng, threads=rng.randint(2, 3))
        if count_units(h) > 12 or not cons(h) or not cdrf_graph(h).ok:
            continue
        for g in itertools.islice(acyclic_graphs(h), 4):
            graphs += 1
            red += len(assert_path_reductions(g, h))
            for lin in itertools.islice(linearizations(g, h), 3):
                p18 += len(check_hb_factoring(lin))
    report(9, red == 0 and p18 == 0,
           f"{graphs} graphs, {red} reduction violations, {p18} hb-factoring violations")


def test_c10_writebacks():
    rng = random.Random(10)
    blocks = [random_block(rng) for _ in range(N_BLOCKS)]
    bad = [(alg, ops) for alg in ("fencedtl2", "2pl") for ops in blocks
           if not check_writeback_shape(alg, ops).ok]
    report(10, not bad, f"{N_BLOCKS} blocks x 2 TMs, {len(bad)} failures")


def test_c11_micro_oracle():
    rng = random.Random(7)
    bad = 0
    for _ in range(N_PROGRAMS):
        src, _n = random_micro_program(rng, max_actions=6)
        p = parse_program(src)
        bad += literal_traces(p) != {renumber(t) for t in explore_exact(p).prefixes}
    report(11, bad == 0, f"{N_PROGRAMS} programs, {bad} trace-set mismatches")


def test_c12_tdrf_programs_give_cdrf_histories():
    checked, bad = 0, []
    for name in corpus.TDRF:
        p = corpus.load(name)
        if not tdrf_program(p).ok:
            continue
        for tm in TMS:
            for h in _explore(p, tm).histories:
                checked += 1
                try:
                    ok = cdrf_graph(h).ok
                except InconsistentHistory:
                    ok = False
                if not ok:
                    bad.append((name, tm))
    report(12, not bad, f"{checked} histories, {len(bad)} not CDRF" + (f": {bad[:3]}" if bad else ""))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
