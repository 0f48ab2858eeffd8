import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import H
from privtm.atomic import CapExceeded, is_atomic
from privtm.gen import random_history
from privtm.graph import (CyclicGraph, InconsistentHistory, OpacityGraph, acyclic_graphs,
                          assert_path_reductions, cdrf_graph, check_opaque_direct,
                          check_opaque_graph, check_hb_factoring, cons, derive_rw, enumerate_graphs,
                          is_acyclic, linearizations, parse_graph, serialize_graph, vertices_of)
from privtm.races import cdrf, corresponds, tdrf

COMMIT_W = "1 begintx\n1 ok\n1 write x {v}\n1 retu\n1 trycommit\n1 committed\n"


def test_cons_examples():
    assert cons(H("1 begintx\n1 ok\n1 write x 3\n1 retu\n1 read x\n1 ret 3"))
    assert not cons(H("1 begintx\n1 ok\n1 write x 3\n1 retu\n1 read x\n1 ret 0"))
    assert cons(H("1 read x\n1 ret 0"))
    assert not cons(H("1 read x\n1 ret 5"))
    live = H("1 begintx\n1 ok\n1 write x 4\n1 retu\n2 read x\n2 ret 4")
    rep = cons(live)
    assert not rep.ok and rep.bad_reads == [5]


def test_graph_counts():
    h = H(COMMIT_W.format(v=1) + "2 read x\n2 ret 1")
    gs = list(enumerate_graphs(h))
    assert len(gs) == 1
    assert gs[0].wr_pairs() == {(0, 1)} and gs[0].ww == {"x": (0,)}
    pending = H("1 begintx\n1 ok\n1 write x 1\n1 retu\n1 trycommit")
    assert sorted(len(g.vis) for g in enumerate_graphs(pending)) == [0, 1]
    two = H(COMMIT_W.format(v=1) + "2 write x 2\n2 retu")
    assert sorted(g.ww["x"] for g in enumerate_graphs(two)) == [(0, 1), (1, 0)]
    with pytest.raises(InconsistentHistory):
        list(enumerate_graphs(H("1 read x\n1 ret 5")))


def test_derive_rw():
    h = H("2 read x\n2 ret 0\n" + COMMIT_W.format(v=1))
    verts = vertices_of(h)
    assert derive_rw(verts, frozenset({0, 1}), {}, {"x": (1,)}) == {"x": frozenset({(0, 1)})}
    assert derive_rw(vertices_of(H("1 read x\n1 ret 0")), frozenset({0}), {}, {}) == {}
    chain = H(COMMIT_W.format(v=1) + "3 read x\n3 ret 1\n2 write x 2\n2 retu")
    verts = vertices_of(chain)
    rw = derive_rw(verts, frozenset({0, 1, 2}), {"x": frozenset({(0, 1)})}, {"x": (0, 2)})
    assert rw == {"x": frozenset({(1, 2)})}


def _three_committed():
    return H("".join(f"{t} begintx\n{t} ok\n{t} trycommit\n{t} committed\n" for t in (1, 2, 3)))


def test_acyclicity_and_linearizations():
    one = H("1 read x\n1 ret 0")
    g = next(enumerate_graphs(one))
    assert is_acyclic(g) and len(list(linearizations(g, one))) == 1
    h = H(COMMIT_W.format(v=1) + COMMIT_W.replace("1 ", "2 ").format(v=2))
    bad = next(enumerate_graphs(h))
    cyc = OpacityGraph(bad.vertices, bad.vis, {}, {"x": (0, 1)}, {"x": frozenset({(1, 0)})})
    assert not is_acyclic(cyc)
    with pytest.raises(CyclicGraph):
        list(linearizations(cyc, h))
    three = _three_committed()
    assert len(list(linearizations(next(enumerate_graphs(three)), three))) == 6


FIG3_WEAK = H("""
1 begintx
1 ok
1 write x 1
1 retu
2 read x
2 ret 1
2 read y
2 ret 0
1 write y 2
1 retu
1 trycommit
1 committed
""")


def test_check_opaque_graph_examples():
    assert check_opaque_graph(()) is not None
    assert check_opaque_graph(FIG3_WEAK) is None
    assert check_opaque_direct(FIG3_WEAK) is None
    h = H(COMMIT_W.format(v=1) + "2 read x\n2 ret 1")
    assert check_opaque_direct(h) == h


def test_cdrf_graph_examples():
    assert cdrf_graph(H("1 read x\n1 ret 0")).ok
    racy = H("1 begintx\n1 ok\n1 write x 1\n1 retu\n1 write y 2\n1 retu\n1 trycommit\n"
             "1 committed\n2 read x\n2 ret 1\n2 read y\n2 ret 2")
    rep = cdrf_graph(racy)
    assert not rep.ok and rep.graph is not None
    with pytest.raises(InconsistentHistory):
        cdrf_graph(H("1 read x\n1 ret 3"))


def test_fences_rejected():
    with pytest.raises(ValueError):
        vertices_of(H("1 fbegin\n1 fend"))


def test_fig1_reduction():
    h = H("""
    2 begintx
    2 ok
    2 read priv
    2 ret 0
    2 write x 42
    2 retu
    2 trycommit
    2 committed
    1 begintx
    1 ok
    1 write priv 1
    1 retu
    1 trycommit
    1 committed
    1 write x 1
    1 retu
    """)
    g = check_opaque_graph(h)
    assert g is not None
    assert (0, 2) in g.ww_pairs("x") and (0, 1) in g.rw_pairs() and (1, 2) in g.po
    assert assert_path_reductions(g, h) == []


def test_graph_text_roundtrip():
    h = H(COMMIT_W.format(v=1) + "2 read x\n2 ret 1")
    g = check_opaque_graph(h)
    edges = parse_graph(serialize_graph(g))
    assert ("T1", "WR", "x", "n1") in edges
    with pytest.raises(ValueError):
        parse_graph("T1 XX T2")


def _gen(seed, **kw):
    rng = random.Random(seed)
    return random_history(rng, threads=rng.randint(2, 3), **kw)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_graph_linearizations_are_atomic(seed):
    h = _gen(seed)
    g = check_opaque_graph(h)
    if g is None:
        return
    for k, lin in enumerate(linearizations(g, h)):
        assert is_atomic(lin)
        if k >= 20:
            break


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_cdrf_graph_equivalence_and_soundness(seed):
    h = _gen(seed, max_vertices=7)
    if not cons(h):
        return
    try:
        direct = cdrf(h)
    except CapExceeded:
        return
    assert cdrf_graph(h).ok == direct.ok
    if check_opaque_graph(h) is not None:
        s = check_opaque_direct(h)
        assert s is not None and corresponds(h, s) is not None


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_path_reductions_and_rw_idempotent(seed):
    h = _gen(seed)
    if not cons(h) or not cdrf_graph(h).ok:
        return
    for k, g in enumerate(acyclic_graphs(h)):
        assert assert_path_reductions(g, h) == []
        assert derive_rw(g.vertices, g.vis, g.wr, g.ww) == g.rw
        if k >= 5:
            break


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_hb_factoring(seed):
    h = _gen(seed, p_stale=0.0)
    if is_atomic(h) and tdrf(h).ok:
        assert check_hb_factoring(h) == []


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_atomic_histories_have_graphs(seed):
    h = _gen(seed, p_stale=0.0)
    if is_atomic(h):
        assert check_opaque_graph(h) is not None


def test_real_time_edges_would_break_cdrf_equivalence():
    # T2 runs after T1 in real time, but the atomic history T2;T1;n also
    # matches, and there n races with T1's write
    h = H(COMMIT_W.format(v=1) + "2 begintx\n2 ok\n2 trycommit\n2 committed\n2 read x\n2 ret 1")
    assert not cdrf(h).ok
    assert not cdrf_graph(h).ok
    assert cdrf_graph(h, with_rt=True).ok
