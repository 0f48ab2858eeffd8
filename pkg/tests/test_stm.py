import random

import pytest

from privtm.actions import history_of
from privtm.graph import check_opaque_graph
from privtm.stm import ALGORITHMS, IllegalRequest, machine
from privtm.stm.props import (check_invisible_reads_bounded, check_progressive_bounded,
                              check_writeback_shape, random_block, run_solo_block)
from privtm.stm.witness import witness_graph


def drive(m, t, kind, reg=None, value=None):
    """Submit a request and step the thread until it is answered."""
    m.request(t, kind, reg, value)
    steps = []
    while m.th[t]["req"] is not None:
        assert m.enabled(t), "blocked"
        steps.append(m.step(t))
    return steps


def settle(m, t):
    while m.busy(t) and m.enabled(t):
        m.step(t)


def test_globallock_begin_is_one_step():
    m = machine("globallock", [1])
    assert drive(m, 1, "begintx") == [[("ok", None, None)]]


def test_fencedtl2_solo_writeback():
    ex = run_solo_block("fencedtl2", [("write", "x", 5)])
    kinds = [a.kind for a in ex]
    assert ("wb", "x", 5) in [(a.kind, a.reg, a.value) for a in ex]
    assert kinds.index("wb") > kinds.index("write")
    assert ex[-1].kind == "committed"


def test_2pl_read_takes_lock_then_reads():
    m = machine("2pl", [1])
    drive(m, 1, "begintx")
    steps = drive(m, 1, "read", "x")
    assert steps == [[], [("ret", None, 0)]]
    assert m.g["lock"]["x"] == 1


def test_illegal_requests():
    m = machine("tl2", [1])
    with pytest.raises(IllegalRequest):
        m.request(1, "trycommit")
    m.request(1, "begintx")
    with pytest.raises(IllegalRequest):
        m.request(1, "read", "x")
    with pytest.raises(ValueError):
        machine("norec", [1])


def test_fence_without_concurrency_finishes():
    m = machine("fencedtl2", [1, 2])
    drive(m, 1, "begintx")
    drive(m, 1, "trycommit")
    assert m.busy(1) and m.enabled(1)
    settle(m, 1)
    assert not m.busy(1)


def test_fence_waits_for_live_transaction():
    m = machine("fencedtl2", [1, 2])
    drive(m, 2, "begintx")
    drive(m, 1, "begintx")
    drive(m, 1, "write", "priv", 1)
    drive(m, 1, "trycommit")
    settle(m, 1)
    assert m.busy(1) and not m.enabled(1)       # blocked on T2
    drive(m, 2, "trycommit")
    assert m.enabled(1)
    settle(m, 1)
    assert not m.busy(1)


def test_fences_on_completed_transactions_do_not_deadlock():
    m = machine("fencedtl2", [1, 2])
    drive(m, 1, "begintx")
    drive(m, 2, "begintx")
    drive(m, 1, "trycommit")
    drive(m, 2, "trycommit")
    settle(m, 1)
    settle(m, 2)
    assert not m.busy(1) and not m.busy(2)


def test_plain_tl2_has_no_fence():
    m = machine("tl2", [1, 2])
    drive(m, 2, "begintx")
    drive(m, 1, "begintx")
    drive(m, 1, "trycommit")
    assert not m.busy(1)


def test_2pl_rollback_restores_memory():
    m = machine("2pl", [1, 2])
    drive(m, 2, "begintx")           # older
    drive(m, 1, "begintx")
    drive(m, 1, "write", "x", 7)
    assert m.mem["x"] == 7           # in place
    drive(m, 2, "read", "y")
    m.request(1, "read", "y")        # waits for T2
    m.request(2, "read", "x")        # closes the cycle; the younger T1 aborts
    out = {1: [], 2: []}
    for _ in range(20):
        for t in (1, 2):
            if m.th[t]["req"] is not None and m.enabled(t):
                out[t] += m.step(t)
    assert ("aborted", None, None) in out[1]
    assert out[2] == [("ret", None, 0)]
    assert m.mem["x"] == 0 and not m.in_tx(1)


def test_determinism():
    def run():
        m = machine("tl2", [1, 2])
        out = []
        drive(m, 1, "begintx")
        drive(m, 2, "begintx")
        out += drive(m, 1, "write", "x", 1)
        out += drive(m, 2, "read", "x")
        out += drive(m, 1, "trycommit")
        out += drive(m, 2, "trycommit")
        return out, m.key()
    assert run() == run()


@pytest.mark.parametrize("alg", sorted(ALGORITHMS))
def test_solo_witness_graph(alg):
    ex = run_solo_block(alg, [("write", "x", 1), ("read", "y", None)])
    rep = witness_graph(ex, alg)
    assert rep.ok and len(rep.graph.vertices) == 1
    assert check_opaque_graph(history_of(ex)) is not None


def test_witness_graph_unknown_algorithm():
    with pytest.raises(ValueError):
        witness_graph((), "norec")


@pytest.mark.parametrize("alg", ["fencedtl2", "2pl"])
def test_solo_writeback_shape(alg):
    rng = random.Random(11)
    for _ in range(100):
        ops = random_block(rng)
        assert sum(1 for o in ops if o[0] == "write") <= 4
        assert check_writeback_shape(alg, ops).ok


def test_tm_props_expected_verdicts():
    assert check_progressive_bounded("globallock", 3).holds
    assert check_progressive_bounded("tl2", 3).holds
    assert check_progressive_bounded("fencedtl2", 3).holds
    assert check_invisible_reads_bounded("tl2", 3).holds
    rep = check_invisible_reads_bounded("2pl", 3)
    assert not rep.holds and rep.witness is not None
    rep = check_invisible_reads_bounded("globallock", 3)
    assert not rep.holds and rep.witness is not None
