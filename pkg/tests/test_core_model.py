import pytest
from hypothesis import given, settings, strategies as st

from privtm.actions import (Action, IllFormedTrace, history_of, project, transactions_of,
                            validate_wellformed, wellformedness_violations, NONTX)
from privtm.gen import random_history
from privtm.textformat import ParseError, parse_execution, parse_history, serialize_history
from conftest import H
import random


def test_empty_sequence_is_a_trace():
    assert validate_wellformed([]) == ()


def test_single_nontx_read_is_valid():
    tr = [Action(1, 1, "read", "x"), Action(2, 1, "ret", value=0)]
    assert validate_wellformed(tr) == tuple(tr)


def test_interleaved_nontx_access_breaks_condition_6():
    tr = [Action(1, 1, "read", "x"), Action(2, 2, "write", "y", 1),
          Action(3, 1, "ret", value=0), Action(4, 2, "retu")]
    bad = wellformedness_violations(tr)
    assert any(v.condition == 6 and v.index == 0 for v in bad)
    with pytest.raises(IllFormedTrace):
        validate_wellformed(tr)


def test_all_violations_reported():
    tr = [Action(1, 1, "begintx"), Action(1, 1, "ok"), Action(3, 1, "begintx"),
          Action(4, 2, "ok")]
    conds = {v.condition for v in wellformedness_violations(tr)}
    assert {1, 4, 5} <= conds


def test_prim_after_request_breaks_condition_3():
    tr = [Action(1, 1, "begintx"), Action(2, 1, "prim", tag="l:=1")]
    assert [v.condition for v in wellformedness_violations(tr)] == [3]


def test_aborted_nontx_breaks_condition_7():
    tr = [Action(1, 1, "read", "x"), Action(2, 1, "aborted")]
    assert 7 in {v.condition for v in wellformedness_violations(tr)}


def test_begintx_may_be_answered_by_aborted():
    assert wellformedness_violations(H("1 begintx\n1 aborted")) == []


def test_history_of_drops_internal_actions():
    tr = (Action(1, 1, "begintx"), Action(2, 1, "ok"), Action(3, 1, "write", "x", 42),
          Action(4, 1, "retu"), Action(5, 1, "prim", tag="assume(1)"),
          Action(6, 1, "trycommit"), Action(7, 2, "wb", "x", 42), Action(8, 1, "committed"))
    h = history_of(tr)
    assert [a.id for a in h] == [1, 2, 3, 4, 6, 8]
    assert history_of(h) == h


def test_transaction_statuses():
    assert [t.status for t in transactions_of(H("1 begintx\n1 ok\n1 trycommit\n1 committed"))] \
        == ["committed"]
    assert [t.status for t in transactions_of(H("1 begintx\n1 ok\n1 trycommit"))] \
        == ["commit-pending"]
    assert [t.status for t in transactions_of(H("1 begintx\n1 aborted"))] == ["aborted"]
    assert [t.status for t in transactions_of(H("1 begintx\n1 ok"))] == ["live"]


FIG1 = """
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
"""


def test_projections():
    h = H(FIG1)
    assert project(h, 7) == ()
    assert [a.kind for a in project(h, NONTX)] == ["write", "retu"]
    assert project(h, 1) == tuple(a for a in h if a.thread == 1)
    solo = H("1 begintx\n1 ok")
    assert project(solo, 1) == solo


def test_parse_examples():
    assert len(parse_history("1 1 begintx\n2 1 ok")) == 2
    h = parse_history("1 1 write x 5\n2 1 ret")
    assert h[0].kind == "write" and h[0].value == 5 and h[1].kind == "retu"
    with pytest.raises(ParseError) as e:
        parse_history("1 1 read")
    assert e.value.line == 1


@pytest.mark.parametrize("text", ["1 1 frobnicate", "1 1 write x five", "x 1 begintx",
                                  "1 1 wb x 3"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_history(text)


def test_execution_files_allow_writebacks():
    ex = parse_execution("# exec\n1 1 begintx\n2 1 ok\n\n3 1 wb x 1\n")
    assert ex[2].kind == "wb" and ex[2].value == 1


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_roundtrip(seed):
    h = random_history(random.Random(seed))
    assert not wellformedness_violations(h)
    assert parse_history(serialize_history(h)) == h


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_projection_partition(seed):
    h = random_history(random.Random(seed))
    threads = {a.thread for a in h}
    assert sum(len(project(h, t)) for t in threads) == len(h)
    spans = set()
    for tx in transactions_of(h):
        assert not spans & set(tx.indices)
        spans |= set(tx.indices)
    nontx_ids = {a.id for a in project(h, NONTX)}
    assert not nontx_ids & {h[i].id for i in spans}
