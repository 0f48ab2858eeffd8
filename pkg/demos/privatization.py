"""Privatization under each TM.

t1 privatizes ``priv`` in a transaction, then writes ``x`` directly.  t2's
transaction writes ``x`` only if it saw ``priv`` still shared.  Under strong
atomicity x ends up 1 whenever t1 committed; plain TL2 can lose that write
to a late write-back, and the fenced variant waits it out.
"""
from privtm import corpus
from privtm.lang import explore, explore_atomic
from privtm.lang.checks import check_postcondition

p = corpus.load("fig1")
print(corpus.source("fig1"))

for tm in ("atomic", "globallock", "2pl", "tl2", "fencedtl2"):
    res = explore_atomic(p) if tm == "atomic" else explore(p, tm)
    rep = check_postcondition(res)
    line = f"{tm:>10}: {rep.verdict:4}  ({len(res.executions)} executions, {rep.finals} final states)"
    print(line)
    if rep.verdict == "fail":
        print("            e.g. l1 committed but x =", rep.failing["x"])
        for a in rep.witness:
            print("              ", a)
