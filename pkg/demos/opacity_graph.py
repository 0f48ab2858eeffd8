"""Opacity graphs and race freedom on two small histories."""
from privtm.graph import cdrf_graph, check_opaque_graph, serialize_graph
from privtm.races import cdrf, tdrf
from privtm.textformat import parse_history

PRIVATIZED = parse_history("""\
1 2 begintx
2 2 ok
3 2 read priv
4 2 ret 0
5 2 write x 42
6 2 retu
7 2 trycommit
8 2 committed
9 1 begintx
10 1 ok
11 1 write priv 1
12 1 retu
13 1 trycommit
14 1 committed
15 1 write x 1
16 1 retu
""")

# a transaction writes x and y, another thread reads both without one
RACY = parse_history("""\
1 1 begintx
2 1 ok
3 1 write x 1
4 1 retu
5 1 write y 2
6 1 retu
7 1 trycommit
8 1 committed
9 2 read x
10 2 ret 1
11 2 read y
12 2 ret 2
""")

for name, h in (("privatized", PRIVATIZED), ("racy", RACY)):
    g = check_opaque_graph(h)
    print(f"== {name}")
    print(serialize_graph(g))
    print("tdrf:", tdrf(h).ok, " cdrf:", cdrf(h).ok, " cdrf (graph):", cdrf_graph(h).ok)
    for r in tdrf(h).races:
        print(f"  race on {r.reg}: access {h[r.nontx].id} vs transactional {h[r.tx].kind} {h[r.tx].id}")
    print()
