"""The late write-back behind the impossibility result.

Plain TL2 is progressive and has invisible reads, yet on the ``thm25``
program it produces a trace that no strongly atomic trace explains: T2 reads
priv = 0, T1 privatizes and reads x non-transactionally, and only then does
T2's write-back of x land.
"""
from privtm import corpus
from privtm.actions import REQUESTS
from privtm.lang import Bounds, explore
from privtm.lang.checks import refines_atomic
from privtm.stm.props import check_invisible_reads_bounded, check_progressive_bounded

res = explore(corpus.load("thm25"), "tl2", Bounds(stutter=False))
rep = refines_atomic(res)
print("refines the atomic semantics:", rep.ok)
for a in rep.unmatched:
    print("   ", a)

depth = sum(a.kind in REQUESTS for a in rep.unmatched)
print(f"\nTL2 properties over every client of up to {depth} requests (takes about a minute):")
print("  progressive:   ", check_progressive_bounded("tl2", depth).holds)
print("  invisible reads:", check_invisible_reads_bounded("tl2", depth).holds)

fenced = refines_atomic(explore(corpus.load("thm25"), "fencedtl2", Bounds(stutter=False)))
print("\nwith fences after commits, refinement holds:", fenced.ok)
