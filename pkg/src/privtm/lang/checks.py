"""Program-level verdicts: race freedom under strong atomicity, postconditions,
observational equivalence and refinement."""
from __future__ import annotations

from typing import Iterable, NamedTuple, Optional

from ..actions import WB, Action
from ..atomic import V_INIT
from ..races import tdrf
from .ast import Program, evaluate
from .interp import Bounds, ExploreResult, explore_atomic
from .parser import ProgramError


class PartialExploration(RuntimeError):
    """A bound cut the exploration short, so a universal verdict is unsafe."""


def require_zero_init(p: Program) -> None:
    """History checks assume every register starts at the initial value 0."""
    bad = [r for r, v in p.init if v != V_INIT]
    if bad:
        raise ProgramError(f"history checks need registers initialised to {V_INIT}: {bad}")


# ------------------------------------------------------------------ TDRF

class TdrfProgramReport(NamedTuple):
    ok: bool
    witness: Optional[tuple]        # racy history
    races: tuple
    histories: int
    partial: bool

    def __bool__(self):
        return self.ok


def tdrf_program(p: Program, bounds: Bounds = Bounds()) -> TdrfProgramReport:
    """Every history of the program under strong atomicity is TDRF.  Blocks
    may abort at any access, matching the abort alternatives of the trace
    semantics."""
    require_zero_init(p)
    res = explore_atomic(p, bounds, collapse_aborts=False)
    hists = sorted(res.histories, key=len)
    for h in hists:
        rep = tdrf(h, check=False)
        if not rep.ok:
            return TdrfProgramReport(False, h, tuple(rep.races), len(hists), res.partial)
    if res.partial:
        raise PartialExploration("loop bound reached; TDRF verdict would be unsound")
    return TdrfProgramReport(True, None, (), len(hists), False)


# --------------------------------------------------------- postconditions

class PostReport(NamedTuple):
    verdict: str                    # pass | fail | partial
    failing: Optional[dict]         # final valuation violating the condition
    witness: Optional[tuple]        # execution reaching it
    finals: int

    @property
    def ok(self) -> bool:
        return self.verdict == "pass"

    def __bool__(self):
        return self.ok


def check_postcondition(res: ExploreResult, p: Optional[Program] = None) -> PostReport:
    """Evaluate the postcondition on every final state.  A violation is
    reported even from a partial exploration; a pass is not."""
    p = p or res.program
    if p.post is None:
        return PostReport("partial" if res.partial else "pass", None, None, len(res.finals))
    for state in sorted(res.finals, key=repr):
        env = res.final_env(state)
        if not evaluate(p.post, env):
            return PostReport("fail", env, res.finals[state], len(res.finals))
    return PostReport("partial" if res.partial else "pass", None, None, len(res.finals))


# -------------------------------------------------------------- refinement

def _content(a: Action) -> tuple:
    return (a.thread, a.kind, a.reg, a.value, a.tag)


def observation(tr: Iterable[Action]) -> tuple:
    """Per-thread projections and the non-transactional projection, without
    identifiers and write-backs."""
    tr = [a for a in tr if a.kind != WB]
    per = {}
    for a in tr:
        per.setdefault(a.thread, []).append(_content(a))
    nontx = []
    open_tx = set()
    for a in tr:
        if a.kind == "begintx":
            open_tx.add(a.thread)
        elif a.thread not in open_tx and a.is_interface:
            nontx.append(_content(a))
        if a.kind in ("committed", "aborted"):
            open_tx.discard(a.thread)
    return tuple(sorted((t, tuple(v)) for t, v in per.items())), tuple(nontx)


def obs_equiv(t1: Iterable[Action], t2: Iterable[Action]) -> bool:
    return observation(t1) == observation(t2)


class RefinementReport(NamedTuple):
    ok: bool
    unmatched: Optional[tuple]      # a trace of the first set with no equivalent

    def __bool__(self):
        return self.ok


def refines(a: Iterable, b: Iterable) -> RefinementReport:
    """Every trace of ``a`` has an observationally equivalent trace in ``b``."""
    seen = {observation(t) for t in b}
    for t in sorted(a, key=len):
        if observation(t) not in seen:
            return RefinementReport(False, t)
    return RefinementReport(True, None)


def refines_atomic(res: ExploreResult, bounds: Optional[Bounds] = None) -> RefinementReport:
    """Compare the maximal traces of ``res`` against those of the program
    under strong atomicity (abort alternatives at every access)."""
    b = bounds or Bounds(depth=res.bounds.depth, loop=res.bounds.loop, stutter=False)
    ref = explore_atomic(res.program, b, collapse_aborts=False)
    return refines(res.executions, ref.executions)


__all__ = ["PartialExploration", "require_zero_init", "TdrfProgramReport", "tdrf_program",
           "PostReport", "check_postcondition", "observation", "obs_equiv",
           "RefinementReport", "refines", "refines_atomic"]
