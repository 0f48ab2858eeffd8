"""Command-line front end.

    privtm check-history FILE --checks wf,cdrf,opacity-graph
    privtm run fig1 --tm fencedtl2 --check post,witness-graph
    privtm tm-props --tm tl2 --depth 4
    privtm corpus list | corpus show fig3

Exit codes: 0 every verdict passed, 1 some verdict failed, 2 the input did
not parse (or a check does not apply to it), 3 the permutation cap was
exceeded, 4 a bound cut an exploration short without a failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from . import corpus
from .actions import history_of, wellformedness_violations
from .atomic import DEFAULT_PERM_CAP, CapExceeded, is_atomic
from .graph import check_opaque_direct, check_opaque_graph, cdrf_graph, cons, serialize_graph
from .lang.ast import show_value
from .lang.checks import (PartialExploration, check_postcondition, refines_atomic,
                          tdrf_program)
from .lang.interp import DEFAULT_LOOP_BOUND, Bounds, explore, explore_atomic
from .lang.parser import ProgramError, parse_program
from .races import cdrf, drf_fenced, tdrf
from .textformat import ParseError, parse_history, serialize_history

EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_CAP, EXIT_PARTIAL = 0, 1, 2, 3, 4

HISTORY_CHECKS = ("wf", "atomic", "cons", "tdrf", "cdrf", "cdrf-graph", "opacity",
                  "opacity-graph", "fenced-drf")
RUN_CHECKS = ("post", "tdrf", "refinement", "witness-graph")
TMS = ("fencedtl2", "tl2", "2pl", "globallock", "atomic")


@dataclass
class CheckReport:
    command: str
    check: str
    verdict: str                      # pass | fail | partial | error
    detail: str = ""
    witnesses: list = field(default_factory=list)
    seconds: float = 0.0
    bounds: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"command": self.command, "check": self.check, "verdict": self.verdict,
             "detail": self.detail, "witnesses": self.witnesses,
             "seconds": round(self.seconds, 3), "bounds": self.bounds}
        d.update(self.extra)
        return d


# ------------------------------------------------------------------ args

def parse_bounds(text: Optional[str]) -> dict:
    out = {"depth": None, "loop": DEFAULT_LOOP_BOUND, "perm-cap": DEFAULT_PERM_CAP}
    if not text:
        return out
    for part in text.split(","):
        if not part.strip():
            continue
        k, sep, v = part.partition("=")
        k = k.strip()
        if not sep or k not in out:
            raise argparse.ArgumentTypeError(f"bad bound {part!r}; use depth=, loop=, perm-cap=")
        try:
            out[k] = int(v)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bound {k} needs an integer, got {v!r}") from None
    return out


def _csv(choices):
    def conv(text):
        items = [s.strip() for s in text.split(",") if s.strip()]
        bad = [s for s in items if s not in choices]
        if bad or not items:
            raise argparse.ArgumentTypeError(
                f"unknown check(s) {bad}; choose from {', '.join(choices)}")
        return items
    return conv


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--bounds", type=parse_bounds, default=argparse.SUPPRESS,
                        help="depth=<n>,loop=<n>,perm-cap=<n>")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="shuffle the exploration order (verdicts do not depend on it)")
    common.add_argument("--format", choices=("text", "json-lines"), default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="privtm", description=__doc__.split("\n")[0],
                                parents=[common])
    sub = p.add_subparsers(dest="verb", required=True)

    ch = sub.add_parser("check-history", parents=[common], help="check a history file")
    ch.add_argument("file")
    ch.add_argument("--checks", type=_csv(HISTORY_CHECKS), default=["wf"],
                    help=",".join(HISTORY_CHECKS))

    run = sub.add_parser("run", parents=[common], help="explore a program")
    run.add_argument("program", help="program file or corpus name")
    run.add_argument("--tm", choices=TMS, default="atomic")
    run.add_argument("--check", type=_csv(RUN_CHECKS), default=["post"],
                     help=",".join(RUN_CHECKS))
    run.add_argument("--witness-dir", default=None,
                     help="where witness files go for corpus programs (default: cwd)")

    tp = sub.add_parser("tm-props", parents=[common], help="bounded TM property checks")
    tp.add_argument("--tm", choices=TMS[:-1], required=True)
    tp.add_argument("--depth", type=int, default=4)
    tp.add_argument("--witness-dir", default=None, help="where witness files go (default: cwd)")

    cp = sub.add_parser("corpus", parents=[common], help="built-in programs")
    cp.add_argument("action", choices=("list", "show"))
    cp.add_argument("name", nargs="?")
    return p


# ------------------------------------------------------------ reporting

def _emit(reports, fmt, out):
    for r in reports:
        if fmt == "json-lines":
            out.write(json.dumps(r.as_dict(), sort_keys=True) + "\n")
            continue
        out.write(f"check: {r.check}\nverdict: {r.verdict}\n")
        if r.detail:
            for line in r.detail.rstrip("\n").split("\n"):
                out.write(f"  {line}\n")
        for k, v in sorted(r.extra.items()):
            out.write(f"{k}: {v}\n")
        for w in r.witnesses:
            out.write(f"witness: {w}\n")
        out.write(f"time: {r.seconds:.3f}s\n\n")


def _exit_code(reports) -> int:
    verdicts = [r.verdict for r in reports]
    if "error" in verdicts:
        return EXIT_PARSE
    if "cap" in verdicts:
        return EXIT_CAP
    if "fail" in verdicts:
        return EXIT_FAIL
    if "partial" in verdicts:
        return EXIT_PARTIAL
    return EXIT_PASS


def _write(path: str, text: str) -> str:
    with open(path, "w") as f:
        f.write(text)
    return path


def _hist_text(h, header: str) -> str:
    lines = "".join(f"# {ln}\n" for ln in header.split("\n") if ln)
    return lines + serialize_history(h)


# -------------------------------------------------------- check-history

def _history_check(name: str, h: tuple, cap: int):
    """(verdict, detail, history witness or None, graph witness or None)."""
    if name == "wf":
        bad = wellformedness_violations(h)
        return ("pass", "", None, None) if not bad else \
            ("fail", "\n".join(str(v) for v in bad), h, None)
    if name == "atomic":
        return ("pass", "", None, None) if is_atomic(h) else \
            ("fail", "no completion is a non-interleaved history with legal reads", h, None)
    if name == "cons":
        rep = cons(h)
        if rep.ok:
            return "pass", "", None, None
        ids = ", ".join(str(h[i].id) for i in rep.bad_reads)
        return "fail", f"reads with no admissible writer: responses {ids}", h, None
    if name == "tdrf":
        if not is_atomic(h):
            return "fail", "TDRF is defined for histories of the atomic TM only", h, None
        rep = tdrf(h, check=False)
        return ("pass", "", None, None) if rep.ok else \
            ("fail", _races(h, rep.races), h, None)
    if name in ("cdrf", "fenced-drf"):
        rep = (cdrf if name == "cdrf" else drf_fenced)(h, cap)
        if rep.ok:
            return "pass", "", None, None
        if rep.witness is None:
            return "fail", "no matching history of the atomic TM", h, None
        return "fail", "racy matching history:\n" + _races(rep.witness, rep.races), \
            rep.witness, None
    if name == "opacity":
        m = check_opaque_direct(h, cap)
        return ("pass", "matching atomic history found", m, None) if m is not None else \
            ("fail", "no matching history of the atomic TM", h, None)
    if name == "opacity-graph":
        g = check_opaque_graph(h)
        return ("pass", "acyclic opacity graph found", None, g) if g is not None else \
            ("fail", "no acyclic opacity graph", h, None)
    if name == "cdrf-graph":
        if not cons(h):
            return "fail", "history is not consistent; the graph criterion needs it", h, None
        rep = cdrf_graph(h)
        if rep.ok:
            return "pass", "", None, None
        a, b = rep.pair
        return "fail", f"no path between conflicting {a} and {b}", None, rep.graph
    raise AssertionError(name)


def _races(h, races) -> str:
    return "\n".join(f"race on {c.reg}: action {h[c.nontx].id} vs transaction at action "
                     f"{h[c.tx].id}" for c in races)


def cmd_check_history(path: str, checks, bounds: dict, fmt: str, out) -> int:
    cmd = f"check-history {path} --checks {','.join(checks)}"
    try:
        with open(path) as f:
            h = parse_history(f.read())
    except (ParseError, OSError) as e:
        _emit([CheckReport(cmd, "parse", "error", str(e))], fmt, out)
        return EXIT_PARSE
    order = [c for c in HISTORY_CHECKS if c in checks]
    if "wf" not in order:
        order.insert(0, "wf")
    reports = []
    base = os.path.splitext(path)[0]
    for name in order:
        t0 = time.perf_counter()
        try:
            verdict, detail, hw, gw = _history_check(name, h, bounds["perm-cap"])
        except CapExceeded as e:
            verdict, detail, hw, gw = "cap", f"{e}; try the -graph variant", None, None
        except ValueError as e:                  # e.g. fences under graph checks
            verdict, detail, hw, gw = "error", str(e), None, None
        r = CheckReport(cmd, name, verdict, detail, seconds=time.perf_counter() - t0,
                        bounds=bounds)
        # one witness pair per check, so a witness re-checks to the same verdict
        if hw is not None:
            r.witnesses.append(_write(f"{base}.{name}.witness.hist",
                                      _hist_text(hw, f"witness of {name}: {verdict}")))
        if gw is not None:
            if hw is None and verdict == "fail":
                r.witnesses.append(_write(f"{base}.{name}.witness.hist",
                                          _hist_text(h, f"witness of {name}: {verdict}")))
            r.witnesses.append(_write(f"{base}.{name}.witness.graph", serialize_graph(gw)))
        reports.append(r)
        if name == "wf" and verdict != "pass":
            break
    if "wf" not in checks:
        reports = [r for r in reports if r.check != "wf" or r.verdict != "pass"]
    _emit(reports, fmt, out)
    return _exit_code(reports)


# ------------------------------------------------------------------ run

def _load_program(ref: str):
    if ref in corpus.SOURCES and not os.path.exists(ref):
        return corpus.load(ref), ref, None
    with open(ref) as f:
        return parse_program(f.read()), os.path.splitext(os.path.basename(ref))[0], \
            os.path.dirname(os.path.abspath(ref))


def _explore(p, tm, b: Bounds, seed):
    if tm == "atomic":
        return explore_atomic(p, b)
    return explore(p, tm, b, seed=seed)


def _final_text(env: dict) -> str:
    return " ".join(f"{k}={show_value(v)}" for k, v in sorted(env.items()))


def cmd_run(ref: str, tm: str, checks, bounds: dict, seed, fmt: str, out,
            witness_dir: Optional[str] = None) -> int:
    cmd = f"run {ref} --tm {tm} --check {','.join(checks)}"
    try:
        p, stem, folder = _load_program(ref)
    except (ProgramError, OSError) as e:
        _emit([CheckReport(cmd, "parse", "error", str(e))], fmt, out)
        return EXIT_PARSE
    folder = witness_dir or folder or os.getcwd()
    base = os.path.join(folder, stem)
    b = Bounds(depth=bounds["depth"], loop=bounds["loop"], perm_cap=bounds["perm-cap"])
    reports = []
    for name in checks:
        t0 = time.perf_counter()
        r = CheckReport(cmd, name, "pass", bounds=bounds)
        try:
            if name == "post":
                res = _explore(p, tm, b, seed)
                rep = check_postcondition(res, p)
                r.verdict = rep.verdict
                r.extra = {"finals": rep.finals, "executions": len(res.executions)}
                if rep.verdict == "fail":
                    r.detail = "final state violates the postcondition: " + \
                        _final_text(rep.failing)
                    r.witnesses.append(_write(f"{base}.{tm}.{name}.witness.hist", _hist_text(
                        history_of(rep.witness), f"{cmd}\nfinal: {_final_text(rep.failing)}")))
                elif rep.verdict == "partial":
                    r.detail = "a bound was reached; no violation among explored states"
            elif name == "tdrf":
                try:
                    rep = tdrf_program(p, b)
                except PartialExploration as e:
                    r.verdict, r.detail = "partial", str(e)
                else:
                    r.extra = {"histories": rep.histories}
                    if not rep.ok:
                        r.verdict = "fail"
                        r.detail = _races(rep.witness, rep.races)
                        r.witnesses.append(_write(f"{base}.{tm}.{name}.witness.hist",
                                                  _hist_text(rep.witness, cmd)))
            elif name == "refinement":
                nb = Bounds(depth=b.depth, loop=b.loop, perm_cap=b.perm_cap, stutter=False)
                res = _explore(p, tm, nb, seed)
                rep = refines_atomic(res, nb)
                r.extra = {"executions": len(res.executions)}
                if not rep.ok:
                    r.verdict = "fail"
                    r.detail = "trace with no observationally equivalent atomic trace"
                    r.witnesses.append(_write(f"{base}.{tm}.{name}.witness.hist",
                                              _hist_text(history_of(rep.unmatched), cmd)))
                elif res.partial:
                    r.verdict = "partial"
            elif name == "witness-graph":
                if tm == "atomic":
                    raise ValueError("witness-graph needs a TM algorithm")
                from .stm.witness import witness_graph
                res = _explore(p, tm, b, seed)
                r.extra = {"executions": len(res.executions)}
                for ex in sorted(res.executions, key=len):
                    w = witness_graph(ex, tm)
                    if not w.ok:
                        u = w.first_failure()
                        r.verdict = "fail"
                        r.detail = (f"update {u.kind} on {u.vertex}: inv1={u.inv1} "
                                    f"inv2={u.inv2} acyclic={u.acyclic}" if u else
                                    "a read has no writer of its value")
                        r.witnesses.append(_write(f"{base}.{tm}.{name}.witness.hist",
                                                  _hist_text(history_of(ex), cmd)))
                        if w.graph is not None:
                            r.witnesses.append(_write(f"{base}.{tm}.{name}.witness.graph",
                                                      serialize_graph(w.graph)))
                        break
                else:
                    if res.partial:
                        r.verdict = "partial"
        except CapExceeded as e:
            r.verdict, r.detail = "cap", str(e)
        except (ProgramError, ValueError) as e:
            r.verdict, r.detail = "error", str(e)
        r.seconds = time.perf_counter() - t0
        reports.append(r)
    _emit(reports, fmt, out)
    return _exit_code(reports)


# -------------------------------------------------------------- tm-props

def cmd_tm_props(tm: str, depth: int, fmt: str, out,
                 witness_dir: Optional[str] = None) -> int:
    from .stm.props import check_invisible_reads_bounded, check_progressive_bounded
    cmd = f"tm-props --tm {tm} --depth {depth}"
    folder = witness_dir or os.getcwd()
    reports = []
    for name, fn in (("progressive", check_progressive_bounded),
                     ("invisible-reads", check_invisible_reads_bounded)):
        t0 = time.perf_counter()
        rep = fn(tm, depth)
        r = CheckReport(cmd, name, "pass" if rep.holds else "fail",
                        seconds=time.perf_counter() - t0,
                        extra={name: str(rep.holds).lower(), "states": rep.states})
        if rep.witness is not None:
            r.detail = "the last request is never answered, or is aborted"
            r.witnesses.append(_write(os.path.join(folder, f"{tm}.{name}.witness.hist"),
                                      _hist_text(history_of(rep.witness), cmd)))
        reports.append(r)
    _emit(reports, fmt, out)
    return _exit_code(reports)


# ------------------------------------------------------------------ main

def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    bounds = getattr(args, "bounds", None) or parse_bounds(None)
    fmt = getattr(args, "format", "text")
    seed = getattr(args, "seed", None)
    if args.verb == "check-history":
        return cmd_check_history(args.file, args.checks, bounds, fmt, out)
    if args.verb == "run":
        return cmd_run(args.program, args.tm, args.check, bounds, seed, fmt, out,
                       args.witness_dir)
    if args.verb == "tm-props":
        return cmd_tm_props(args.tm, args.depth, fmt, out, args.witness_dir)
    if args.action == "list":
        for n in corpus.names():
            out.write(n + "\n")
        return EXIT_PASS
    if not args.name:
        parser.error("corpus show needs a program name")
    try:
        out.write(corpus.source(args.name))
    except KeyError as e:
        sys.stderr.write(str(e.args[0]) + "\n")
        return EXIT_PARSE
    return EXIT_PASS


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
