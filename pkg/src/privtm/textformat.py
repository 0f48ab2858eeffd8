"""Line format for histories and executions.

One action per line: ``<id> <thread> <kind> [<arg>...]``.  ``#`` starts a
comment and blank lines are skipped.  Execution files may carry ``wb`` lines,
history files may not.
"""
from __future__ import annotations

from typing import Iterable

from .actions import (ABORTED, BEGINTX, COMMITTED, FBEGIN, FEND, INT64_MAX, INT64_MIN, OK, READ,
                      RET, RETU, TRYCOMMIT, WB, WRITE, Action)


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


_NULLARY = {BEGINTX, OK, TRYCOMMIT, COMMITTED, ABORTED, RETU, FBEGIN, FEND}


def _int(tok: str, lineno: int, what: str) -> int:
    try:
        v = int(tok, 10)
    except ValueError:
        raise ParseError(lineno, f"{what} is not an integer: {tok!r}") from None
    if not INT64_MIN <= v <= INT64_MAX:
        raise ParseError(lineno, f"{what} out of 64-bit range: {tok}")
    return v


def _uint(tok: str, lineno: int, what: str) -> int:
    v = _int(tok, lineno, what)
    if v < 0:
        raise ParseError(lineno, f"{what} must be non-negative: {tok}")
    return v


def _reg(tok: str, lineno: int) -> str:
    if not (tok[0].isalpha() or tok[0] == "_") or not all(c.isalnum() or c == "_" for c in tok):
        raise ParseError(lineno, f"bad register name {tok!r}")
    return tok


def parse_line(line: str, lineno: int, allow_wb: bool) -> Action | None:
    body = line.split("#", 1)[0].strip()
    if not body:
        return None
    toks = body.split()
    if len(toks) < 3:
        raise ParseError(lineno, "expected '<id> <thread> <kind> [args]'")
    aid = _uint(toks[0], lineno, "id")
    thread = _uint(toks[1], lineno, "thread")
    kind, args = toks[2], toks[3:]

    def arity(n):
        if len(args) != n:
            raise ParseError(lineno, f"{kind} takes {n} argument(s), got {len(args)}")

    if kind in _NULLARY:
        arity(0)
        return Action(aid, thread, kind)
    if kind == "ret":
        if not args:       # "ret" alone is the unit return of a write
            return Action(aid, thread, RETU)
        arity(1)
        return Action(aid, thread, RET, None, _int(args[0], lineno, "value"))
    if kind == READ:
        arity(1)
        return Action(aid, thread, READ, _reg(args[0], lineno))
    if kind == WRITE or kind == WB:
        if kind == WB and not allow_wb:
            raise ParseError(lineno, "write-back actions are not allowed in histories")
        arity(2)
        return Action(aid, thread, kind, _reg(args[0], lineno), _int(args[1], lineno, "value"))
    raise ParseError(lineno, f"unknown kind {kind!r}")


def _parse(text: str, allow_wb: bool) -> tuple:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        a = parse_line(line, lineno, allow_wb)
        if a is not None:
            out.append(a)
    return tuple(out)


def parse_history(text: str) -> tuple:
    return _parse(text, allow_wb=False)


def parse_execution(text: str) -> tuple:
    return _parse(text, allow_wb=True)


def serialize_history(h: Iterable[Action]) -> str:
    lines = []
    for a in h:
        if a.kind == "prim":
            raise ValueError("primitive actions have no text form")
        lines.append(str(a))
    return "".join(line + "\n" for line in lines)


serialize_execution = serialize_history
