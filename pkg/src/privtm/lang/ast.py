"""AST of the mixed transactional / non-transactional language.

Nodes are frozen dataclasses so continuations built from them hash.  Every
statement carries a ``uid`` (its source offset) so that two textually equal
statements at different places stay distinct.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

# committed/aborted results sit outside the 64-bit range
COMMITTED_VAL = 2**63
ABORTED_VAL = 2**63 + 1


def show_value(v: int) -> str:
    if v == COMMITTED_VAL:
        return "committed"
    if v == ABORTED_VAL:
        return "aborted"
    return str(v)


# ------------------------------------------------------------ expressions

@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self):
        return show_value(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Unary:
    op: str           # "!" or "-"
    arg: object

    def __str__(self):
        return f"{self.op}({self.arg})"


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


def _truth(v) -> bool:
    return v != 0


def evaluate(e, env) -> int:
    """Evaluate over ``env`` (a mapping; missing names read as 0)."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return env.get(e.name, 0)
    if isinstance(e, Unary):
        v = evaluate(e.arg, env)
        return int(not _truth(v)) if e.op == "!" else -v
    op = e.op
    if op == "&&":
        return int(_truth(evaluate(e.left, env)) and _truth(evaluate(e.right, env)))
    if op == "||":
        return int(_truth(evaluate(e.left, env)) or _truth(evaluate(e.right, env)))
    a, b = evaluate(e.left, env), evaluate(e.right, env)
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    raise ValueError(f"unknown operator {op}")


def names_in(e) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return names_in(e.arg)
    if isinstance(e, Binary):
        return names_in(e.left) | names_in(e.right)
    return set()


def consts_in(e) -> set:
    if isinstance(e, Const):
        return {e.value}
    if isinstance(e, Unary):
        return consts_in(e.arg)
    if isinstance(e, Binary):
        return consts_in(e.left) | consts_in(e.right)
    return set()


# ------------------------------------------------------------- statements

@dataclass(frozen=True)
class Assign:
    uid: int
    lvar: str
    expr: object


@dataclass(frozen=True)
class Skip:
    uid: int


@dataclass(frozen=True)
class Read:
    uid: int
    lvar: str
    reg: str


@dataclass(frozen=True)
class Write:
    uid: int
    reg: str
    expr: object


@dataclass(frozen=True)
class If:
    uid: int
    cond: object
    then: tuple
    orelse: tuple


@dataclass(frozen=True)
class While:
    uid: int
    cond: object
    body: tuple


@dataclass(frozen=True)
class Atomic:
    uid: int
    lvar: str
    body: tuple


@dataclass(frozen=True)
class Thread:
    name: str
    tid: int
    body: tuple
    locals: frozenset = frozenset()


@dataclass(frozen=True)
class Program:
    threads: tuple
    init: tuple = ()                  # (reg, value) pairs
    post: Optional[object] = None
    registers: frozenset = frozenset()
    source: str = field(default="", compare=False)

    def init_mem(self) -> dict:
        return dict(self.init)

    def thread_of_local(self, name: str) -> Optional[int]:
        for th in self.threads:
            if name in th.locals:
                return th.tid
        return None


def walk(stmts):
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk(s.then)
            yield from walk(s.orelse)
        elif isinstance(s, (While, Atomic)):
            yield from walk(s.body)


def has_loops(p: Program) -> bool:
    return any(isinstance(s, While) for th in p.threads for s in walk(th.body))
