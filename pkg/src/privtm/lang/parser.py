"""Recursive-descent parser for the program DSL.

    init x = 0;
    thread t1 { l1 = atomic { priv.write(1); }; if (l1 == committed) { x.write(1); } }
    post !(l1 == committed) || x == 1;
"""
from __future__ import annotations

import re

from .ast import (ABORTED_VAL, COMMITTED_VAL, Assign, Atomic, Binary, Const, If, Program, Read,
                  Skip, Thread, Unary, Var, While, Write, names_in, walk)


class ProgramError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + message)


_TOKEN = re.compile(r"""
    (?P<ws>\s+|//[^\n]*|\#[^\n]*)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|&&|\|\||[{}();=<>!+\-*.,])
""", re.VERBOSE)

_LITERALS = {"committed": COMMITTED_VAL, "aborted": ABORTED_VAL, "true": 1, "false": 0}
_KEYWORDS = {"init", "thread", "post", "atomic", "if", "else", "while", "do", "skip"}


def _tokenize(text: str):
    pos, line, col = 0, 1, 1
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ProgramError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            out.append((kind, tok, line, col, pos))
        nl = tok.count("\n")
        if nl:
            line += nl
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    out.append(("eof", "", line, col, pos))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.in_atomic = False

    def peek(self, k=0):
        return self.toks[self.i + k]

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ProgramError(msg, tok[2], tok[3])

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def accept(self, text):
        if self.peek()[1] == text and self.peek()[0] != "eof":
            return self.next()
        return None

    def expect(self, text):
        tok = self.accept(text)
        if tok is None:
            self.error(f"expected {text!r}, found {self.peek()[1] or 'end of input'!r}")
        return tok

    def ident(self):
        tok = self.next()
        if tok[0] != "id" or tok[1] in _KEYWORDS or tok[1] in _LITERALS:
            self.error(f"expected a name, found {tok[1] or 'end of input'!r}", tok)
        return tok[1]

    # ------------------------------------------------------------ program

    def program(self):
        init, threads, post = [], [], None
        while self.peek()[0] != "eof":
            tok = self.peek()
            if self.accept("init"):
                reg = self.ident()
                self.expect("=")
                neg = -1 if self.accept("-") else 1
                num = self.next()
                if num[0] != "int":
                    self.error("expected an integer", num)
                self.expect(";")
                init.append((reg, neg * int(num[1])))
            elif self.accept("thread"):
                name = self.ident()
                body = self.block()
                threads.append((name, body))
            elif self.accept("post"):
                if post is not None:
                    self.error("more than one postcondition", tok)
                post = self.expr()
                self.expect(";")
            else:
                self.error(f"expected init, thread or post, found {tok[1]!r}")
        return init, threads, post

    def block(self):
        self.expect("{")
        out = []
        while not self.accept("}"):
            if self.peek()[0] == "eof":
                self.error("unterminated block")
            out.extend(self.stmt())
        return tuple(out)

    def stmt(self):
        tok = self.peek()
        uid = tok[4]
        if self.accept("skip"):
            self.expect(";")
            return [Skip(uid)]
        if self.accept("if"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse = self.block() if self.accept("else") else ()
            return [If(uid, cond, then, orelse)]
        if self.accept("while"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return [While(uid, cond, self.block())]
        if self.accept("do"):
            body = self.block()
            self.expect("while")
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self.expect(";")
            return list(body) + [While(uid, cond, body)]
        name = self.ident()
        if self.accept("."):
            meth = self.ident()
            if meth != "write":
                self.error(f"only write() may be called as a statement, not {meth}()")
            self.expect("(")
            e = self.expr()
            self.expect(")")
            self.expect(";")
            return [Write(uid, name, e)]
        self.expect("=")
        if self.accept("atomic"):
            if self.in_atomic:
                self.error("atomic blocks cannot be nested", tok)
            self.in_atomic = True
            body = self.block()
            self.in_atomic = False
            self.expect(";")
            return [Atomic(uid, name, body)]
        if self.peek(0)[0] == "id" and self.peek(1)[1] == "." and self.peek(2)[1] == "read":
            reg = self.ident()
            self.expect(".")
            self.next()
            self.expect("(")
            self.expect(")")
            self.expect(";")
            return [Read(uid, name, reg)]
        e = self.expr()
        self.expect(";")
        return [Assign(uid, name, e)]

    # -------------------------------------------------------- expressions

    def expr(self):
        left = self.conj()
        while self.accept("||"):
            left = Binary("||", left, self.conj())
        return left

    def conj(self):
        left = self.cmp()
        while self.accept("&&"):
            left = Binary("&&", left, self.cmp())
        return left

    def cmp(self):
        left = self.sum()
        for op in ("==", "!=", "<=", ">=", "<", ">"):
            if self.accept(op):
                return Binary(op, left, self.sum())
        return left

    def sum(self):
        left = self.prod()
        while True:
            if self.accept("+"):
                left = Binary("+", left, self.prod())
            elif self.accept("-"):
                left = Binary("-", left, self.prod())
            else:
                return left

    def prod(self):
        left = self.unary()
        while self.accept("*"):
            left = Binary("*", left, self.unary())
        return left

    def unary(self):
        if self.accept("!"):
            return Unary("!", self.unary())
        if self.accept("-"):
            arg = self.unary()
            if isinstance(arg, Const):
                return Const(-arg.value)
            return Unary("-", arg)
        tok = self.next()
        if tok[0] == "int":
            return Const(int(tok[1]))
        if tok[1] == "(":
            e = self.expr()
            self.expect(")")
            return e
        if tok[0] == "id" and tok[1] in _LITERALS:
            return Const(_LITERALS[tok[1]])
        if tok[0] == "id" and tok[1] not in _KEYWORDS:
            return Var(tok[1])
        self.error(f"unexpected {tok[1] or 'end of input'!r} in expression", tok)


def _stmt_names(stmts):
    """Locals written or read, and registers accessed."""
    locs, regs = set(), set()
    for s in walk(stmts):
        if isinstance(s, Assign):
            locs.add(s.lvar)
            locs |= names_in(s.expr)
        elif isinstance(s, Read):
            locs.add(s.lvar)
            regs.add(s.reg)
        elif isinstance(s, Write):
            regs.add(s.reg)
            locs |= names_in(s.expr)
        elif isinstance(s, (If, While)):
            locs |= names_in(s.cond)
        elif isinstance(s, Atomic):
            locs.add(s.lvar)
    return locs, regs


def parse_program(text: str) -> Program:
    p = _Parser(text)
    init, raw_threads, post = p.program()
    regs = {r for r, _ in init}
    seen_threads = set()
    owners: dict = {}
    threads = []
    per_thread = []
    for name, body in raw_threads:
        if name in seen_threads:
            raise ProgramError(f"duplicate thread name {name!r}")
        seen_threads.add(name)
        locs, r = _stmt_names(body)
        regs |= r
        per_thread.append((name, body, locs))
    for tid, (name, body, locs) in enumerate(per_thread, 1):
        clash = locs & regs
        if clash:
            raise ProgramError(f"thread {name} uses register(s) {sorted(clash)} as locals")
        for l in sorted(locs):
            if l in owners:
                raise ProgramError(f"local {l!r} is referenced by threads {owners[l]} and {name}")
            owners[l] = name
        threads.append(Thread(name, tid, body, frozenset(locs)))
    if post is not None:
        unknown = names_in(post) - regs - set(owners)
        if unknown:
            raise ProgramError(f"postcondition mentions unknown name(s) {sorted(unknown)}")
    return Program(tuple(threads), tuple(init), post, frozenset(regs), text)
