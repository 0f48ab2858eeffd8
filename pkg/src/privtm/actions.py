"""Actions, traces, histories and their structure.

A trace is a tuple of :class:`Action`.  A history is a trace that holds only
interface actions (no ``prim`` and no ``wb``).  Both are plain tuples so they
hash, compare and slice like any other sequence.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

BEGINTX = "begintx"
OK = "ok"
TRYCOMMIT = "trycommit"
COMMITTED = "committed"
ABORTED = "aborted"
WRITE = "write"
READ = "read"
RET = "ret"
RETU = "retu"
FBEGIN = "fbegin"
FEND = "fend"
PRIM = "prim"
WB = "wb"

REQUESTS = frozenset({BEGINTX, TRYCOMMIT, WRITE, READ, FBEGIN})
RESPONSES = frozenset({OK, COMMITTED, ABORTED, RET, RETU, FEND})
INTERNAL = frozenset({PRIM, WB})
KINDS = REQUESTS | RESPONSES | INTERNAL

# request kind -> response kinds that may answer it
ANSWERS = {
    BEGINTX: frozenset({OK, ABORTED}),
    TRYCOMMIT: frozenset({COMMITTED, ABORTED}),
    WRITE: frozenset({RETU, ABORTED}),
    READ: frozenset({RET, ABORTED}),
    FBEGIN: frozenset({FEND}),
}

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class Action:
    id: int
    thread: int
    kind: str
    reg: Optional[str] = None
    value: Optional[int] = None
    tag: Optional[str] = None

    @property
    def is_request(self) -> bool:
        return self.kind in REQUESTS

    @property
    def is_response(self) -> bool:
        return self.kind in RESPONSES

    @property
    def is_interface(self) -> bool:
        return self.kind not in INTERNAL

    def same_content(self, other: "Action") -> bool:
        return (self.thread, self.kind, self.reg, self.value, self.tag) == (
            other.thread, other.kind, other.reg, other.value, other.tag)

    def content(self) -> tuple:
        return (self.thread, self.kind, self.reg, self.value, self.tag)

    def __str__(self) -> str:
        head = f"{self.id} {self.thread} {self.kind}"
        if self.kind in (WRITE, WB):
            return f"{head} {self.reg} {self.value}"
        if self.kind == READ:
            return f"{head} {self.reg}"
        if self.kind == RET:
            return f"{head} {self.value}"
        if self.kind == PRIM:
            return f"{head} {self.tag}"
        return head


Trace = tuple
History = tuple


def begintx(i, t):
    return Action(i, t, BEGINTX)


def ok(i, t):
    return Action(i, t, OK)


def trycommit(i, t):
    return Action(i, t, TRYCOMMIT)


def committed(i, t):
    return Action(i, t, COMMITTED)


def aborted(i, t):
    return Action(i, t, ABORTED)


def write(i, t, reg, v):
    return Action(i, t, WRITE, reg, v)


def read(i, t, reg):
    return Action(i, t, READ, reg)


def ret(i, t, v):
    return Action(i, t, RET, None, v)


def retu(i, t):
    return Action(i, t, RETU)


def fbegin(i, t):
    return Action(i, t, FBEGIN)


def fend(i, t):
    return Action(i, t, FEND)


def wb(i, t, reg, v):
    return Action(i, t, WB, reg, v)


def prim(i, t, tag):
    return Action(i, t, PRIM, tag=tag)


def renumber(actions: Iterable[Action], start: int = 1) -> tuple:
    """Reassign ids 1..n in order (id renaming)."""
    return tuple(Action(start + k, a.thread, a.kind, a.reg, a.value, a.tag)
                 for k, a in enumerate(actions))


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Violation:
    condition: int
    index: int
    message: str

    def __str__(self) -> str:
        return f"condition {self.condition} at index {self.index}: {self.message}"


class IllFormedTrace(ValueError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def wellformedness_violations(seq: Sequence[Action],
                              local_owner: Optional[Callable[[str], Optional[int]]] = None
                              ) -> list[Violation]:
    """Every violated well-formedness condition, in index order.

    ``local_owner`` maps a primitive tag to the thread owning the locals it
    touches (or None when it touches none); without it condition 2 is not
    checked, since opaque tags carry no variable information.
    """
    out: list[Violation] = []
    seen: dict[int, int] = {}
    pending: dict[int, int] = {}       # thread -> index of open request
    in_tx: dict[int, bool] = {}
    last_own: dict[int, int] = {}      # thread -> index of its previous action

    for i, a in enumerate(seq):
        if a.kind not in KINDS:
            out.append(Violation(4, i, f"unknown kind {a.kind!r}"))
            continue
        if a.id in seen:
            out.append(Violation(1, i, f"duplicate id {a.id} (first at index {seen[a.id]})"))
        else:
            seen[a.id] = i
        t = a.thread

        if a.kind == PRIM:
            if local_owner is not None:
                owner = local_owner(a.tag or "")
                if owner is not None and owner != t:
                    out.append(Violation(2, i, f"thread {t} touches locals of thread {owner}"))
            prev = last_own.get(t)
            if prev is not None and seq[prev].is_request:
                out.append(Violation(3, i, f"primitive action follows request at index {prev}"))
        elif a.is_request:
            if t in pending:
                out.append(Violation(4, i, f"request while request at index {pending[t]} is unanswered"))
            if a.kind == BEGINTX and in_tx.get(t):
                out.append(Violation(5, i, "begintx inside an open transaction"))
            if a.kind == TRYCOMMIT and not in_tx.get(t):
                out.append(Violation(5, i, "trycommit outside a transaction"))
            pending[t] = i
            if a.kind in (READ, WRITE) and not in_tx.get(t):
                nxt = seq[i + 1] if i + 1 < len(seq) else None
                if nxt is None or nxt.thread != t or not nxt.is_response:
                    out.append(Violation(6, i, "non-transactional access is not immediately answered"))
                elif nxt.kind == ABORTED:
                    out.append(Violation(7, i + 1, "non-transactional access answered by aborted"))
        elif a.is_response:
            req = pending.pop(t, None)
            if req is None:
                out.append(Violation(4, i, "response without a pending request"))
            elif a.kind not in ANSWERS[seq[req].kind]:
                out.append(Violation(4, i, f"{a.kind} cannot answer {seq[req].kind} at index {req}"))
            if a.kind in (COMMITTED, ABORTED):
                if not in_tx.get(t):
                    out.append(Violation(5, i, f"{a.kind} outside a transaction"))
                in_tx[t] = False
        if a.kind == BEGINTX:
            in_tx[t] = True
        if a.kind != WB:
            last_own[t] = i
    return out


def validate_wellformed(seq: Iterable[Action],
                        local_owner: Optional[Callable[[str], Optional[int]]] = None) -> Trace:
    """Return the sequence as a trace, or raise :class:`IllFormedTrace` listing all violations."""
    seq = tuple(seq)
    bad = wellformedness_violations(seq, local_owner)
    if bad:
        raise IllFormedTrace(bad)
    return seq


def history_of(tr: Iterable[Action]) -> History:
    return tuple(a for a in tr if a.is_interface)


def is_history(seq: Iterable[Action]) -> bool:
    return all(a.is_interface for a in seq)


# ---------------------------------------------------------------- structure

COMMITTED_STATUS = "committed"
ABORTED_STATUS = "aborted"
PENDING_STATUS = "commit-pending"
LIVE_STATUS = "live"


@dataclass(frozen=True)
class TransactionView:
    thread: int
    span: tuple[int, int]            # first and last index, inclusive
    status: str
    indices: tuple[int, ...] = field(default=())

    @property
    def completed(self) -> bool:
        return self.status in (COMMITTED_STATUS, ABORTED_STATUS)


@dataclass(frozen=True)
class NontxAccess:
    request: int
    response: int
    thread: int
    reg: str
    kind: str                        # "read" or "write"
    value: Optional[int]


@dataclass
class Structure:
    """Transactions, non-transactional accesses and request/response matching."""

    actions: tuple
    txs: list[TransactionView]
    accesses: list[NontxAccess]
    tx_of: list[Optional[int]]       # action index -> transaction number
    access_of: list[Optional[int]]   # action index -> access number
    match: dict[int, int]            # request index <-> response index

    def response_of(self, i: int) -> Optional[int]:
        return self.match.get(i)

    def nontx(self, i: int) -> bool:
        a = self.actions[i]
        return a.is_interface and self.tx_of[i] is None


def structure(seq: Sequence[Action]) -> Structure:
    seq = tuple(seq)
    n = len(seq)
    tx_of: list[Optional[int]] = [None] * n
    access_of: list[Optional[int]] = [None] * n
    match: dict[int, int] = {}
    open_tx: dict[int, int] = {}
    members: list[list[int]] = []
    threads: list[int] = []
    pending: dict[int, int] = {}
    accesses: list[NontxAccess] = []

    for i, a in enumerate(seq):
        t = a.thread
        if a.kind == BEGINTX and t not in open_tx:
            open_tx[t] = len(members)
            members.append([])
            threads.append(t)
        k = open_tx.get(t)
        if k is not None:
            tx_of[i] = k
            members[k].append(i)
        if a.is_request:
            pending[t] = i
        elif a.is_response and t in pending:
            r = pending.pop(t)
            match[r] = i
            match[i] = r
            req = seq[r]
            if req.kind in (READ, WRITE) and tx_of[r] is None and tx_of[i] is None:
                value = a.value if req.kind == READ else req.value
                access_of[r] = access_of[i] = len(accesses)
                accesses.append(NontxAccess(r, i, t, req.reg, req.kind, value))
        if k is not None and a.kind in (COMMITTED, ABORTED):
            del open_tx[t]

    txs = []
    for k, idx in enumerate(members):
        # the terminal marker is the last interface action of the transaction
        last_iface = next(seq[j] for j in reversed(idx) if seq[j].is_interface)
        if last_iface.kind == COMMITTED:
            status = COMMITTED_STATUS
        elif last_iface.kind == ABORTED:
            status = ABORTED_STATUS
        elif last_iface.kind == TRYCOMMIT:
            status = PENDING_STATUS
        else:
            status = LIVE_STATUS
        txs.append(TransactionView(threads[k], (idx[0], idx[-1]), status, tuple(idx)))
    return Structure(seq, txs, accesses, tx_of, access_of, match)


def transactions_of(h: Sequence[Action]) -> list[TransactionView]:
    return structure(h).txs


def nontx_accesses(h: Sequence[Action]) -> list[NontxAccess]:
    return structure(h).accesses


NONTX = "nontx"


def project(tr: Sequence[Action], selector) -> Trace:
    """Thread projection (``selector`` a thread id) or the non-transactional
    projection (``selector == NONTX``), which keeps exactly the actions of
    non-transactional accesses."""
    if selector == NONTX:
        s = structure(tr)
        return tuple(a for i, a in enumerate(tr) if s.access_of[i] is not None)
    return tuple(a for a in tr if a.thread == selector)


def threads_of(tr: Iterable[Action]) -> list[int]:
    return sorted({a.thread for a in tr})
