"""Built-in example programs, addressable by name."""
from __future__ import annotations

from .lang.parser import parse_program

SOURCES = {
    "fig1": """\
# privatization: t1 makes priv private, then writes x outside transactions
init priv = 0; init x = 0;
thread t1 {
  l1 = atomic { priv.write(1); };
  if (l1 == committed) { x.write(1); }
}
thread t2 {
  l2 = atomic { p = priv.read(); if (p == 0) { x.write(42); } };
}
post !(l1 == committed) || x == 1;
""",
    "fig2": """\
# publication: x is initialised outside transactions, then published;
# pub == 0 means x is still private (every register starts at 0)
init pub = 0; init x = 0;
thread t1 {
  x.write(42);
  l1 = atomic { pub.write(1); };
}
thread t2 {
  l2 = atomic { p = pub.read(); if (p == 1) { r = x.read(); } };
}
post !(l2 == committed && p == 1) || r == 42;
""",
    "fig3": """\
# racy: non-transactional reads may see half of a transaction
init x = 0; init y = 0;
thread t1 {
  l = atomic { x.write(1); y.write(2); };
}
thread t2 {
  l1 = x.read();
  l2 = y.read();
}
post !(l1 == 1) || l2 == 2;
""",
    "fig5": """\
# privatization by agreement outside transactions
init x = 0; init x_is_ready = 0;
thread t1 {
  l1 = atomic { x.write(42); };
  x_is_ready.write(1);
}
thread t2 {
  do { l2 = x_is_ready.read(); } while (!l2);
  l3 = x.read();
}
post !(l1 == committed) || l3 == 42;
""",
    "fig6": """\
# proxy privatization: t1 privatizes, t2 accesses x on its behalf
init priv = 0; init x = 0;
thread t1 {
  k = atomic { priv.write(1); };
}
thread t2 {
  l1 = atomic { l2 = priv.read(); };
  if (l1 == committed && l2 != 0) { x.write(1); }
}
thread t3 {
  l3 = atomic { p = priv.read(); if (p == 0) { x.write(42); } };
}
post !(l1 == committed && l2 != 0) || x == 1;
""",
    "thm25": """\
# privatization followed by a non-transactional read of x
init priv = 0; init x = 0;
thread t1 {
  l1 = atomic { priv.write(1); };
  if (l1 == committed) { l2 = x.read(); }
}
thread t2 {
  l3 = atomic { p = priv.read(); if (p == 0) { x.write(42); } };
}
post !(l1 == committed && l3 == committed && p == 0) || l2 == 42;
""",
}

# programs claimed race-free under strong atomicity
TDRF = ("fig1", "fig2", "fig5", "fig6", "thm25")


def names() -> list:
    return list(SOURCES)


def source(name: str) -> str:
    try:
        return SOURCES[name]
    except KeyError:
        raise KeyError(f"no corpus program {name!r}; known: {' '.join(SOURCES)}") from None


def load(name: str):
    return parse_program(source(name))
