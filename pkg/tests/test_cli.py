import io
import json
import os

import pytest

from privtm.cli import main

FIG1 = """\
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
"""

# atomic, but the non-transactional reads race with the transaction
FIG3 = """\
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
"""


def run(*argv, cwd=None):
    out = io.StringIO()
    old = os.getcwd()
    if cwd:
        os.chdir(cwd)
    try:
        code = main(list(argv), out=out)
    finally:
        os.chdir(old)
    return code, out.getvalue()


def records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


@pytest.fixture
def files(tmp_path):
    (tmp_path / "fig1.hist").write_text(FIG1)
    (tmp_path / "fig3.hist").write_text(FIG3)
    (tmp_path / "empty.hist").write_text("# nothing\n")
    return tmp_path


def test_fig1_tdrf_passes(files):
    code, text = run("check-history", str(files / "fig1.hist"), "--checks", "tdrf")
    assert code == 0
    assert "verdict: pass" in text


def test_fig3_cdrf_fails_with_witness(files):
    code, text = run("check-history", str(files / "fig3.hist"), "--checks", "cdrf",
                     "--format", "json-lines")
    assert code == 1
    rec = [r for r in records(text) if r["check"] == "cdrf"][0]
    assert rec["verdict"] == "fail" and rec["witnesses"]
    w = rec["witnesses"][0]
    if not os.path.isabs(w):
        w = str(files / os.path.basename(w))
    code2, text2 = run("check-history", w, "--checks", "cdrf", "--format", "json-lines")
    assert code2 == 1
    assert records(text2)[-1]["verdict"] == "fail"


def test_empty_history_is_wellformed(files):
    code, text = run("check-history", str(files / "empty.hist"), "--checks", "wf")
    assert code == 0 and "verdict: pass" in text


def test_every_failure_leaves_a_witness(files):
    code, text = run("check-history", str(files / "fig3.hist"), "--checks",
                     "tdrf,cdrf,cdrf-graph,opacity", "--format", "json-lines", cwd=files)
    assert code == 1
    for rec in records(text):
        if rec["verdict"] == "fail":
            assert rec["witnesses"], rec["check"]
            for w in rec["witnesses"]:
                assert (files / w).exists() or os.path.exists(w)


def test_parse_error_exit_code(files):
    (files / "bad.hist").write_text("1 1 frobnicate\n")
    assert run("check-history", str(files / "bad.hist"))[0] == 2
    assert run("check-history", str(files / "missing.hist"))[0] == 2
    (files / "bad.prog").write_text("thread a { x.write(; }")
    assert run("run", str(files / "bad.prog"))[0] == 2


def test_cap_exceeded_exit_code(tmp_path):
    lines = []
    for t in range(1, 15):
        lines += [f"{2 * t - 1} {t} read x", f"{2 * t} {t} ret 0"]
    (tmp_path / "big.hist").write_text("\n".join(lines) + "\n")
    code, text = run("check-history", str(tmp_path / "big.hist"), "--checks", "opacity")
    assert code == 3 and "verdict: cap" in text


def test_partial_exit_code(tmp_path):
    code, text = run("run", "fig5", "--check", "post", "--bounds", "depth=6",
                     "--witness-dir", str(tmp_path))
    assert code == 4 and "verdict: partial" in text


@pytest.mark.parametrize("prog,tm,check,code", [
    ("fig1", "fencedtl2", "post", 0),
    ("fig1", "fencedtl2", "witness-graph", 0),
    ("fig3", "atomic", "post", 0),
    ("fig3", "tl2", "post", 1),
    ("fig1", "atomic", "tdrf", 0),
    ("thm25", "tl2", "refinement", 1),
])
def test_run_verdicts(tmp_path, prog, tm, check, code):
    got, text = run("run", prog, "--tm", tm, "--check", check, "--witness-dir", str(tmp_path))
    assert got == code, text
    if code == 1:
        assert list(tmp_path.glob(f"{prog}.{tm}.{check}.witness.*"))


def test_run_program_file(tmp_path):
    src = tmp_path / "solo.prog"
    src.write_text("thread a { l = atomic { x.write(1); }; }\npost l == committed && x == 1;\n")
    assert run("run", str(src), "--tm", "globallock")[0] == 0


def test_tm_props(tmp_path):
    code, text = run("tm-props", "--tm", "2pl", "--depth", "3", "--witness-dir", str(tmp_path),
                     "--format", "json-lines")
    recs = {r["check"]: r for r in records(text)}
    assert code == 1
    assert recs["progressive"]["verdict"] == "pass"
    assert recs["invisible-reads"]["verdict"] == "fail"
    assert (tmp_path / "2pl.invisible-reads.witness.hist").exists()
    code, _ = run("tm-props", "--tm", "tl2", "--depth", "3")
    assert code == 0


def test_corpus_commands():
    code, text = run("corpus", "list")
    assert code == 0 and "fig1" in text and "thm25" in text
    code, text = run("corpus", "show", "fig3")
    assert code == 0 and "thread t2" in text


def test_output_is_deterministic(files):
    a = run("check-history", str(files / "fig3.hist"), "--checks", "cdrf-graph",
            "--format", "json-lines", cwd=files)
    b = run("check-history", str(files / "fig3.hist"), "--checks", "cdrf-graph",
            "--format", "json-lines", cwd=files)
    strip = [{k: v for k, v in r.items() if k != "seconds"} for r in records(a[1])]
    assert strip == [{k: v for k, v in r.items() if k != "seconds"} for r in records(b[1])]
