import json
import os
import re
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from frob import cache, cli, groebner, runner
from frob import theorems as th
from frob.session import SessionError, format_session, parse_session

CORPUS = sorted((Path(__file__).parent / "corpus").glob("*.frob"))
SCHEMA = json.loads(runner.SCHEMA_PATH.read_text())

CURVE = """
ring C
  p = 2
  vars = x, y, z
  weights = 3, 4, 5
  ideal = y^2 - x*z, x^3 - y*z, x^2*y - z^2
  minimal_prime = y^2 - x*z, x^3 - y*z, x^2*y - z^2
  reduced = true
end

module K over C
  degrees = 0, 1
  column = x, 0
  column = y, x
end

task betti module=K
task pushforward module=K n=1
task random ring=C count=2
"""


def expectation(path: Path) -> dict:
    header = path.read_text().splitlines()[0]
    return dict(re.findall(r"(\w+)=(\S+)", header))


# ---------------------------------------------------------------- parser


def test_parse_ring_block():
    s = parse_session("ring RA\n  p = 2\n  vars = x, y\n  ideal = x^2\nend\n")
    r = s.ring("RA")
    assert r.p == 2 and tuple(r.weights) == (1, 1) and list(r.ideal) == ["x^2"]


def test_parse_weighted_curve_homogeneity():
    s = parse_session(CURVE)
    R = s.ring("C").build()
    assert sorted(g.degree() for g in R.ideal.gens) == [8, 9, 10]


@pytest.mark.parametrize("path", CORPUS + sorted(Path(runner.__file__).with_name("sessions").glob("*.frob")),
                         ids=lambda p: p.name)
def test_round_trip(path):
    text = path.read_text()
    try:
        s = parse_session(text)
    except SessionError:
        return
    canon = format_session(s)
    assert parse_session(canon) == s
    assert format_session(parse_session(canon)) == canon


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_conformance_corpus(path):
    exp = expectation(path)
    code, report, text = runner.run_session(path.read_text(), name=path.name)
    assert code == int(exp["exit"])
    assert report["exit_code"] == code
    jsonschema.validate(report, SCHEMA)
    errors = [t for t in report["tasks"] if t["status"] == "error"]
    if "code" in exp:
        assert errors and errors[0]["error"]["code"] == exp["code"]
        if "line" in exp:
            assert errors[0]["line"] == int(exp["line"])
    else:
        assert not errors


def test_error_carries_column():
    with pytest.raises(SessionError) as info:
        parse_session("ring R\n  p = 2\n  vars = x, y\n  ideal = x*w\nend\n")
    assert info.value.code == "UnknownVariable"
    assert (info.value.line, info.value.column) == (4, 13)


# ------------------------------------------------------------ exit codes


def _fake(status):
    def run(*_a, **_k):
        rep = th.VerificationReport("Ex1.2", {"fake": status})
        if status == "counterexample":
            rep.hypothesis("h", True)
            return rep.settle(False)
        if status == "hypotheses_fail":
            rep.hypothesis("h", False)
            return rep.settle(None)
        return rep.settle(True)

    return run


def test_exit_code_precedence():
    assert runner.exit_code([{"status": "pass"}, {"status": "not_applicable"}]) == 0
    assert runner.exit_code([{"status": "pass"}, {"status": "hypotheses_fail"}]) == 1
    assert runner.exit_code([{"status": "error"}, {"status": "hypotheses_fail"}]) == 3
    assert runner.exit_code([{"status": "error"}, {"status": "counterexample"}]) == 2


def test_counterexample_exit_code(monkeypatch):
    monkeypatch.setattr(th, "verify_example_1_2", _fake("counterexample"))
    code, report, text = runner.run_session("task verify Ex1.2 p=2\n")
    assert code == 2 and report["tasks"][0]["reports"][0]["counterexample"] is True
    jsonschema.validate(report, SCHEMA)


def test_bundled_sessions_exit_zero():
    for name in ("example_1_2", "corollary_1_4_t345"):
        text, _ = cli._read_session(name)
        code, report, _ = runner.run_session(text, name=name)
        assert code == 0, name
        jsonschema.validate(report, SCHEMA)
    text, _ = cli._read_session("corollary_1_4_t345")
    report = runner.run_session(text)[1]
    cor = [r for t in report["tasks"] for r in t["reports"] if r["statement"] == "Cor1.4"]
    assert cor and all(r["conclusion_evidence"]["torsion_hilbert_function"] for r in cor)


def test_example_session_assertions():
    text, _ = cli._read_session("example_1_2")
    report = runner.run_session(text)[1]
    ex = [r for t in report["tasks"] for r in t["reports"] if r["statement"] == "Ex1.2"]
    assert len(ex) == 3
    assert all(all(r["conclusion_evidence"]["assertions"].values()) for r in ex)


# ---------------------------------------------- determinism and parallelism


def test_determinism_and_parallel_agree():
    a = runner.dumps(runner.run_session(CURVE, seed=7)[1])
    b = runner.dumps(runner.run_session(CURVE, seed=7)[1])
    c = runner.dumps(runner.run_session(CURVE, seed=7, parallel=True, workers=2)[1])
    assert a == b == c


def test_cache_soundness(tmp_path):
    def fresh_run():
        groebner.clear_memo()
        return runner.dumps(runner.run_session(CURVE, seed=1)[1])

    try:
        cache.disable()
        base = fresh_run()
        cache.set_cache_dir(tmp_path / "gb")
        cold = fresh_run()
        entries = sorted((tmp_path / "gb").glob("*.gb"))
        assert entries
        warm = fresh_run()
        # deleting the cache mid-stream changes nothing either
        for e in entries[::2]:
            e.unlink()
        partial = fresh_run()
    finally:
        cache.disable()
        groebner.clear_memo()
    assert base == cold == warm == partial


# ------------------------------------------------------------------- CLI


def frob(*args, env=None, cwd=None):
    return subprocess.run([sys.executable, "-m", "frob.cli", *args], capture_output=True, text=True,
                          env={**os.environ, **(env or {})}, cwd=cwd)


def test_cli_run_writes_reports(tmp_path):
    out = tmp_path / "out"
    proc = frob("run", "example_1_2", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    report = json.loads((out / "report.json").read_text())
    jsonschema.validate(report, SCHEMA)
    assert "exit code 0" in (out / "report.txt").read_text()


def test_cli_subcommands():
    proc = frob("betti", "R_B", "--ring", "--p", "2", "--cap", "3")
    assert proc.returncode == 0 and "total" in proc.stdout
    proc = frob("pushforward", "R_A", "--ring", "-n", "1", "--json")
    assert proc.returncode == 0
    push = json.loads(proc.stdout)["tasks"][0]["result"]["pushforward"]
    assert push["q"] == 2 and sorted(push["labels"]) == ["1", "x", "x*y", "y"]
    proc = frob("torsion", "R_C", "--ring", "--json")
    assert proc.returncode == 0 and json.loads(proc.stdout)["tasks"][0]["result"]["zero"] is True
    proc = frob("verify", "Ex1.2", "--p", "3")
    assert proc.returncode == 0 and "[pass] Ex1.2" in proc.stdout
    proc = frob("verify", "Thm1.3", "ring=R_B", "n=1")
    assert proc.returncode == 0


def test_cli_cache_commands(tmp_path):
    env = {"FROB_CACHE_DIR": str(tmp_path / "c")}
    assert frob("run", "example_1_2", env=env).returncode == 0
    info = json.loads(frob("cache", "info", env=env).stdout)
    assert info["entries"] > 0
    assert frob("cache", "clear", env=env).returncode == 0
    assert not (tmp_path / "c").exists()


def test_cli_missing_session():
    proc = frob("run", "no_such_session")
    assert proc.returncode == 3 and "no session file" in proc.stderr
