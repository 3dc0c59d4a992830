"""Execute session tasks and collect reports.

Each task yields a JSON-ready dict; the run's exit code is 2 when any report
raises the counterexample alarm, otherwise 3 on any engine error, otherwise 1
when some hypothesis failed, otherwise 0.
"""

from __future__ import annotations

import json
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import frobenius as fb
from . import modules as md
from . import theorems as th
from .session import SessionError, SessionFile, TaskDecl, Workspace, parse_session

SCHEMA_VERSION = "1.0"
SCHEMA_PATH = Path(__file__).with_name("schema") / "report.schema.json"


class TaskError(Exception):
    code = "TaskError"


def _need(task: TaskDecl, key: str) -> str:
    v = task.param(key)
    if v is None:
        raise TaskError(f"task '{task.describe()}' needs {key}=...")
    return v


def _module_or_ring(ws: Workspace, task: TaskDecl):
    """(ring, module, label): module=NAME, or ring=NAME meaning the free module of rank 1."""
    if task.param("module"):
        M = ws.module(task.param("module"))
        return M.ring, M, task.param("module")
    R = ws.ring(_need(task, "ring"))
    return R, R.free(1), R.name


def _verify(ws: Workspace, task: TaskDecl, seed: int, cap):
    if not task.args:
        raise TaskError("verify needs a statement id")
    sid = task.args[0]
    if sid == "Ex1.2":
        return [th.verify_example_1_2(task.int_param("p", 2))], {}
    if sid == "Thm1.3":
        R, M, label = _module_or_ring(ws, task)
        n = task.int_param("n", max(1, fb.smallest_admissible_power(R)))
        return [th.verify_theorem_1_3(R, M, n, label)], {}
    if sid in ("Lem2.2", "Seq2.2.1"):
        R, M, label = _module_or_ring(ws, task)
        other = task.param("other")
        N = ws.module(other) if other else R.free(1)
        label = f"{label},{other or R.name}"
        if sid == "Seq2.2.1":
            return [th.verify_sequence_2_2_1(R, M, N, label, upto=task.int_param("upto", th.SEQUENCE_DEGREE_BOUND))], {}
        return [th.verify_lemma_2_2(R, M, N, task.int_param("n", 1), label)], {}
    if sid == "Lem2.3":
        R, M, label = _module_or_ring(ws, task)
        n = task.int_param("n", max(1, fb.smallest_admissible_power(R)))
        return [th.verify_lemma_2_3(R, M, n, task.int_param("t", 1), label, cap=cap, seed=seed)], {}
    if sid == "Rem2.4":
        R = ws.ring(_need(task, "ring"))
        return [th.verify_remark_2_4(R, task.int_param("extra", 1), seed=seed)], {}
    if sid == "Fact2.5":
        R, M, label = _module_or_ring(ws, task)
        return [th.verify_fact_2_5(R, M, task.int_param("L", cap), label)], {}
    if sid == "Cor1.4":
        R = ws.ring(_need(task, "ring"))
        n = task.int_param("n")
        if n is None:
            return th.verify_corollary_1_4(R), {}
        return [th.verify_corollary_torsion(R, n, n)], {}
    if sid == "Cor2.6":
        R = ws.ring(_need(task, "ring"))
        return [th.verify_corollary_torsion(R, task.int_param("s", 1), int(_need(task, "n")))], {}
    raise TaskError(f"unknown statement id {sid!r}; known: {', '.join(th.STATEMENTS)}")


def _compute(ws: Workspace, task: TaskDecl, seed: int, cap) -> dict:
    kind = task.kind
    if kind == "betti":
        R, M, _ = _module_or_ring(ws, task)
        res = md.free_resolution(M, task.int_param("cap", cap))
        bt = res.betti_table()
        return {"betti": bt.to_dict(), "text": bt.to_text(), "is_complex": res.check_complex(),
                "is_minimal": res.check_minimal()}
    if kind == "pushforward":
        R, M, _ = _module_or_ring(ws, task)
        push = fb.frobenius_pushforward(M, task.int_param("n", 1))
        return {"pushforward": push.to_dict(), "free": push.module.nrels == 0}
    if kind == "functor":
        R, M, _ = _module_or_ring(ws, task)
        F = fb.frobenius_functor(M, task.int_param("n", 1))
        return {"module": F.to_dict(), "free": F.nrels == 0}
    if kind == "torsion":
        R, M, _ = _module_or_ring(ws, task)
        T = md.torsion_submodule(M)
        hs = T.torsion.hilbert_series
        hf = {str(d): v for d, v in hs.nonzero_function(max((e for e, _ in hs.numerator), default=0)
                                                          + sum(R.weights)).items()} if T.torsion.ngens else {}
        return {"torsion": T.torsion.to_dict(), "quotient": T.quotient.to_dict(), "hilbert_function": hf,
                "zero": T.is_zero()}
    if kind == "depth":
        R, M, _ = _module_or_ring(ws, task)
        d = md.depth(M)
        return {"depth": d, "dim": md.module_dim(M), "ring_dim": R.dim, "mcm": d == R.dim}
    if kind == "ext":
        R, M, _ = _module_or_ring(ws, task)
        N = ws.module(_need(task, "other"))
        E = md.ext(task.int_param("i", 1), M, N, cap=cap)
        return {"ext": E.to_dict(), "zero": E.ngens == 0}
    if kind == "invariants":
        R = ws.ring(_need(task, "ring"))
        return {"invariants": fb.ring_invariants(R, seed=seed).to_dict()}
    raise TaskError(f"unknown task kind {kind!r}")


def _random(ws: Workspace, task: TaskDecl, seed: int, cap):
    R = ws.ring(_need(task, "ring"))
    count = task.int_param("count", 10)
    n = max(1, fb.smallest_admissible_power(R))
    push = fb.frobenius_pushforward(R.free(1), n).module
    reports = []
    for s in range(seed, seed + count):
        M = th.random_module(R, s)
        N = [R.free(1), M, push][s % 3]
        label = f"random[{s}]"
        reports.append(th.verify_theorem_1_3(R, M, n, label))
        reports.append(th.verify_lemma_2_2(R, M, N, 1 + s % 2, label))
        reports.append(th.verify_lemma_2_3(R, M, n, 1, label, cap=cap, seed=seed))
    return reports


def run_task(ws: Workspace, index: int, task: TaskDecl, seed: int = 0, cap=None) -> dict:
    out = {"index": index, "line": task.line, "task": task.describe(), "kind": task.kind, "status": "pass",
           "reports": [], "result": {}}
    try:
        if task.kind == "verify":
            reports, result = _verify(ws, task, seed, cap)
        elif task.kind == "random":
            reports, result = _random(ws, task, seed, cap), {}
        else:
            reports, result = [], _compute(ws, task, seed, cap)
        out["reports"] = [r.to_dict() for r in reports]
        out["result"] = th._jsonable(result)
        out["status"] = _task_status(reports)
        out["_text"] = "\n".join(r.to_text() for r in reports) or out["result"].get("text") or json.dumps(
            out["result"], indent=1)
    except (SessionError, TaskError, md.ModuleError, fb.InternalInconsistency, fb.NonStabilized, ValueError,
            ArithmeticError, RuntimeError) as exc:
        out["status"] = "error"
        out["error"] = {"code": getattr(exc, "code", type(exc).__name__), "message": str(exc)}
        out["_text"] = f"error {out['error']['code']}: {exc}"
    except Exception as exc:  # pragma: no cover - unexpected engine failure
        out["status"] = "error"
        out["error"] = {"code": type(exc).__name__, "message": str(exc)}
        out["_text"] = traceback.format_exc()
    return out


def _task_status(reports) -> str:
    statuses = {r.status for r in reports}
    for s in ("counterexample", "hypotheses_fail"):
        if s in statuses:
            return s
    if statuses and statuses <= {"not_applicable"}:
        return "not_applicable"
    return "pass"


def exit_code(results: list[dict]) -> int:
    statuses = {r["status"] for r in results}
    if "counterexample" in statuses:
        return 2
    if "error" in statuses:
        return 3
    if "hypotheses_fail" in statuses:
        return 1
    return 0


def _worker(args) -> dict:
    text, index, seed, cap = args
    session = parse_session(text)
    return run_task(Workspace(session), index, session.tasks[index], seed, cap)


def run_session(text: str, seed: int = 0, cap=None, parallel: bool = False, name: str = "session",
                workers: int | None = None) -> tuple[int, dict, str]:
    """Run every task; returns (exit code, JSON report, text report)."""
    try:
        session: SessionFile = parse_session(text)
    except SessionError as exc:
        report = {"schema_version": SCHEMA_VERSION, "session": name, "seed": seed, "cap": cap, "exit_code": 3,
                  "tasks": [{"index": 0, "line": exc.line, "task": "parse", "kind": "parse", "status": "error",
                             "reports": [], "result": {}, "error": {"code": exc.code, "message": str(exc)}}]}
        return 3, report, f"error {exc.code}: {exc}\n"
    if parallel and len(session.tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, [(text, i, seed, cap) for i in range(len(session.tasks))]))
    else:
        ws = Workspace(session)
        results = [run_task(ws, i, t, seed, cap) for i, t in enumerate(session.tasks)]
    code = exit_code(results)
    texts = []
    for r in results:
        texts.append(f"== task {r['index']} (line {r['line']}): {r['task']} [{r['status']}]")
        texts.append(r.pop("_text", ""))
    report = {"schema_version": SCHEMA_VERSION, "session": name, "seed": seed, "cap": cap, "exit_code": code,
              "tasks": results}
    texts.append(f"exit code {code}")
    return code, report, "\n".join(texts) + "\n"


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
