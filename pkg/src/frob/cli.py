"""Command-line interface: ``frob run``, ``frob betti``, ``frob pushforward``, ``frob torsion``, ``frob verify``."""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from importlib import resources
from pathlib import Path

from . import cache
from .runner import dumps, run_session

BUILTIN_RINGS = """
ring R_A
  p = {p}
  vars = x, y
  ideal = x^2
end

ring R_B
  p = {p}
  vars = x, y
  ideal = x*y
end

ring R_C
  p = {p}
  vars = x, y, z
  weights = 3, 4, 5
  ideal = y^2 - x*z, x^3 - y*z, x^2*y - z^2
  minimal_prime = y^2 - x*z, x^3 - y*z, x^2*y - z^2
  reduced = true
end
"""


def _read_session(arg: str) -> tuple[str, str]:
    """A path, or the name of a bundled session (with or without .frob)."""
    path = Path(arg)
    if path.exists():
        return path.read_text(encoding="utf-8"), path.name
    name = arg if arg.endswith(".frob") else arg + ".frob"
    bundled = resources.files("frob") / "sessions" / name
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8"), name
    raise FileNotFoundError(f"no session file {arg!r} (and no bundled session {name!r})")


def _emit(code: int, report: dict, text: str, args) -> int:
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps(report), encoding="utf-8")
        (out / "report.txt").write_text(text, encoding="utf-8")
    if getattr(args, "json", False):
        sys.stdout.write(dumps(report))
    else:
        sys.stdout.write(text)
    return code


def _single_task(args, task_line: str) -> int:
    if args.session:
        text, name = _read_session(args.session)
        # keep declarations, replace tasks with the requested one
        body = "\n".join(ln for ln in text.splitlines() if not ln.strip().startswith("task"))
    else:
        body, name = BUILTIN_RINGS.format(p=args.p), "builtin"
    code, report, out = run_session(body + "\n" + task_line + "\n", seed=args.seed, cap=args.cap, name=name)
    return _emit(code, report, out, args)


def _target(args) -> str:
    if args.target is None:
        raise SystemExit("a module or ring name is required")
    return f"module={args.target}" if args.module_target else f"ring={args.target}"


def cmd_run(args) -> int:
    text, name = _read_session(args.session)
    code, report, out = run_session(text, seed=args.seed, cap=args.cap, parallel=args.parallel, name=name)
    return _emit(code, report, out, args)


def cmd_betti(args) -> int:
    return _single_task(args, f"task betti {_target(args)}")


def cmd_pushforward(args) -> int:
    return _single_task(args, f"task pushforward {_target(args)} n={args.n}")


def cmd_torsion(args) -> int:
    return _single_task(args, f"task torsion {_target(args)}")


def cmd_verify(args) -> int:
    params = list(args.params)
    if args.statement == "Ex1.2" and not any(p.startswith("p=") for p in params):
        params.append(f"p={args.p}")
    return _single_task(args, " ".join(["task verify", args.statement, *params]))


def cmd_cache(args) -> int:
    d = cache.cache_dir()
    if d is None:
        print("cache disabled (set FROB_CACHE_DIR)")
        return 0
    if args.action == "clear":
        if d.exists():
            shutil.rmtree(d)
        print(f"cleared {d}")
    else:
        n = len(list(d.glob("*.gb"))) if d.exists() else 0
        print(json.dumps({"dir": str(d), "entries": n}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frob", description="Frobenius functor and pushforward engine")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, session_required=False):
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized searches and modules")
        sp.add_argument("--cap", type=int, default=None, help="resolution cap (default dim R + 4)")
        sp.add_argument("--out", default=None, help="directory for report.json and report.txt")
        sp.add_argument("--json", action="store_true", help="print the JSON report instead of text")
        if not session_required:
            sp.add_argument("--session", default=None, help="session file with declarations")
            sp.add_argument("--p", type=int, default=2, help="characteristic of the built-in rings R_A, R_B, R_C")

    sp = sub.add_parser("run", help="run every task of a session file")
    sp.add_argument("session")
    sp.add_argument("--parallel", action="store_true", help="run tasks in worker processes")
    common(sp, session_required=True)
    sp.set_defaults(func=cmd_run)

    for name, func, helptext in (
        ("betti", cmd_betti, "Betti table of a module"),
        ("pushforward", cmd_pushforward, "presentation of phi^n M"),
        ("torsion", cmd_torsion, "torsion submodule"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("target", nargs="?", help="module name (or ring name with --ring)")
        sp.add_argument("--ring", dest="module_target", action="store_false",
                        help="treat TARGET as a ring and use its free module of rank 1")
        if name == "pushforward":
            sp.add_argument("-n", type=int, default=1, help="Frobenius power")
        common(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("verify", help="verify one statement on one instance")
    sp.add_argument("statement", help="Thm1.3, Ex1.2, Lem2.2, Seq2.2.1, Lem2.3, Rem2.4, Fact2.5, Cor1.4, Cor2.6")
    sp.add_argument("params", nargs="*", help="key=value task parameters, e.g. module=M n=1")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("cache", help="inspect or clear the Groebner basis cache")
    sp.add_argument("action", choices=["info", "clear"])
    sp.set_defaults(func=cmd_cache)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
