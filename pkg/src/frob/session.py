"""Session files: a small line-oriented language declaring rings, modules and tasks.

Grammar (one statement per line, ``#`` starts a comment)::

    session   := (ring | module | task)*
    ring      := "ring" NAME NL ring_item* "end"
    ring_item := "p" "=" INT
               | "vars" "=" NAME ("," NAME)*
               | "weights" "=" INT ("," INT)*
               | "ideal" "=" POLY ("," POLY)*
               | "minimal_prime" "=" POLY ("," POLY)*      (repeatable)
               | "reduced" "=" ("true" | "false")
    module    := "module" NAME "over" NAME NL module_item* "end"
    module_item := "gens" "=" INT
               | "degrees" "=" RATIONAL ("," RATIONAL)*
               | "column" "=" POLY ("," POLY)*              (repeatable, one entry per generator)
    task      := "task" WORD (WORD | KEY "=" VALUE)*

The canonical form produced by :func:`format_session` parses back to an equal
:class:`SessionFile`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import (
    AlgebraError,
    CompositeCharacteristic,
    PolynomialSyntaxError,
    PolyRing,
    UnknownVariable,
    is_prime,
    parse_polynomial,
)
from .modules import InhomogeneousRelation, ModulePresentation, QuotientRing

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*$")


class SessionError(Exception):
    code = "SessionError"

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        loc = f"line {line}, column {column}: " if line else ""
        super().__init__(loc + message)


class SessionSyntaxError(SessionError):
    code = "SyntaxError"


class UnknownName(SessionError):
    code = "UnknownName"


class DuplicateName(SessionError):
    code = "DuplicateName"


class SemanticError(SessionError):
    """Wraps an algebra error (unknown variable, composite p, inhomogeneous relation)."""

    def __init__(self, code: str, message: str, line: int, column: int):
        self.code = code
        super().__init__(message, line, column)


@dataclass
class RingDecl:
    name: str
    p: int
    variables: tuple
    weights: tuple
    ideal: tuple  # canonical polynomial strings
    minimal_primes: tuple | None = None  # tuple of tuples of strings
    reduced: bool | None = None
    line: int = field(default=0, compare=False)

    def build(self) -> QuotientRing:
        P = PolyRing(self.p, self.variables, self.weights)
        primes = None
        if self.minimal_primes is not None:
            primes = [[P.poly(g) for g in q] for q in self.minimal_primes]
        return QuotientRing(P, [P.poly(g) for g in self.ideal], minimal_primes=primes, reduced=self.reduced,
                            name=self.name)


@dataclass
class ModuleDecl:
    name: str
    ring: str
    degrees: tuple  # Fractions
    columns: tuple  # tuple of tuples of canonical strings
    line: int = field(default=0, compare=False)

    def build(self, R: QuotientRing) -> ModulePresentation:
        rows = [[col[j] for col in self.columns] for j in range(len(self.degrees))]
        if not self.columns:
            return R.free(len(self.degrees), self.degrees)
        return ModulePresentation.from_matrix(R, rows, list(self.degrees))


@dataclass
class TaskDecl:
    kind: str
    args: tuple  # positional words
    params: tuple  # sorted (key, value) pairs
    line: int = field(default=0, compare=False)

    def param(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    def int_param(self, key: str, default=None):
        v = self.param(key)
        if v is None:
            return default
        try:
            return int(v)
        except ValueError:
            raise SessionSyntaxError(f"parameter {key} must be an integer, got {v!r}", self.line, 1) from None

    def describe(self) -> str:
        parts = [self.kind, *self.args, *(f"{k}={v}" for k, v in self.params)]
        return " ".join(parts)


@dataclass
class SessionFile:
    rings: tuple
    modules: tuple
    tasks: tuple

    def ring(self, name: str) -> RingDecl:
        for r in self.rings:
            if r.name == name:
                return r
        raise UnknownName(f"undeclared ring {name!r}")

    def module(self, name: str) -> ModuleDecl:
        for m in self.modules:
            if m.name == name:
                return m
        raise UnknownName(f"undeclared module {name!r}")


# ------------------------------------------------------------ parsing


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _split_list(text: str) -> list[tuple[str, int]]:
    """Split on commas at parenthesis depth 0; returns (item, offset) pairs."""
    items, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            items.append((text[start:i], start))
            start = i + 1
    items.append((text[start:], start))
    out = []
    for item, off in items:
        stripped = item.strip()
        out.append((stripped, off + (len(item) - len(item.lstrip()))))
    return out


def _key_value(raw: str, lineno: int) -> tuple[str, str, int]:
    body = raw.strip()
    indent = len(raw) - len(raw.lstrip())
    if "=" not in body:
        raise SessionSyntaxError(f"expected 'key = value', got {body!r}", lineno, indent + 1)
    key, _, value = body.partition("=")
    key = key.strip()
    col = indent + body.index("=") + 2 + (len(value) - len(value.lstrip()))
    return key, value.strip(), col


def _parse_poly(ring: PolyRing, text: str, lineno: int, col: int):
    if not text:
        raise SessionSyntaxError("empty polynomial", lineno, col)
    try:
        return parse_polynomial(ring, text)
    except UnknownVariable as exc:
        raise SemanticError("UnknownVariable", str(exc), lineno, col + exc.column - 1) from None
    except PolynomialSyntaxError as exc:
        raise SessionSyntaxError(str(exc), lineno, col + exc.column - 1) from None


def _parse_int(text: str, lineno: int, col: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise SessionSyntaxError(f"expected an integer, got {text!r}", lineno, col) from None


def _check_name(name: str, lineno: int, col: int) -> str:
    if not NAME_RE.match(name):
        raise SessionSyntaxError(f"invalid name {name!r}", lineno, col)
    return name


def parse_session(text: str) -> SessionFile:
    """Parse and validate a session; errors carry line and column."""
    lines = text.splitlines()
    rings: list[RingDecl] = []
    modules: list[ModuleDecl] = []
    tasks: list[TaskDecl] = []
    ring_objs: dict[str, PolyRing] = {}
    i = 0
    while i < len(lines):
        lineno = i + 1
        raw = _strip_comment(lines[i])
        words = raw.split()
        if not words:
            i += 1
            continue
        col0 = len(raw) - len(raw.lstrip()) + 1
        head = words[0]
        if head == "ring":
            if len(words) != 2:
                raise SessionSyntaxError("expected 'ring NAME'", lineno, col0)
            name = _check_name(words[1], lineno, col0 + 5)
            if name in ring_objs or any(m.name == name for m in modules):
                raise DuplicateName(f"name {name!r} declared twice", lineno, col0 + 5)
            body, i = _block(lines, i + 1, lineno)
            decl, P = _ring_block(name, body, lineno)
            rings.append(decl)
            ring_objs[name] = P
            continue
        if head == "module":
            if len(words) != 4 or words[2] != "over":
                raise SessionSyntaxError("expected 'module NAME over RING'", lineno, col0)
            name = _check_name(words[1], lineno, col0 + 7)
            if name in ring_objs or any(m.name == name for m in modules):
                raise DuplicateName(f"name {name!r} declared twice", lineno, col0 + 7)
            rname = words[3]
            if rname not in ring_objs:
                raise UnknownName(f"undeclared ring {rname!r}", lineno, raw.index(rname, col0 + 7) + 1)
            body, i = _block(lines, i + 1, lineno)
            rdecl = next(r for r in rings if r.name == rname)
            modules.append(_module_block(name, rname, ring_objs[rname], rdecl, body, lineno))
            continue
        if head == "task":
            if len(words) < 2:
                raise SessionSyntaxError("expected 'task KIND ...'", lineno, col0)
            args, params = [], {}
            for w in words[2:]:
                if "=" in w:
                    k, _, v = w.partition("=")
                    if not k or not v:
                        raise SessionSyntaxError(f"malformed parameter {w!r}", lineno, raw.index(w) + 1)
                    params[k] = v
                else:
                    args.append(w)
            task = TaskDecl(words[1], tuple(args), tuple(sorted(params.items())), lineno)
            _check_task_names(task, ring_objs, modules, lineno)
            tasks.append(task)
            i += 1
            continue
        raise SessionSyntaxError(f"unexpected {head!r}", lineno, col0)
    return SessionFile(tuple(rings), tuple(modules), tuple(tasks))


def _block(lines: list[str], start: int, open_line: int) -> tuple[list[tuple[int, str]], int]:
    body = []
    i = start
    while i < len(lines):
        raw = _strip_comment(lines[i])
        if raw.strip() == "end":
            return body, i + 1
        if raw.strip():
            first = raw.split()[0]
            if first in ("ring", "module", "task"):
                break
            body.append((i + 1, raw))
        i += 1
    raise SessionSyntaxError("block is missing 'end'", open_line, 1)


def _ring_block(name: str, body, lineno: int) -> tuple[RingDecl, PolyRing]:
    items: dict = {}
    primes_raw = []
    for ln, raw in body:
        key, value, col = _key_value(raw, ln)
        if key == "minimal_prime":
            primes_raw.append((ln, value, col))
            continue
        if key not in ("p", "vars", "weights", "ideal", "reduced"):
            raise SessionSyntaxError(f"unknown ring field {key!r}", ln, col)
        if key in items:
            raise SessionSyntaxError(f"field {key!r} given twice", ln, col)
        items[key] = (ln, value, col)
    for req in ("p", "vars"):
        if req not in items:
            raise SessionSyntaxError(f"ring {name} is missing '{req} = ...'", lineno, 1)
    ln, value, col = items["p"]
    p = _parse_int(value, ln, col)
    if not is_prime(p):
        raise SemanticError("CompositeCharacteristic", f"characteristic {p} is not prime", ln, col)
    ln, value, col = items["vars"]
    variables = []
    for v, off in _split_list(value):
        if not NAME_RE.match(v):
            raise SessionSyntaxError(f"invalid variable name {v!r}", ln, col + off)
        variables.append(v)
    if "weights" in items:
        ln, value, col = items["weights"]
        weights = tuple(_parse_int(w, ln, col + off) for w, off in _split_list(value))
    else:
        weights = (1,) * len(variables)
    try:
        P = PolyRing(p, tuple(variables), weights)
    except CompositeCharacteristic as exc:
        raise SemanticError("CompositeCharacteristic", str(exc), *items["p"][::2]) from None
    except (AlgebraError, ValueError) as exc:
        ln = items.get("weights", items["vars"])[0]
        raise SemanticError(getattr(exc, "code", "InvalidRing"), str(exc), ln, 1) from None
    ideal = []
    if "ideal" in items:
        ln, value, col = items["ideal"]
        if value:
            for g, off in _split_list(value):
                f = _parse_poly(P, g, ln, col + off)
                if not f.is_homogeneous():
                    raise SemanticError("InhomogeneousRelation", f"ideal generator {g!r} is not homogeneous",
                                        ln, col + off)
                if f:
                    ideal.append(str(f))
    primes = None
    if primes_raw:
        primes = []
        for ln, value, col in primes_raw:
            primes.append(tuple(str(_parse_poly(P, g, ln, col + off)) for g, off in _split_list(value)))
        primes = tuple(primes)
    reduced = None
    if "reduced" in items:
        ln, value, col = items["reduced"]
        if value not in ("true", "false"):
            raise SessionSyntaxError("reduced must be true or false", ln, col)
        reduced = value == "true"
    return RingDecl(name, p, tuple(variables), weights, tuple(ideal), primes, reduced, lineno), P


def _module_block(name: str, rname: str, P: PolyRing, rdecl: RingDecl, body, lineno: int) -> ModuleDecl:
    ngens = None
    degrees = None
    columns = []
    for ln, raw in body:
        key, value, col = _key_value(raw, ln)
        if key == "gens":
            ngens = _parse_int(value, ln, col)
        elif key == "degrees":
            try:
                degrees = tuple(Fraction(d) for d, _ in _split_list(value))
            except ValueError:
                raise SessionSyntaxError(f"bad degree list {value!r}", ln, col) from None
        elif key == "column":
            entries = []
            for g, off in _split_list(value):
                entries.append((_parse_poly(P, g, ln, col + off), ln, col + off))
            columns.append(entries)
        else:
            raise SessionSyntaxError(f"unknown module field {key!r}", ln, col)
    if degrees is None:
        if ngens is None:
            if not columns:
                raise SessionSyntaxError(f"module {name} needs 'gens', 'degrees' or a column", lineno, 1)
            ngens = len(columns[0])
        degrees = (Fraction(0),) * ngens
    elif ngens is not None and ngens != len(degrees):
        raise SessionSyntaxError(f"module {name}: gens = {ngens} but {len(degrees)} degrees", lineno, 1)
    n = len(degrees)
    canon = []
    for entries in columns:
        if len(entries) != n:
            ln = entries[0][1]
            raise SessionSyntaxError(f"column has {len(entries)} entries, expected {n}", ln, entries[0][2])
        cdeg = None
        for j, (f, ln, col) in enumerate(entries):
            if not f:
                continue
            if not f.is_homogeneous():
                raise SemanticError("InhomogeneousRelation", f"entry {f} is not homogeneous", ln, col)
            d = f.degree() + degrees[j]
            if cdeg is None:
                cdeg = d
            elif d != cdeg:
                raise SemanticError("InhomogeneousRelation", "column entries have inconsistent degrees", ln, col)
        canon.append(tuple(str(f) for f, _, _ in entries))
    return ModuleDecl(name, rname, degrees, tuple(canon), lineno)


TASK_KINDS = ("verify", "betti", "pushforward", "torsion", "depth", "invariants", "random", "functor", "ext")


def _check_task_names(task: TaskDecl, ring_objs: dict, modules: list, lineno: int) -> None:
    if task.kind not in TASK_KINDS:
        raise SessionSyntaxError(f"unknown task kind {task.kind!r}", lineno, 6)
    module_names = {m.name for m in modules}
    for key, value in task.params:
        if key in ("module", "other") and value not in module_names:
            raise UnknownName(f"undeclared module {value!r}", lineno, 1)
        if key == "ring" and value not in ring_objs:
            raise UnknownName(f"undeclared ring {value!r}", lineno, 1)


# ------------------------------------------------------------ printing


def _fmt_frac(d: Fraction) -> str:
    return str(d)


def format_session(session: SessionFile) -> str:
    """Canonical text form; parse_session(format_session(s)) == s."""
    out = []
    for r in session.rings:
        out.append(f"ring {r.name}")
        out.append(f"  p = {r.p}")
        out.append(f"  vars = {', '.join(r.variables)}")
        out.append(f"  weights = {', '.join(map(str, r.weights))}")
        out.append(f"  ideal = {', '.join(r.ideal)}")
        for q in r.minimal_primes or ():
            out.append(f"  minimal_prime = {', '.join(q)}")
        if r.reduced is not None:
            out.append(f"  reduced = {'true' if r.reduced else 'false'}")
        out.append("end")
        out.append("")
    for m in session.modules:
        out.append(f"module {m.name} over {m.ring}")
        out.append(f"  gens = {len(m.degrees)}")
        out.append(f"  degrees = {', '.join(_fmt_frac(d) for d in m.degrees)}")
        for col in m.columns:
            out.append(f"  column = {', '.join(col)}")
        out.append("end")
        out.append("")
    for t in session.tasks:
        out.append(f"task {t.describe()}")
    return "\n".join(out).rstrip() + "\n"


# ------------------------------------------------------------ building


class Workspace:
    """Materialized rings and modules of a session, built lazily and memoized."""

    def __init__(self, session: SessionFile):
        self.session = session
        self._rings: dict = {}
        self._modules: dict = {}

    def ring(self, name: str) -> QuotientRing:
        if name not in self._rings:
            self._rings[name] = self.session.ring(name).build()
        return self._rings[name]

    def module(self, name: str) -> ModulePresentation:
        if name not in self._modules:
            decl = self.session.module(name)
            try:
                self._modules[name] = decl.build(self.ring(decl.ring))
            except InhomogeneousRelation as exc:
                raise SemanticError("InhomogeneousRelation", str(exc), decl.line, 1) from None
        return self._modules[name]
