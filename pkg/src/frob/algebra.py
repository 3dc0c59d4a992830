"""Exact arithmetic over prime fields: field elements, weighted monomials and
sparse multivariate polynomials.

Polynomials are stored as ``{exponent_tuple: coefficient}`` dictionaries with
coefficients in ``range(1, p)``.  The heavier machinery (Groebner bases,
modules) works on those raw dictionaries directly; :class:`Polynomial` is the
public, immutable wrapper.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

MAX_VARIABLES = 8
ORDERS = ("wdegrevlex", "wdeglex", "lex")


class AlgebraError(Exception):
    code = "AlgebraError"


class DivisionByZero(AlgebraError, ZeroDivisionError):
    code = "DivisionByZero"


class RingMismatch(AlgebraError, ValueError):
    code = "RingMismatch"


class CompositeCharacteristic(AlgebraError, ValueError):
    code = "CompositeCharacteristic"


class BadFrobeniusPower(AlgebraError, ValueError):
    code = "BadFrobeniusPower"


class PolynomialSyntaxError(AlgebraError, ValueError):
    code = "SyntaxError"

    def __init__(self, message: str, column: int):
        super().__init__(f"{message} (column {column})")
        self.column = column


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def is_power_of(q: int, p: int) -> bool:
    if q < 1:
        return False
    while q % p == 0:
        q //= p
    return q == 1


def frobenius_exponent(q: int, p: int) -> int:
    """Return n with p**n == q."""
    n = 0
    while q > 1:
        q //= p
        n += 1
    return n


@dataclass(frozen=True)
class FieldElement:
    """An element of F_p."""

    value: int
    p: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.p)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.p != self.p:
                raise RingMismatch(f"F_{self.p} vs F_{other.p}")
            return other.value
        return int(other)

    def __add__(self, other):
        return FieldElement(self.value + self._coerce(other), self.p)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.value - self._coerce(other), self.p)

    def __rsub__(self, other):
        return FieldElement(self._coerce(other) - self.value, self.p)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other), self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.p)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise DivisionByZero(f"0 has no inverse in F_{self.p}")
        return FieldElement(pow(self.value, -1, self.p), self.p)

    def __truediv__(self, other):
        return self * FieldElement(self._coerce(other), self.p).inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return FieldElement(pow(self.value, n, self.p), self.p)

    def __int__(self):
        return self.value

    def __bool__(self):
        return self.value != 0


# ---------------------------------------------------------------- monomials


def mono_mul(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def mono_divides(a: tuple, b: tuple) -> bool:
    return all(x <= y for x, y in zip(a, b))


def mono_div(b: tuple, a: tuple) -> tuple:
    return tuple(y - x for x, y in zip(a, b))


def mono_lcm(a: tuple, b: tuple) -> tuple:
    return tuple(max(x, y) for x, y in zip(a, b))


def mono_gcd(a: tuple, b: tuple) -> tuple:
    return tuple(min(x, y) for x, y in zip(a, b))


def wdeg(mono: tuple, weights: tuple) -> int:
    return sum(e * w for e, w in zip(mono, weights))


@lru_cache(maxsize=None)
def _order_key_fn(weights: tuple, order: str):
    if order == "wdegrevlex":
        def key(m):
            return (sum(e * w for e, w in zip(m, weights)), tuple(-e for e in reversed(m)))
    elif order == "wdeglex":
        def key(m):
            return (sum(e * w for e, w in zip(m, weights)), m)
    else:
        def key(m):
            return (0, m)
    return key


def monomials_of_degree(weights: tuple, d: int) -> list[tuple]:
    """All exponent vectors of weighted degree exactly d."""
    return list(_monomials_of_degree(tuple(weights), d))


@lru_cache(maxsize=4096)
def _monomials_of_degree(weights: tuple, d: int) -> tuple:
    if d < 0:
        return ()
    if not weights:
        return ((),) if d == 0 else ()
    w, rest = weights[0], weights[1:]
    out = []
    for e in range(d // w, -1, -1):
        for tail in _monomials_of_degree(rest, d - e * w):
            out.append((e,) + tail)
    return tuple(out)


# ---------------------------------------------------------------- rings


@dataclass(frozen=True)
class PolyRing:
    """Weighted polynomial ring F_p[x_1..x_m] with a fixed monomial order."""

    p: int
    variables: tuple
    weights: tuple = None
    order: str = "wdegrevlex"
    _key: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not is_prime(self.p):
            raise CompositeCharacteristic(f"characteristic {self.p} is not prime")
        variables = tuple(self.variables)
        if not variables:
            raise ValueError("a ring needs at least one variable")
        if len(variables) > MAX_VARIABLES:
            raise ValueError(f"at most {MAX_VARIABLES} variables are supported")
        if len(set(variables)) != len(variables):
            raise ValueError("variable names must be distinct")
        for v in variables:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", v):
                raise ValueError(f"bad variable name {v!r}")
        weights = tuple(self.weights) if self.weights is not None else (1,) * len(variables)
        if len(weights) != len(variables) or any(int(w) < 1 for w in weights):
            raise ValueError("weights must be positive integers, one per variable")
        if self.order not in ORDERS:
            raise ValueError(f"unknown monomial order {self.order!r}")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "weights", tuple(int(w) for w in weights))
        object.__setattr__(self, "_key", _order_key_fn(self.weights, self.order))

    @property
    def nvars(self) -> int:
        return len(self.variables)

    def sort_key(self, mono: tuple):
        return self._key(mono)

    def degree(self, mono: tuple) -> int:
        return wdeg(mono, self.weights)

    def zero_mono(self) -> tuple:
        return (0,) * self.nvars

    def fingerprint(self) -> str:
        text = f"{self.p}|{','.join(self.variables)}|{self.weights}|{self.order}"
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    # constructors
    def __call__(self, obj) -> "Polynomial":
        return self.poly(obj)

    def poly(self, obj) -> "Polynomial":
        if isinstance(obj, Polynomial):
            if obj.ring != self:
                raise RingMismatch("polynomial belongs to another ring")
            return obj
        if isinstance(obj, str):
            return parse_polynomial(self, obj)
        if isinstance(obj, int):
            return Polynomial(self, {self.zero_mono(): obj})
        if isinstance(obj, Mapping):
            return Polynomial(self, obj)
        raise TypeError(f"cannot build a polynomial from {type(obj).__name__}")

    def gens(self) -> list["Polynomial"]:
        out = []
        for i in range(self.nvars):
            m = [0] * self.nvars
            m[i] = 1
            out.append(Polynomial(self, {tuple(m): 1}))
        return out

    def monomial(self, exponents: Iterable[int], coeff: int = 1) -> "Polynomial":
        return Polynomial(self, {tuple(exponents): coeff})

    def one(self) -> "Polynomial":
        return Polynomial(self, {self.zero_mono(): 1})

    def zero(self) -> "Polynomial":
        return Polynomial(self, {})

    def field(self, value: int) -> FieldElement:
        return FieldElement(value, self.p)


# ------------------------------------------------------- raw dict arithmetic


def pd_add(f: dict, g: dict, p: int, scale: int = 1) -> dict:
    """f + scale*g."""
    out = dict(f)
    for m, c in g.items():
        v = (out.get(m, 0) + scale * c) % p
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def pd_mul(f: dict, g: dict, p: int) -> dict:
    out: dict = {}
    for m1, c1 in f.items():
        for m2, c2 in g.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            v = (out.get(m, 0) + c1 * c2) % p
            if v:
                out[m] = v
            else:
                del out[m]
    return out


def pd_scale(f: dict, c: int, mono: tuple | None, p: int) -> dict:
    c %= p
    if not c:
        return {}
    if mono is None:
        return {m: (v * c) % p for m, v in f.items()}
    return {tuple(a + b for a, b in zip(m, mono)): (v * c) % p for m, v in f.items()}


def pd_pow(f: dict, n: int, p: int, nvars: int) -> dict:
    result = {(0,) * nvars: 1}
    base = f
    while n:
        if n & 1:
            result = pd_mul(result, base, p)
        n >>= 1
        if n:
            base = pd_mul(base, base, p)
    return result


def pd_frobenius(f: dict, q: int) -> dict:
    """f**q for q a power of p: coefficients are fixed, exponents scale by q."""
    return {tuple(q * e for e in m): c for m, c in f.items()}


# ------------------------------------------------------------- polynomials


class Polynomial:
    """Immutable sparse polynomial over a :class:`PolyRing`."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: PolyRing, terms: Mapping):
        p = ring.p
        clean = {}
        for m, c in terms.items():
            m = tuple(m)
            if len(m) != ring.nvars or any(e < 0 for e in m):
                raise ValueError(f"bad exponent vector {m}")
            c = int(c) % p
            if c:
                clean[m] = (clean.get(m, 0) + c) % p
                if not clean[m]:
                    del clean[m]
        self.ring = ring
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, ring: PolyRing, terms: dict) -> "Polynomial":
        obj = cls.__new__(cls)
        obj.ring = ring
        obj.terms = terms
        obj._hash = None
        return obj

    def _check(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.ring != self.ring:
                raise RingMismatch("operands live in different rings")
            return other
        if isinstance(other, (int, FieldElement)):
            return self.ring.poly(int(other))
        return NotImplemented

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return Polynomial._raw(self.ring, pd_add(self.terms, other.terms, self.ring.p))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.ring, pd_scale(self.terms, -1, None, self.ring.p))

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return Polynomial._raw(self.ring, pd_add(self.terms, other.terms, self.ring.p, -1))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return Polynomial._raw(self.ring, pd_mul(self.terms, other.terms, self.ring.p))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not supported")
        return Polynomial._raw(self.ring, pd_pow(self.terms, n, self.ring.p, self.ring.nvars))

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ring.poly(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring.p, self.ring.variables, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or set(self.terms) == {self.ring.zero_mono()}

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda t: self.ring.sort_key(t[0]), reverse=True)

    def leading_monomial(self) -> tuple:
        if not self.terms:
            raise ValueError("zero polynomial has no leading monomial")
        return max(self.terms, key=self.ring.sort_key)

    def leading_coefficient(self) -> int:
        return self.terms[self.leading_monomial()]

    def degree(self) -> int:
        """Weighted degree of the highest term (-1 for zero)."""
        if not self.terms:
            return -1
        return max(self.ring.degree(m) for m in self.terms)

    def is_homogeneous(self) -> bool:
        return len({self.ring.degree(m) for m in self.terms}) <= 1

    def monic(self) -> "Polynomial":
        if not self.terms:
            return self
        inv = pow(self.leading_coefficient(), -1, self.ring.p)
        return Polynomial._raw(self.ring, pd_scale(self.terms, inv, None, self.ring.p))

    def entry_power(self, n: int) -> "Polynomial":
        return entry_power(self, n)

    def __repr__(self):
        return f"Polynomial({self})"

    def __str__(self):
        return format_terms(self.ring, self.terms)


def format_terms(ring: PolyRing, terms: Mapping) -> str:
    """Canonical text form, highest term first; coefficients in (-p/2, p/2]."""
    if not terms:
        return "0"
    p = ring.p
    pieces = []
    for m, c in sorted(terms.items(), key=lambda t: ring.sort_key(t[0]), reverse=True):
        sign = 1
        if c > p // 2 and p > 2:
            c, sign = p - c, -1
        factors = []
        for v, e in zip(ring.variables, m):
            if e == 1:
                factors.append(v)
            elif e > 1:
                factors.append(f"{v}^{e}")
        if not factors:
            body = str(c)
        elif c == 1:
            body = "*".join(factors)
        else:
            body = f"{c}*" + "*".join(factors)
        pieces.append((sign, body))
    out = ("-" if pieces[0][0] < 0 else "") + pieces[0][1]
    for sign, body in pieces[1:]:
        out += (" - " if sign < 0 else " + ") + body
    return out


def entry_power(f: Polynomial, n: int) -> Polynomial:
    """Return f**(p**n), computed termwise (Frobenius fixes F_p coefficients)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    q = f.ring.p ** n
    return Polynomial._raw(f.ring, pd_frobenius(f.terms, q))


# ------------------------------------------------------------------ parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*^()]))")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
            raise PolynomialSyntaxError(f"unexpected character {text[col - 1]!r}", col)
        start = m.start(m.lastindex) + 1
        if m.group(1):
            tokens.append(("int", int(m.group(1)), start))
        elif m.group(2):
            tokens.append(("name", m.group(2), start))
        else:
            op = m.group(3)
            tokens.append(("op", "^" if op == "**" else op, start))
        pos = m.end()
    tokens.append(("end", None, len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, ring: PolyRing, text: str):
        self.ring = ring
        self.tokens = _tokenize(text)
        self.i = 0
        self.index = {v: k for k, v in enumerate(ring.variables)}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            raise PolynomialSyntaxError(f"expected {op!r}", tok[2])

    def parse(self) -> dict:
        f = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise PolynomialSyntaxError(f"unexpected token {tok[1]!r}", tok[2])
        return f

    def expr(self) -> dict:
        p = self.ring.p
        sign = 1
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            sign = -1 if tok[1] == "-" else 1
        f = pd_scale(self.term(), sign, None, p)
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] in "+-":
                self.take()
                f = pd_add(f, self.term(), p, -1 if tok[1] == "-" else 1)
            else:
                return f

    def term(self) -> dict:
        f = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            f = pd_mul(f, self.factor(), self.ring.p)
        return f

    def factor(self) -> dict:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "int":
                raise PolynomialSyntaxError("exponent must be a non-negative integer", tok[2])
            base = pd_pow(base, tok[1], self.ring.p, self.ring.nvars)
        return base

    def atom(self) -> dict:
        tok = self.take()
        nv = self.ring.nvars
        if tok[0] == "int":
            c = tok[1] % self.ring.p
            return {(0,) * nv: c} if c else {}
        if tok[0] == "name":
            if tok[1] not in self.index:
                raise UnknownVariable(tok[1], tok[2])
            m = [0] * nv
            m[self.index[tok[1]]] = 1
            return {tuple(m): 1}
        if tok[0] == "op" and tok[1] == "(":
            f = self.expr()
            self.expect_op(")")
            return f
        if tok[0] == "op" and tok[1] == "-":
            return pd_scale(self.factor(), -1, None, self.ring.p)
        raise PolynomialSyntaxError("expected a number, variable or '('", tok[2])


class UnknownVariable(PolynomialSyntaxError):
    code = "UnknownVariable"

    def __init__(self, name: str, column: int):
        super().__init__(f"unknown variable {name!r}", column)
        self.name = name


def parse_polynomial(ring: PolyRing, text: str) -> Polynomial:
    """Parse ``x^2*y - 3*z`` style text; integer coefficients are reduced mod p."""
    return Polynomial._raw(ring, _Parser(ring, text).parse())
