"""Hilbert series of graded quotients P^n / U via monomial initial modules."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Iterable, Mapping

from .algebra import PolyRing, mono_divides


def _minimalize(monos: Iterable[tuple]) -> tuple:
    ms = sorted(set(monos), key=lambda m: (sum(m), m))
    out = []
    for m in ms:
        if not any(mono_divides(g, m) for g in out):
            out.append(m)
    return tuple(sorted(out))


def _poly_add(a: dict, b: dict, shift: int = 0, sign: int = 1) -> dict:
    out = dict(a)
    for e, c in b.items():
        v = out.get(e + shift, 0) + sign * c
        if v:
            out[e + shift] = v
        else:
            out.pop(e + shift, None)
    return out


@lru_cache(maxsize=20000)
def _numerator(gens: tuple, weights: tuple) -> tuple:
    """K-polynomial of P/J (J monomial): HS = N(t) / prod(1 - t^w)."""
    if not gens:
        return ((0, 1),)
    nv = len(weights)
    if any(not any(m) for m in gens):
        return ()
    mixed = [m for m in gens if sum(1 for e in m if e) > 1]
    if not mixed:
        poly = {0: 1}
        for m in gens:
            d = sum(e * w for e, w in zip(m, weights))
            poly = _poly_add(poly, poly, d, -1)
        return tuple(sorted(poly.items()))
    counts = [sum(1 for m in mixed if m[i]) for i in range(nv)]
    i = max(range(nv), key=lambda k: (counts[k], -k))
    exps = sorted(m[i] for m in mixed if m[i])
    e = exps[len(exps) // 2]
    piv = tuple(e if k == i else 0 for k in range(nv))
    added = _minimalize(gens + (piv,))
    quot = _minimalize(tuple(tuple(max(a - b, 0) for a, b in zip(m, piv)) for m in gens))
    d = e * weights[i]
    poly = _poly_add(dict(_numerator(added, weights)), dict(_numerator(quot, weights)), d)
    return tuple(sorted(poly.items()))


@lru_cache(maxsize=None)
def _monomial_counts(weights: tuple, upto: int) -> tuple:
    counts = [0] * (upto + 1)
    counts[0] = 1
    for w in weights:
        for k in range(w, upto + 1):
            counts[k] += counts[k - w]
    return tuple(counts)


def count_monomials(weights: tuple, d) -> int:
    d = Fraction(d)
    if d < 0 or d.denominator != 1:
        return 0
    d = int(d)
    size = max(64, 1 << (d.bit_length() + 1))
    return _monomial_counts(tuple(weights), size)[d]


@dataclass(frozen=True)
class HilbertSeries:
    """N(t) / prod_i (1 - t^{w_i}) with N a Laurent polynomial in rational exponents."""

    numerator: tuple  # sorted ((Fraction exponent, int coeff), ...)
    weights: tuple

    @classmethod
    def from_dict(cls, num: Mapping, weights) -> "HilbertSeries":
        clean = {Fraction(e): c for e, c in num.items() if c}
        return cls(tuple(sorted(clean.items())), tuple(weights))

    def as_dict(self) -> dict:
        return dict(self.numerator)

    def is_zero(self) -> bool:
        return not self.numerator

    def __add__(self, other: "HilbertSeries") -> "HilbertSeries":
        if self.weights != other.weights:
            raise ValueError("series over different weight systems")
        d = self.as_dict()
        for e, c in other.numerator:
            d[e] = d.get(e, 0) + c
        return HilbertSeries.from_dict(d, self.weights)

    def shift(self, a) -> "HilbertSeries":
        a = Fraction(a)
        return HilbertSeries.from_dict({e + a: c for e, c in self.numerator}, self.weights)

    def coefficient(self, d) -> int:
        d = Fraction(d)
        return sum(c * count_monomials(self.weights, d - e) for e, c in self.numerator)

    def classes(self) -> list[Fraction]:
        """Fractional parts of degrees that can carry a nonzero coefficient."""
        return sorted({e - (e.numerator // e.denominator) for e, _ in self.numerator})

    def support_degrees(self, upto) -> list[Fraction]:
        """All degrees <= upto on the grid of this series, from the lowest exponent."""
        if not self.numerator:
            return []
        lo = min(e for e, _ in self.numerator)
        out = []
        for c in self.classes():
            start = c + ((lo - c).__floor__())
            d = start
            while d <= upto:
                if d >= lo:
                    out.append(d)
                d += 1
        return sorted(out)

    def function(self, upto) -> dict:
        """Hilbert function {degree: dim} for all grid degrees up to ``upto``."""
        return {d: self.coefficient(d) for d in self.support_degrees(upto)}

    def nonzero_function(self, upto) -> dict:
        return {d: v for d, v in self.function(upto).items() if v}

    def _integer_numerator(self) -> tuple[int, dict]:
        scale = 1
        for e, _ in self.numerator:
            scale = lcm(scale, e.denominator)
        num = {int(e * scale): c for e, c in self.numerator}
        lo = min(num)
        return scale, {e - lo: c for e, c in num.items()}

    def pole_order(self) -> int:
        """Order of the pole at t = 1 (the Krull dimension)."""
        if not self.numerator:
            raise ValueError("zero series has no pole order")
        _, num = self._integer_numerator()
        k = 0
        while True:
            total = 0
            for e, c in num.items():
                ff = 1
                for j in range(k):
                    ff *= e - j
                total += c * ff
            if total:
                return len(self.weights) - k
            k += 1

    def dim(self) -> int:
        """Krull dimension of the module (-1 for the zero module)."""
        if not self.numerator:
            return -1
        return self.pole_order()

    def is_finite_length(self) -> bool:
        return not self.numerator or self.pole_order() == 0

    def length(self) -> int:
        """Total dimension over the field (finite-length modules only)."""
        if not self.is_finite_length():
            raise ValueError("module does not have finite length")
        if not self.numerator:
            return 0
        hi = max(e for e, _ in self.numerator)
        return sum(self.function(hi + sum(self.weights)).values())

    def multiplicity(self) -> int:
        """Leading coefficient datum: the reduced numerator at t = 1 (standard weights only)."""
        if set(self.weights) != {1}:
            raise ValueError("multiplicity from the series needs standard weights")
        num, _ = self.reduced()
        return sum(num.values())

    def reduced(self) -> tuple[dict, int]:
        """For standard weights: (Q, d) with HS = Q(t) / (1 - t)^d."""
        if set(self.weights) != {1}:
            raise ValueError("reduced form needs standard weights")
        if not self.numerator:
            return {}, 0
        num = {e: c for e, c in self.numerator}
        d = len(self.weights)
        while d > 0 and sum(num.values()) == 0:
            num = _divide_by_one_minus_t(num)
            d -= 1
        return num, d

    def __str__(self):
        def fmt(e):
            return str(e) if e.denominator == 1 else f"({e})"

        parts = []
        for e, c in self.numerator:
            mono = "1" if e == 0 else ("t" if e == 1 else f"t^{fmt(e)}")
            if abs(c) != 1:
                mono = f"{abs(c)}*{mono}" if mono != "1" else str(abs(c))
            parts.append(("- " if c < 0 else "+ ") + mono)
        num = " ".join(parts).removeprefix("+ ") or "0"
        den = "*".join(f"(1 - t^{w})" if w != 1 else "(1 - t)" for w in self.weights)
        return f"({num}) / ({den})"


def _divide_by_one_minus_t(num: dict) -> dict:
    """Exact division of a Laurent polynomial (Fraction exponents, unit steps) by (1 - t)."""
    out = {}
    classes: dict = {}
    for e, c in num.items():
        frac = e - (e.numerator // e.denominator)
        classes.setdefault(frac, []).append(e)
    for frac, exps in classes.items():
        exps.sort()
        e = exps[0]
        hi = exps[-1]
        acc = 0
        while e < hi:
            acc += num.get(e, 0)
            if acc:
                out[e] = acc
            e += 1
        if acc + num.get(hi, 0) != 0:
            raise ValueError("numerator not divisible by (1 - t)")
    return out


def hilbert_series_of_monomial_ideal(ring: PolyRing, monos: Iterable[tuple], shift=0) -> HilbertSeries:
    num = _numerator(_minimalize(monos), ring.weights)
    return HilbertSeries.from_dict({Fraction(e) + Fraction(shift): c for e, c in num}, ring.weights)


def hilbert_series_of_initial_module(ring: PolyRing, leading_terms: Iterable[tuple], degrees) -> HilbertSeries:
    """Series of P^n / in(U), where in(U) is spanned by (component, monomial) leading terms."""
    per_comp: dict = {j: [] for j in range(len(degrees))}
    for comp, mono in leading_terms:
        per_comp[comp].append(mono)
    total: dict = {}
    for j, monos in per_comp.items():
        for e, c in _numerator(_minimalize(monos), ring.weights):
            k = Fraction(e) + Fraction(degrees[j])
            total[k] = total.get(k, 0) + c
    return HilbertSeries.from_dict(total, ring.weights)
