"""Groebner bases for ideals and submodules of free modules over F_p[x].

Module elements are sparse vectors ``{(component, exponent_tuple): coeff}``.
The module order is term-over-position, graded by the induced degree
``deg(monomial) + degree(component)``; an optional elimination block makes
every term in components ``< elim`` larger than any term outside it, which is
how kernels (syzygies) are read off.

Buchberger's algorithm runs degree by degree (normal strategy, ties broken by
insertion index) with the Gebauer-Moeller update.  Processing input
generators lazily at their own degree gives minimal generating sets of graded
submodules for free.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Iterable, Sequence

from .algebra import (
    BadFrobeniusPower,
    Polynomial,
    PolyRing,
    RingMismatch,
    is_power_of,
    mono_divides,
    mono_lcm,
    pd_frobenius,
)

SATURATION_CAP = 64


class SaturationNotStabilized(RuntimeError):
    code = "SaturationNotStabilized"


# ------------------------------------------------------------------ orders


class ModuleOrder:
    """Induced-degree term-over-position order on a free module."""

    def __init__(self, ring: PolyRing, shifts: Sequence = (), elim: int | None = None):
        shifts = [Fraction(s) for s in shifts] or [Fraction(0)]
        scale = 1
        for s in shifts:
            scale = lcm(scale, s.denominator)
        self.ring = ring
        self.scale = scale
        self.shift = [int(s * scale) for s in shifts]
        self.weights = ring.weights
        self.elim = elim
        self.graded = ring.order != "lex"
        self._monokey = ring._key
        self._cache: dict = {}

    def extend(self, shifts: Sequence) -> None:
        for s in shifts:
            s = Fraction(s) * self.scale
            if s.denominator != 1:
                raise ValueError("component degree incompatible with order scale")
            self.shift.append(int(s))

    def degree(self, term) -> int:
        comp, mono = term
        return self.scale * sum(e * w for e, w in zip(mono, self.weights)) + self.shift[comp]

    def key(self, term):
        k = self._cache.get(term)
        if k is None:
            comp, mono = term
            block = 1 if self.elim is not None and comp < self.elim else 0
            if self.graded:
                k = (block, self.degree(term), self._monokey(mono), -comp)
            else:
                k = (block, mono, -comp)
            self._cache[term] = k
        return k


def vector_degree(vec: dict, order: ModuleOrder):
    """Induced degree of a homogeneous vector (None for zero)."""
    for term in vec:
        return order.degree(term)
    return None


# ------------------------------------------------------------------ bases


class Basis:
    """A finite set of vectors with reduction; a Groebner basis once complete."""

    def __init__(self, p: int, order: ModuleOrder):
        self.p = p
        self.order = order
        self.key = order.key
        self.polys: list[dict] = []
        self.lts: list[tuple] = []
        self.lcinv: list[int] = []
        self.by_comp: dict[int, list[int]] = defaultdict(list)

    def lead(self, f: dict):
        return max(f, key=self.key)

    def _store(self, f: dict) -> int:
        lt = self.lead(f)
        self.polys.append(f)
        self.lts.append(lt)
        self.lcinv.append(pow(f[lt], -1, self.p))
        return len(self.polys) - 1

    def _activate(self, idx: int) -> None:
        self.by_comp[self.lts[idx][0]].append(idx)

    def find_reducer(self, comp: int, mono: tuple, skip: int = -1):
        lts = self.lts
        for i in self.by_comp.get(comp, ()):
            if i != skip and mono_divides(lts[i][1], mono):
                return i
        return None

    def reduce(self, f: dict, full: bool = True, skip: int = -1) -> dict:
        """Normal form of f; with full=False only the leading term is made irreducible."""
        p = self.p
        key = self.key
        f = dict(f)
        out = {}
        polys, lts, lcinv = self.polys, self.lts, self.lcinv
        while f:
            t = max(f, key=key)
            comp, mono = t
            g = self.find_reducer(comp, mono, skip)
            if g is None:
                if not full:
                    out.update(f)
                    return out
                out[t] = f.pop(t)
                continue
            c = f[t] * lcinv[g] % p
            shift = tuple(a - b for a, b in zip(mono, lts[g][1]))
            for (c2, m2), v in polys[g].items():
                k = (c2, tuple(a + b for a, b in zip(m2, shift)))
                nv = (f.get(k, 0) - c * v) % p
                if nv:
                    f[k] = nv
                else:
                    f.pop(k, None)
        return out

    def contains(self, f: dict) -> bool:
        return not self.reduce(f, full=False)

    def elements(self) -> list[dict]:
        return [self.polys[i] for i in self.active_indices()]

    def active_indices(self) -> list[int]:
        out = [i for lst in self.by_comp.values() for i in lst]
        return sorted(out, key=lambda i: self.key(self.lts[i]))

    @classmethod
    def from_reduced(cls, p: int, order: ModuleOrder, vectors: Iterable[dict]) -> "Basis":
        b = cls(p, order)
        for v in vectors:
            b._activate(b._store(v))
        return b


class _Buchberger(Basis):
    def __init__(self, p: int, order: ModuleOrder, rank_one: bool):
        super().__init__(p, order)
        self.rank_one = rank_one
        self.heap: list = []
        self.pending: dict[tuple, tuple] = {}
        self.complete = True

    def _pair_degree(self, comp: int, lcm_mono: tuple) -> int:
        return self.order.degree((comp, lcm_mono))

    def add(self, f: dict) -> int:
        h = self._store(f)
        self._update(h)
        return h

    def _update(self, h: int) -> None:
        comp, mh = self.lts[h]
        lts = self.lts
        same = list(self.by_comp.get(comp, ()))
        cand = [(g, mono_lcm(mh, lts[g][1])) for g in same]
        coprime = {}
        for g, l in cand:
            coprime[g] = self.rank_one and all(a == 0 or b == 0 for a, b in zip(mh, lts[g][1]))
        kept = []
        for idx, (g1, l1) in enumerate(cand):
            if coprime[g1]:
                kept.append((g1, l1))
                continue
            dominated = False
            for g2, l2 in cand[idx + 1:]:
                if mono_divides(l2, l1):
                    dominated = True
                    break
            if not dominated:
                for g2, l2 in kept:
                    if mono_divides(l2, l1):
                        dominated = True
                        break
            if not dominated:
                kept.append((g1, l1))
        new_pairs = [(g, l) for g, l in kept if not coprime[g]]
        # drop old pairs made redundant by h (chain criterion)
        for (g1, g2), (pc, l12) in list(self.pending.items()):
            if pc != comp or not mono_divides(mh, l12):
                continue
            if mono_lcm(lts[g1][1], mh) != l12 and mono_lcm(mh, lts[g2][1]) != l12:
                del self.pending[(g1, g2)]
        for g, l in new_pairs:
            pair = (g, h)
            self.pending[pair] = (comp, l)
            heapq.heappush(self.heap, (self._pair_degree(comp, l), 0, g, h))
        lst = self.by_comp[comp]
        lst[:] = [g for g in lst if not mono_divides(mh, lts[g][1])]
        lst.append(h)

    def _spoly(self, i: int, j: int, lcm_mono: tuple) -> dict:
        p = self.p
        out: dict = {}
        for idx, sign in ((i, 1), (j, -1)):
            f = self.polys[idx]
            c = sign * self.lcinv[idx]
            shift = tuple(a - b for a, b in zip(lcm_mono, self.lts[idx][1]))
            for (c2, m2), v in f.items():
                k = (c2, tuple(a + b for a, b in zip(m2, shift)))
                nv = (out.get(k, 0) + c * v) % p
                if nv:
                    out[k] = nv
                else:
                    out.pop(k, None)
        return out

    def run(self, gens: Sequence[dict], degree_bound=None) -> list[bool]:
        """Complete the basis with the given generators; return minimality flags."""
        minimal = [False] * len(gens)
        for k, g in enumerate(gens):
            if g:
                deg = max(self.order.degree(t) for t in g)
                heapq.heappush(self.heap, (deg, 1, k, -1))
        while self.heap:
            deg, kind, a, b = heapq.heappop(self.heap)
            if degree_bound is not None and deg > degree_bound:
                heapq.heappush(self.heap, (deg, kind, a, b))
                self.complete = False
                break
            if kind == 0:
                info = self.pending.pop((a, b), None)
                if info is None:
                    continue
                r = self.reduce(self._spoly(a, b, info[1]))
            else:
                r = self.reduce(gens[a])
                if r:
                    minimal[a] = True
            if r:
                self.add(r)
        return minimal

    def reduced_elements(self) -> list[dict]:
        """Interreduce the active elements into a reduced, monic basis."""
        idx = self.active_indices()
        out = []
        p = self.p
        for i in idx:
            r = self.reduce(self.polys[i], full=True, skip=i)
            lt = self.lts[i]
            inv = pow(r[lt], -1, p)
            out.append({t: (c * inv) % p for t, c in r.items()})
        return out


def module_groebner(
    ring: PolyRing,
    vectors: Sequence[dict],
    shifts: Sequence,
    *,
    base: Sequence[dict] = (),
    elim: int | None = None,
    degree_bound=None,
    reduced: bool = True,
    track_minimal: bool = False,
    rank_one: bool = False,
):
    """Groebner basis of the submodule generated by ``base`` and ``vectors``.

    Returns ``(basis, minimal_flags)`` where ``basis`` is a :class:`Basis` and
    ``minimal_flags[k]`` says whether ``vectors[k]`` was needed on top of the
    lower-degree part (only meaningful for homogeneous input).
    """
    order = ModuleOrder(ring, shifts, elim)
    bb = _Buchberger(ring.p, order, rank_one)
    for v in base:
        if v:
            r = bb.reduce(v)
            if r:
                bb.add(r)
    flags = bb.run(list(vectors), degree_bound)
    if reduced and bb.complete:
        basis = Basis.from_reduced(ring.p, order, bb.reduced_elements())
    else:
        basis = Basis.from_reduced(ring.p, order, [bb.polys[i] for i in bb.active_indices()])
    basis.complete = bb.complete
    return basis, (flags if track_minimal else None)


# ------------------------------------------------------------------ helpers

def poly_to_vec(f: dict, comp: int = 0) -> dict:
    return {(comp, m): c for m, c in f.items()}


def vec_to_poly(v: dict) -> dict:
    return {m: c for (_, m), c in v.items()}


def vec_component(v: dict, comp: int) -> dict:
    return {m: c for (k, m), c in v.items() if k == comp}


def vec_shift_components(v: dict, offset: int) -> dict:
    return {(k + offset, m): c for (k, m), c in v.items()}


def vec_add(u: dict, v: dict, p: int, scale: int = 1) -> dict:
    out = dict(u)
    for t, c in v.items():
        nv = (out.get(t, 0) + scale * c) % p
        if nv:
            out[t] = nv
        else:
            out.pop(t, None)
    return out


def vec_mul_poly(v: dict, f: dict, p: int) -> dict:
    out: dict = {}
    for (k, m1), c1 in v.items():
        for m2, c2 in f.items():
            t = (k, tuple(a + b for a, b in zip(m1, m2)))
            nv = (out.get(t, 0) + c1 * c2) % p
            if nv:
                out[t] = nv
            else:
                del out[t]
    return out


def ideal_base_vectors(ideal_basis: "Basis | None", components: Iterable[int]) -> list[dict]:
    """The generators of I * P^r as vectors (one copy of GB(I) per component)."""
    if ideal_basis is None:
        return []
    polys = [vec_to_poly(g) for g in ideal_basis.elements()]
    return [poly_to_vec(f, j) for j in components for f in polys]


def reduce_vec_mod_ideal(v: dict, ideal_basis: "Basis | None") -> dict:
    """Reduce each component of v modulo the ideal."""
    if ideal_basis is None or not v:
        return v
    comps = sorted({k for k, _ in v})
    out = {}
    for k in comps:
        r = ideal_basis.reduce(poly_to_vec(vec_component(v, k), 0))
        for (_, m), c in r.items():
            out[(k, m)] = c
    return out


def kernel(
    ring: PolyRing,
    images: Sequence[dict],
    target_degrees: Sequence,
    relations: Sequence[dict] = (),
    source_degrees: Sequence | None = None,
    ideal_basis: "Basis | None" = None,
    minimalize: bool = True,
) -> list[dict]:
    """Generators of ker(P^s -> P^r / (relations + I P^r)), e_i -> images[i], modulo I P^s.

    Computed by elimination: the module generated by (images[i], e_i) and
    (relation, 0) in P^(r+s), with the target block eliminated.
    """
    r = len(target_degrees)
    s = len(images)
    if s == 0:
        return []
    if source_degrees is None:
        probe = ModuleOrder(ring, target_degrees)
        source_degrees = []
        for v in images:
            if not v:
                raise ValueError("source degrees needed for zero images")
            source_degrees.append(Fraction(vector_degree(v, probe), probe.scale))
    shifts = list(target_degrees) + list(source_degrees)
    gens = []
    for i, v in enumerate(images):
        g = dict(v)
        g[(r + i, ring.zero_mono())] = 1
        gens.append(g)
    gens.extend(relations)
    base = ideal_base_vectors(ideal_basis, range(r + s))
    basis, _ = module_groebner(ring, gens, shifts, base=base, elim=r, reduced=False)
    out = []
    for g in basis.elements():
        lt_comp = basis.lead(g)[0]
        if lt_comp < r:
            continue
        v = reduce_vec_mod_ideal(vec_shift_components(g, -r), ideal_basis)
        if v:
            out.append(v)
    if minimalize and out:
        idx = minimal_generator_indices(ring, out, source_degrees, ideal_basis)
        out = [out[i] for i in idx]
    return out


def minimal_generator_indices(
    ring: PolyRing,
    vectors: Sequence[dict],
    degrees: Sequence,
    ideal_basis: "Basis | None" = None,
    extra: Sequence[dict] = (),
) -> list[int]:
    """Indices of a minimal generating subset of the graded submodule
    generated by ``vectors`` (modulo I and the ``extra`` vectors)."""
    base = ideal_base_vectors(ideal_basis, range(len(degrees))) + list(extra)
    order = ModuleOrder(ring, degrees)
    ranked = sorted(range(len(vectors)), key=lambda i: (vector_degree(vectors[i], order) if vectors[i] else 0, i))
    _, flags = module_groebner(
        ring, [vectors[i] for i in ranked], degrees, base=base, reduced=False, track_minimal=True
    )
    return sorted(ranked[k] for k, f in enumerate(flags) if f)


# ------------------------------------------------------------------ ideals


_IDEAL_GB_MEMO: dict = {}


def _canonical_poly_text(ring: PolyRing, f: dict) -> str:
    items = sorted(f.items(), key=lambda t: ring.sort_key(t[0]), reverse=True)
    return ";".join(f"{c}:{','.join(map(str, m))}" for m, c in items)


def clear_memo() -> None:
    """Forget in-process ideal bases (the on-disk cache is untouched)."""
    _IDEAL_GB_MEMO.clear()


def ideal_groebner(ring: PolyRing, polys: Sequence[dict]) -> Basis:
    """Reduced Groebner basis of an ideal, memoised and optionally disk-cached."""
    from . import cache

    texts = tuple(_canonical_poly_text(ring, f) for f in polys if f)
    key = (ring, texts)
    hit = _IDEAL_GB_MEMO.get(key)
    if hit is not None:
        return hit
    order = ModuleOrder(ring, [0])
    stored = cache.load_gb(ring, texts)
    if stored is not None:
        basis = Basis.from_reduced(ring.p, order, [poly_to_vec(f) for f in stored])
    else:
        basis, _ = module_groebner(ring, [poly_to_vec(f) for f in polys if f], [0], rank_one=True)
        cache.store_gb(ring, texts, [vec_to_poly(g) for g in basis.elements()])
    basis.complete = True
    _IDEAL_GB_MEMO[key] = basis
    return basis


def groebner_basis(ring: PolyRing, generators: Iterable) -> list[Polynomial]:
    """Reduced Groebner basis of the ideal generated by ``generators``."""
    polys = [ring.poly(g).terms for g in generators]
    basis = ideal_groebner(ring, polys)
    return [Polynomial._raw(ring, vec_to_poly(g)) for g in basis.elements()]


def normal_form(f: Polynomial, basis: Sequence[Polynomial] | "Ideal") -> Polynomial:
    """Normal form of f with respect to a Groebner basis (or an Ideal's basis)."""
    ring = f.ring
    if isinstance(basis, Ideal):
        b = basis.basis
    else:
        b = Basis.from_reduced(ring.p, ModuleOrder(ring, [0]), [poly_to_vec(g.terms) for g in basis if g])
    return Polynomial._raw(ring, vec_to_poly(b.reduce(poly_to_vec(f.terms))))


def s_polynomial(f: Polynomial, g: Polynomial) -> Polynomial:
    ring = f.ring
    lf, lg = f.leading_monomial(), g.leading_monomial()
    l = mono_lcm(lf, lg)
    p = ring.p
    a = ring.monomial(tuple(x - y for x, y in zip(l, lf)), pow(f.leading_coefficient(), -1, p))
    b = ring.monomial(tuple(x - y for x, y in zip(l, lg)), pow(g.leading_coefficient(), -1, p))
    return a * f - b * g


class Ideal:
    """An ideal of the ambient polynomial ring given by generators."""

    def __init__(self, ring: PolyRing, generators: Iterable = ()):
        self.ring = ring
        gens = []
        for g in generators:
            g = ring.poly(g)
            if g.ring != ring:
                raise RingMismatch("generator from another ring")
            if g and g not in gens:
                gens.append(g)
        self.gens = tuple(gens)

    def __repr__(self):
        return f"Ideal({', '.join(map(str, self.gens)) or '0'})"

    def __str__(self):
        return "(" + ", ".join(map(str, self.gens)) + ")" if self.gens else "(0)"

    @cached_property
    def basis(self) -> Basis:
        return ideal_groebner(self.ring, [g.terms for g in self.gens])

    @property
    def gb(self) -> list[Polynomial]:
        return [Polynomial._raw(self.ring, vec_to_poly(g)) for g in self.basis.elements()]

    def is_homogeneous(self) -> bool:
        return all(g.is_homogeneous() for g in self.gens)

    def is_monomial(self) -> bool:
        return all(len(g.terms) == 1 for g in self.gb)

    def normal_form(self, f) -> Polynomial:
        f = self.ring.poly(f)
        return Polynomial._raw(self.ring, vec_to_poly(self.basis.reduce(poly_to_vec(f.terms))))

    def contains(self, f) -> bool:
        f = self.ring.poly(f)
        return self.basis.contains(poly_to_vec(f.terms))

    __contains__ = contains

    def contains_ideal(self, other: "Ideal") -> bool:
        return all(self.contains(g) for g in other.gens)

    def __eq__(self, other):
        if not isinstance(other, Ideal):
            return NotImplemented
        return self.ring == other.ring and self.contains_ideal(other) and other.contains_ideal(self)

    __hash__ = None

    def is_unit(self) -> bool:
        return self.contains(self.ring.one())

    def is_zero(self) -> bool:
        return not self.gens

    def leading_monomials(self) -> list[tuple]:
        return [self.basis.lts[i][1] for i in self.basis.active_indices()]

    def __add__(self, other: "Ideal") -> "Ideal":
        self._same(other)
        return Ideal(self.ring, self.gens + other.gens)

    def __mul__(self, other: "Ideal") -> "Ideal":
        self._same(other)
        return Ideal(self.ring, [f * g for f in self.gens for g in other.gens])

    def _same(self, other):
        if not isinstance(other, Ideal) or other.ring != self.ring:
            raise RingMismatch("ideals live in different rings")

    def quotient_by_element(self, f) -> "Ideal":
        """(self : f)."""
        ring = self.ring
        f = ring.poly(f)
        if not f:
            return Ideal(ring, [ring.one()])
        rels = list(self.basis.elements())
        deg0 = Fraction(0)
        src = Fraction(f.degree()) if f.is_homogeneous() else None
        if src is None:
            ker = _kernel_inhomogeneous(ring, [poly_to_vec(f.terms)], rels)
        else:
            ker = kernel(ring, [poly_to_vec(f.terms)], [deg0], rels, [src])
        return Ideal(ring, [Polynomial._raw(ring, vec_to_poly(v)) for v in ker])

    def colon(self, other: "Ideal") -> "Ideal":
        """(self : other) = intersection of (self : g) over generators g."""
        self._same(other)
        result = None
        for g in other.gens:
            q = self.quotient_by_element(g)
            result = q if result is None else result.intersect(q)
        return result if result is not None else Ideal(self.ring, [self.ring.one()])

    def intersect(self, other: "Ideal") -> "Ideal":
        self._same(other)
        ring = self.ring
        if not self.gens or not other.gens:
            return Ideal(ring, [])
        one = ring.zero_mono()
        image = {(0, one): 1, (1, one): 1}
        rels = [poly_to_vec(g.terms, 0) for g in self.gb] + [poly_to_vec(g.terms, 1) for g in other.gb]
        if self.is_homogeneous() and other.is_homogeneous():
            ker = kernel(ring, [image], [0, 0], rels, [0])
        else:
            ker = _kernel_inhomogeneous(ring, [image], rels, rank=2)
        return Ideal(ring, [Polynomial._raw(ring, vec_to_poly(v)) for v in ker])

    def saturation(self, other: "Ideal") -> "Ideal":
        """(self : other^infinity), iterating colons until stable."""
        current = self
        for _ in range(SATURATION_CAP):
            nxt = current.colon(other)
            if nxt.contains_ideal(current) and current.contains_ideal(nxt):
                return current
            current = nxt
        raise SaturationNotStabilized(f"saturation did not stabilise in {SATURATION_CAP} steps")

    def bracket_power(self, q: int) -> "Ideal":
        """Ideal generated by the q-th powers of the generators (q a power of p)."""
        if not is_power_of(q, self.ring.p):
            raise BadFrobeniusPower(f"{q} is not a power of {self.ring.p}")
        return Ideal(self.ring, [Polynomial._raw(self.ring, pd_frobenius(g.terms, q)) for g in self.gens])

    def hilbert_series(self):
        from .hilbert import hilbert_series_of_monomial_ideal

        if not self.is_homogeneous():
            raise ValueError("Hilbert series needs a homogeneous ideal")
        return hilbert_series_of_monomial_ideal(self.ring, self.leading_monomials())

    def dim(self) -> int:
        """Krull dimension of P/self (-1 for the unit ideal)."""
        return self.hilbert_series().dim()


def _kernel_inhomogeneous(ring, images, relations, rank: int = 1):
    """Kernel by elimination without degree data (used for non-graded input)."""
    s = len(images)
    gens = []
    for i, v in enumerate(images):
        g = dict(v)
        g[(rank + i, ring.zero_mono())] = 1
        gens.append(g)
    gens.extend(relations)
    basis, _ = module_groebner(ring, gens, [0] * (rank + s), elim=rank)
    return [vec_shift_components(g, -rank) for g in basis.elements() if basis.lead(g)[0] >= rank]


def ideal_sum(I: Ideal, J: Ideal) -> Ideal:
    return I + J


def ideal_product(I: Ideal, J: Ideal) -> Ideal:
    return I * J


def colon(I: Ideal, J: Ideal) -> Ideal:
    return I.colon(J)


def saturation(I: Ideal, J: Ideal) -> Ideal:
    return I.saturation(J)


def member(f, I: Ideal) -> bool:
    return I.contains(f)


def bracket_power(I: Ideal, q: int) -> Ideal:
    return I.bracket_power(q)
