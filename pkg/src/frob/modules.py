"""Finitely generated graded modules over R = P/I, given by presentations.

A :class:`ModulePresentation` is ``coker(P^m -> P^n)`` read over R: generators
carry (possibly fractional) degrees and each relation is a homogeneous column
stored as a sparse vector whose entries are normal forms modulo I.

Everything homological (resolutions, Hom, Ext, torsion) reduces to two
primitives from :mod:`frob.groebner`: kernels of maps into quotients of free
modules, and minimal generating sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .algebra import Polynomial, PolyRing, format_terms, wdeg
from .groebner import (
    Ideal,
    ModuleOrder,
    ideal_base_vectors,
    kernel,
    minimal_generator_indices,
    module_groebner,
    poly_to_vec,
    reduce_vec_mod_ideal,
    vec_component,
    vec_to_poly,
)
from .hilbert import HilbertSeries, hilbert_series_of_initial_module


class ModuleError(Exception):
    code = "ModuleError"


class ZeroModule(ModuleError, ValueError):
    code = "ZeroModule"


class CapExceeded(ModuleError, ValueError):
    code = "CapExceeded"


class UnsupportedNonReduced(ModuleError, ValueError):
    code = "UnsupportedNonReduced"


class InhomogeneousRelation(ModuleError, ValueError):
    code = "InhomogeneousRelation"


class MissingMinimalPrimes(ModuleError, ValueError):
    code = "MissingMinimalPrimes"


class InvalidMinimalPrime(ModuleError, ValueError):
    code = "InvalidMinimalPrime"


# ------------------------------------------------------------------ rings


class QuotientRing:
    """R = P/I with I homogeneous, together with its declared minimal primes."""

    def __init__(
        self,
        ambient: PolyRing,
        ideal: Iterable = (),
        minimal_primes: Iterable | None = None,
        reduced: bool | None = None,
        name: str | None = None,
    ):
        self.ambient = ambient
        self.ideal = Ideal(ambient, ideal)
        self.name = name or "R"
        for g in self.ideal.gens:
            if not g.is_homogeneous():
                raise InhomogeneousRelation(f"defining ideal generator {g} is not homogeneous")
        if self.ideal.is_unit():
            raise ValueError("the defining ideal is the unit ideal")
        self._declared_primes = minimal_primes
        self._declared_reduced = reduced

    def __repr__(self):
        return f"QuotientRing({self.name}: F_{self.p}[{','.join(self.variables)}]/{self.ideal})"

    @property
    def p(self) -> int:
        return self.ambient.p

    @property
    def variables(self) -> tuple:
        return self.ambient.variables

    @property
    def weights(self) -> tuple:
        return self.ambient.weights

    @property
    def nvars(self) -> int:
        return self.ambient.nvars

    def poly(self, obj) -> Polynomial:
        return self.ambient.poly(obj)

    @cached_property
    def ideal_basis(self):
        return self.ideal.basis if self.ideal.gens else None

    def nf(self, f: dict) -> dict:
        if self.ideal_basis is None:
            return f
        return vec_to_poly(self.ideal_basis.reduce(poly_to_vec(f)))

    def nf_vec(self, v: dict) -> dict:
        return reduce_vec_mod_ideal(v, self.ideal_basis)

    def reduce(self, f) -> Polynomial:
        return Polynomial._raw(self.ambient, self.nf(self.poly(f).terms))

    @cached_property
    def dim(self) -> int:
        return self.ideal.dim()

    @cached_property
    def maximal_ideal(self) -> Ideal:
        return Ideal(self.ambient, self.ambient.gens())

    @cached_property
    def embedding_dimension(self) -> int:
        """dim_k m/m^2 for the irrelevant maximal ideal."""
        from .linalg import rank_mod_p

        rows = []
        for g in self.ideal.gb:
            rows.append([g.terms.get(tuple(int(i == j) for i in range(self.nvars)), 0) for j in range(self.nvars)])
        return self.nvars - (rank_mod_p(rows, self.p) if rows else 0)

    def is_regular(self) -> bool:
        return self.dim == self.embedding_dimension

    @cached_property
    def is_monomial(self) -> bool:
        return self.ideal.is_monomial()

    @cached_property
    def _primes(self) -> tuple[tuple[Ideal, ...], str]:
        if self._declared_primes is not None:
            primes = tuple(
                q if isinstance(q, Ideal) else Ideal(self.ambient, q) for q in self._declared_primes
            )
            for q in primes:
                if not q.contains_ideal(self.ideal):
                    raise InvalidMinimalPrime(f"declared minimal prime {q} does not contain the defining ideal")
                if q.dim() != self.dim:
                    raise InvalidMinimalPrime(
                        f"declared minimal prime {q} has dimension {q.dim()} != dim R = {self.dim}"
                    )
            return primes, "user-supplied"
        if self.is_monomial:
            return tuple(monomial_minimal_primes(self.ambient, self.ideal)), "computed"
        return (), "missing"

    @property
    def minimal_primes(self) -> tuple[Ideal, ...]:
        primes, prov = self._primes
        if prov == "missing":
            raise MissingMinimalPrimes(
                f"{self.name}: minimal primes are computed only for monomial ideals; declare them"
            )
        return primes

    @property
    def minimal_primes_provenance(self) -> str:
        return self._primes[1]

    @cached_property
    def is_reduced(self) -> bool:
        """Reducedness: squarefree monomial ideal, or I equal to the meet of its minimal primes."""
        if self.is_monomial:
            computed = all(max(m) <= 1 for m in self.ideal.leading_monomials())
        elif self.minimal_primes_provenance != "missing":
            meet = None
            for q in self.minimal_primes:
                meet = q if meet is None else meet.intersect(q)
            computed = self.ideal.contains_ideal(meet)
        elif self._declared_reduced is not None:
            return bool(self._declared_reduced)
        else:
            raise MissingMinimalPrimes("cannot decide reducedness without minimal primes")
        if self._declared_reduced is not None and bool(self._declared_reduced) != computed:
            raise ValueError(f"declared reduced={self._declared_reduced} but computed {computed}")
        return computed

    # module constructors
    def free(self, rank: int = 1, degrees: Sequence | None = None) -> "ModulePresentation":
        degrees = tuple(degrees) if degrees is not None else (0,) * rank
        return ModulePresentation(self, degrees, [], minimal=True)

    def cyclic(self, generators: Iterable, degree=0) -> "ModulePresentation":
        """R/(f_1, ..., f_k) shifted to start in the given degree."""
        gens = [self.poly(g) for g in generators]
        return ModulePresentation.from_matrix(self, [gens], [degree])

    def residue_field(self) -> "ModulePresentation":
        return self.cyclic(self.ambient.gens())

    def module(self, rows, degrees=None) -> "ModulePresentation":
        return ModulePresentation.from_matrix(self, rows, degrees)

    def fingerprint(self) -> str:
        return self.ambient.fingerprint() + ":" + ";".join(str(g) for g in self.ideal.gb)


def monomial_minimal_primes(ring: PolyRing, ideal: Ideal) -> list[Ideal]:
    """Minimal primes of a monomial ideal: minimal variable sets meeting every generator's support."""
    supports = [frozenset(i for i, e in enumerate(m) if e) for m in ideal.leading_monomials()]
    n = ring.nvars
    covers: list[frozenset] = []
    for size in range(n + 1):
        for subset in itertools.combinations(range(n), size):
            s = frozenset(subset)
            if any(c <= s for c in covers):
                continue
            if all(s & sup for sup in supports):
                covers.append(s)
    gens = ring.gens()
    return [Ideal(ring, [gens[i] for i in sorted(c)]) for c in covers]


# ------------------------------------------------------------------ modules


def _vec_degree(v: dict, degrees: Sequence[Fraction], weights) -> Fraction:
    comp, mono = next(iter(v))
    return Fraction(wdeg(mono, weights)) + degrees[comp]


def _is_homogeneous(v: dict, degrees, weights) -> bool:
    ds = {Fraction(wdeg(m, weights)) + degrees[c] for c, m in v}
    return len(ds) <= 1


class ModulePresentation:
    """coker of a homogeneous relation matrix over a :class:`QuotientRing`."""

    def __init__(self, ring: QuotientRing, degrees: Sequence, relations: Iterable[dict], *, minimal: bool = False):
        self.ring = ring
        self.degrees = tuple(Fraction(d) for d in degrees)
        rels = []
        n = len(self.degrees)
        for v in relations:
            v = ring.nf_vec(v)
            if not v:
                continue
            if any(c < 0 or c >= n for c, _ in v):
                raise ValueError("relation refers to a missing generator")
            if not _is_homogeneous(v, self.degrees, ring.weights):
                raise InhomogeneousRelation("relation column is not homogeneous")
            rels.append(v)
        self.relations = tuple(rels)
        self.minimal = minimal

    @classmethod
    def from_matrix(cls, ring: QuotientRing, rows, degrees=None) -> "ModulePresentation":
        """Build from a matrix given as rows (one row per generator)."""
        rows = [list(r) for r in rows]
        n = len(rows)
        m = len(rows[0]) if rows else 0
        if any(len(r) != m for r in rows):
            raise ValueError("ragged relation matrix")
        degrees = list(degrees) if degrees is not None else [0] * n
        if len(degrees) != n:
            raise ValueError("one degree per generator is required")
        cols = []
        for k in range(m):
            v = {}
            for j in range(n):
                f = ring.poly(rows[j][k])
                for mono, c in f.terms.items():
                    v[(j, mono)] = c
            cols.append(v)
        return cls(ring, degrees, cols)

    @property
    def ngens(self) -> int:
        return len(self.degrees)

    @property
    def nrels(self) -> int:
        return len(self.relations)

    def column_degree(self, k: int) -> Fraction:
        return _vec_degree(self.relations[k], self.degrees, self.ring.weights)

    @property
    def column_degrees(self) -> tuple:
        return tuple(self.column_degree(k) for k in range(self.nrels))

    def entry(self, j: int, k: int) -> Polynomial:
        return Polynomial._raw(self.ring.ambient, vec_component(self.relations[k], j))

    def matrix(self) -> list[list[Polynomial]]:
        return [[self.entry(j, k) for k in range(self.nrels)] for j in range(self.ngens)]

    def __repr__(self):
        return f"ModulePresentation(gens={self.ngens}, rels={self.nrels}, degrees={[str(d) for d in self.degrees]})"

    def __str__(self):
        if not self.ngens:
            return "0"
        if not self.nrels:
            return f"free of rank {self.ngens}"
        rows = [[str(e) for e in row] for row in self.matrix()]
        width = max(len(s) for r in rows for s in r)
        return "\n".join("| " + "  ".join(s.rjust(width) for s in r) + " |" for r in rows)

    @cached_property
    def relation_basis(self):
        """Groebner basis of relations + I*P^n (for membership and Hilbert series)."""
        base = ideal_base_vectors(self.ring.ideal_basis, range(self.ngens))
        basis, _ = module_groebner(self.ring.ambient, list(self.relations), self.degrees or [0], base=base)
        return basis

    def contains(self, v: dict) -> bool:
        """Is the vector v zero in the module (i.e. in the relation submodule)?"""
        return self.relation_basis.contains(v)

    @cached_property
    def hilbert_series(self) -> HilbertSeries:
        if not self.ngens:
            return HilbertSeries.from_dict({}, self.ring.weights)
        b = self.relation_basis
        lts = [b.lts[i] for i in b.active_indices()]
        return hilbert_series_of_initial_module(self.ring.ambient, lts, self.degrees)

    def hilbert_function(self, upto) -> dict:
        return self.hilbert_series.function(upto)

    def is_zero(self) -> bool:
        return self.hilbert_series.is_zero()

    def is_free(self) -> bool:
        return minimal_presentation(self).nrels == 0

    def rank_if_free(self) -> int | None:
        m = minimal_presentation(self)
        return m.ngens if m.nrels == 0 else None

    def shift(self, a) -> "ModulePresentation":
        a = Fraction(a)
        return ModulePresentation(self.ring, [d + a for d in self.degrees], self.relations, minimal=self.minimal)

    def direct_sum(self, other: "ModulePresentation") -> "ModulePresentation":
        _same_ring(self, other)
        n = self.ngens
        rels = list(self.relations) + [{(c + n, m): v for (c, m), v in r.items()} for r in other.relations]
        return ModulePresentation(self.ring, self.degrees + other.degrees, rels, minimal=self.minimal and other.minimal)

    def __add__(self, other):
        return self.direct_sum(other)

    def blocks(self) -> list[tuple[list[int], list[int]]]:
        """Connected components of the generator/relation incidence graph."""
        parent = list(range(self.ngens))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for v in self.relations:
            comps = sorted({c for c, _ in v})
            for c in comps[1:]:
                ra, rb = find(comps[0]), find(c)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
        groups: dict[int, list[int]] = {}
        for j in range(self.ngens):
            groups.setdefault(find(j), []).append(j)
        rel_groups: dict[int, list[int]] = {}
        for k, v in enumerate(self.relations):
            rel_groups.setdefault(find(next(iter(v))[0]), []).append(k)
        return [(gens, rel_groups.get(root, [])) for root, gens in sorted(groups.items())]

    def restrict(self, gens: Sequence[int], rels: Sequence[int]) -> "ModulePresentation":
        index = {g: i for i, g in enumerate(gens)}
        new_rels = [{(index[c], m): v for (c, m), v in self.relations[k].items()} for k in rels]
        return ModulePresentation(self.ring, [self.degrees[g] for g in gens], new_rels, minimal=self.minimal)

    def split_blocks(self) -> list["ModulePresentation"]:
        return [self.restrict(g, r) for g, r in self.blocks()]

    def to_dict(self) -> dict:
        ring = self.ring.ambient
        return {
            "generators": self.ngens,
            "degrees": [str(d) for d in self.degrees],
            "relations": [
                [format_terms(ring, vec_component(v, j)) for j in range(self.ngens)] for v in self.relations
            ],
        }


def _same_ring(M: ModulePresentation, N: ModulePresentation) -> None:
    if M.ring is not N.ring and M.ring.fingerprint() != N.ring.fingerprint():
        from .algebra import RingMismatch

        raise RingMismatch("modules over different rings")


def zero_module(R: QuotientRing) -> ModulePresentation:
    return ModulePresentation(R, [], [], minimal=True)


# ------------------------------------------------------- minimalization


def _pivot_units(R: QuotientRing, degrees: list, cols: list[dict], gens: list[int]):
    """Eliminate generators killed by a relation with a unit entry."""
    p = R.p
    zero = R.ambient.zero_mono()
    gens = list(gens)
    cols = [c for c in cols if c]
    while True:
        pivot = None
        for k, v in enumerate(cols):
            for j in gens:
                c = v.get((j, zero))
                if c:
                    pivot = (k, j, c)
                    break
            if pivot:
                break
        if pivot is None:
            return gens, cols
        k, j, c = pivot
        pcol = cols[k]
        inv = pow(c, -1, p)
        new_cols = []
        for l, v in enumerate(cols):
            if l == k:
                continue
            a = vec_component(v, j)
            if a:
                # v - (a / c) * pcol
                w = dict(v)
                for (c2, m2), val in pcol.items():
                    for m1, av in a.items():
                        t = (c2, tuple(x + y for x, y in zip(m1, m2)))
                        nv = (w.get(t, 0) - av * inv * val) % p
                        if nv:
                            w[t] = nv
                        else:
                            w.pop(t, None)
                v = R.nf_vec(w)
            if v:
                new_cols.append(v)
        cols = new_cols
        gens.remove(j)


def minimalize(M: ModulePresentation) -> tuple[ModulePresentation, list[int]]:
    """Minimal presentation of M and the indices of the surviving generators."""
    if M.minimal:
        return M, list(range(M.ngens))
    R = M.ring
    kept_all: list[int] = []
    kept_cols: list[dict] = []
    for gens, rels in M.blocks():
        cols = [M.relations[k] for k in rels]
        gens_left, cols = _pivot_units(R, M.degrees, cols, gens)
        if cols:
            local = {g: i for i, g in enumerate(gens_left)}
            lcols = [{(local[c], m): v for (c, m), v in col.items()} for col in cols]
            degs = [M.degrees[g] for g in gens_left]
            idx = minimal_generator_indices(R.ambient, lcols, degs, R.ideal_basis)
            cols = [cols[i] for i in idx]
        kept_all.extend(gens_left)
        kept_cols.extend(cols)
    kept_all.sort()
    index = {g: i for i, g in enumerate(kept_all)}
    rels = [{(index[c], m): v for (c, m), v in col.items()} for col in kept_cols]
    degs = [M.degrees[g] for g in kept_all]
    rels.sort(key=lambda v: (_vec_degree(v, degs, R.weights), min(c for c, _ in v)))
    out = ModulePresentation(R, [M.degrees[g] for g in kept_all], rels, minimal=True)
    return out, kept_all


def minimal_presentation(M: ModulePresentation) -> ModulePresentation:
    """Isomorphic presentation with a minimal generating set and minimal relations."""
    return minimalize(M)[0]


# ------------------------------------------------------------ resolutions


def default_cap(R: QuotientRing) -> int:
    return R.dim + 4


@dataclass
class BettiTable:
    """beta_{i,j}: number of degree-j generators of the i-th free module."""

    entries: dict  # {(i, Fraction j): count}
    length: int  # homological degrees 0..length were computed
    complete: bool  # True when the resolution provably stops (some F_i = 0)

    def betti(self, i: int) -> int:
        return sum(c for (k, _), c in self.entries.items() if k == i)

    def totals(self) -> list[int]:
        return [self.betti(i) for i in range(self.length + 1)]

    def projective_dimension(self) -> int | None:
        """pd when certified finite, else None (beta_i > 0 for every computed i)."""
        for i in range(self.length + 1):
            if self.betti(i) == 0:
                return i - 1
        return None

    def degrees(self) -> list[Fraction]:
        return sorted({j for _, j in self.entries})

    def to_dict(self) -> dict:
        table = {}
        for (i, j), c in sorted(self.entries.items()):
            table.setdefault(str(i), {})[str(j)] = c
        return {"totals": self.totals(), "table": table, "length": self.length, "complete": self.complete}

    def to_text(self) -> str:
        cols = list(range(self.length + 1))
        degs = self.degrees()
        header = ["deg\\i"] + [str(i) for i in cols]
        lines = [header]
        for j in degs:
            row = [str(j)]
            for i in cols:
                c = self.entries.get((i, j), 0)
                row.append(str(c) if c else ".")
            lines.append(row)
        lines.append(["total:"] + [str(t) for t in self.totals()])
        widths = [max(len(r[k]) for r in lines) for k in range(len(header))]
        return "\n".join("  ".join(s.rjust(w) for s, w in zip(r, widths)) for r in lines)

    def __eq__(self, other):
        if not isinstance(other, BettiTable):
            return NotImplemented
        n = min(self.length, other.length)
        a = {k: v for k, v in self.entries.items() if k[0] <= n}
        b = {k: v for k, v in other.entries.items() if k[0] <= n}
        return a == b


@dataclass
class FreeResolution:
    """Minimal graded free resolution, truncated at homological degree ``cap``.

    ``degrees[i]`` are the generator degrees of F_i and ``differentials[i-1]``
    holds the columns of d_i : F_i -> F_{i-1} as vectors indexed by F_{i-1}.
    """

    ring: QuotientRing
    module: ModulePresentation
    degrees: list
    differentials: list
    cap: int

    @property
    def length(self) -> int:
        return len(self.degrees) - 1

    @property
    def complete(self) -> bool:
        return len(self.degrees[-1]) == 0

    def rank(self, i: int) -> int:
        if i < len(self.degrees):
            return len(self.degrees[i])
        if self.complete:
            return 0
        raise CapExceeded(f"resolution computed only to homological degree {self.length}")

    def differential(self, i: int) -> list[dict]:
        """Columns of d_i (i >= 1)."""
        if i - 1 < len(self.differentials):
            return self.differentials[i - 1]
        if self.complete:
            return []
        raise CapExceeded(f"d_{i} beyond the computed range")

    def betti_table(self) -> BettiTable:
        entries = {}
        for i, degs in enumerate(self.degrees):
            for d in degs:
                entries[(i, d)] = entries.get((i, d), 0) + 1
        length = self.cap if self.complete else self.length
        return BettiTable(entries, length, self.complete)

    def betti_numbers(self) -> list[int]:
        return self.betti_table().totals()

    def check_complex(self) -> bool:
        """d_i * d_{i+1} == 0 modulo I, for all computed i."""
        R = self.ring
        p = R.p
        for i in range(1, len(self.differentials)):
            d_i = self.differentials[i - 1]
            for col in self.differentials[i]:
                acc: dict = {}
                for (k, m), c in col.items():
                    for (c2, m2), v in d_i[k].items():
                        t = (c2, tuple(a + b for a, b in zip(m, m2)))
                        nv = (acc.get(t, 0) + c * v) % p
                        if nv:
                            acc[t] = nv
                        else:
                            acc.pop(t, None)
                if R.nf_vec(acc):
                    return False
        return True

    def check_minimal(self) -> bool:
        """Every entry of every differential lies in the maximal ideal."""
        zero = self.ring.ambient.zero_mono()
        return all(m != zero for d in self.differentials for col in d for (_, m) in col)


# callables invoked on every freshly computed resolution (used by structural test harnesses)
resolution_observers: list = []


def free_resolution(M: ModulePresentation, cap: int | None = None) -> FreeResolution:
    """Minimal free resolution of M up to homological degree ``cap``."""
    R = M.ring
    L = default_cap(R) if cap is None else cap
    if L < 1:
        raise ValueError("resolution cap must be at least 1")
    cache = M.__dict__.setdefault("_resolutions", {})
    for length, res in cache.items():
        if length >= L or res.complete:
            return _truncate(res, L)
    Mmin = minimal_presentation(M)
    degrees = [list(Mmin.degrees)]
    diffs = []
    current = list(Mmin.relations)
    if Mmin.ngens:
        degrees.append([_vec_degree(v, degrees[0], R.weights) for v in current])
        diffs.append(current)
    else:
        degrees.append([])
    while len(degrees) - 1 < L and degrees[-1]:
        src = degrees[-1]
        ker = kernel(R.ambient, current, degrees[-2], (), src, R.ideal_basis)
        ker.sort(key=lambda v: (_vec_degree(v, src, R.weights), min(c for c, _ in v)))
        degrees.append([_vec_degree(v, src, R.weights) for v in ker])
        diffs.append(ker)
        current = ker
    res = FreeResolution(R, Mmin, degrees, diffs, L)
    cache[L] = res
    for observer in resolution_observers:
        observer(res)
    return res


def _truncate(res: FreeResolution, L: int) -> FreeResolution:
    if res.length <= L:
        return FreeResolution(res.ring, res.module, res.degrees, res.differentials, L if res.complete else res.cap)
    return FreeResolution(res.ring, res.module, res.degrees[: L + 1], res.differentials[:L], L)


def betti_table(M: ModulePresentation, cap: int | None = None) -> BettiTable:
    return free_resolution(M, cap).betti_table()


def syzygy(M: ModulePresentation, i: int) -> ModulePresentation:
    """Omega^i M: image of d_i, presented as coker(d_{i+1}) on F_i."""
    if i < 0:
        raise ValueError("syzygy index must be non-negative")
    if i == 0:
        return M
    res = free_resolution(M, i + 1)
    if i >= len(res.degrees) or not res.degrees[i]:
        return zero_module(M.ring)
    rels = res.differentials[i] if i < len(res.differentials) else []
    return ModulePresentation(M.ring, res.degrees[i], rels, minimal=True)


def transpose(M: ModulePresentation) -> ModulePresentation:
    """Tr M = coker(d_1^T) computed from the minimal presentation of M."""
    Mmin = minimal_presentation(M)
    R = M.ring
    col_degs = Mmin.column_degrees
    rels = []
    for j in range(Mmin.ngens):
        v = {}
        for k, col in enumerate(Mmin.relations):
            for (c, m), val in col.items():
                if c == j:
                    v[(k, m)] = val
        rels.append(v)
    return minimal_presentation(ModulePresentation(R, [-d for d in col_degs], rels))


# ------------------------------------------------------- Hom, Ext, tensor


def _hom_free_into(degrees_F: Sequence, N: ModulePresentation):
    """Hom(F, N) = N^{rank F}: generator degrees and relations."""
    n = N.ngens
    degs = [b - a for a in degrees_F for b in N.degrees]
    rels = []
    for k in range(len(degrees_F)):
        for v in N.relations:
            rels.append({(k * n + c, m): val for (c, m), val in v.items()})
    return degs, rels


def _hom_map_images(diff_cols: list[dict], rank_src: int, N: ModulePresentation, p: int) -> list[dict]:
    """Images of the generators (k, l) of Hom(F_j, N) under precomposition with d_{j+1}."""
    n = N.ngens
    rows: list[dict] = [dict() for _ in range(rank_src)]  # rows[k] = {col m: poly}
    for m_idx, col in enumerate(diff_cols):
        for (k, mono), val in col.items():
            rows[k].setdefault(m_idx, {})[mono] = val
    images = []
    for k in range(rank_src):
        for l in range(n):
            img = {}
            for m_idx, poly in rows[k].items():
                for mono, val in poly.items():
                    img[(m_idx * n + l, mono)] = val
            images.append(img)
    return images


def _homology(R, images_out, tgt_degs, tgt_rels, src_degs, src_rels, images_in) -> tuple[ModulePresentation, list]:
    """ker(out) / (im(in) + src_rels) as a presented module (plus kernel generators)."""
    if images_out is None:
        ker = [{(j, R.ambient.zero_mono()): 1} for j in range(len(src_degs))]
    else:
        ker = kernel(R.ambient, images_out, tgt_degs, tgt_rels, src_degs, R.ideal_basis)
    if not ker:
        return zero_module(R), []
    kdegs = [_vec_degree(v, src_degs, R.weights) for v in ker]
    rels = kernel(R.ambient, ker, src_degs, list(images_in) + list(src_rels), kdegs, R.ideal_basis)
    return minimal_presentation(ModulePresentation(R, kdegs, rels)), ker


def _ext_block(i: int, res: FreeResolution, N: ModulePresentation) -> ModulePresentation:
    R = N.ring
    degs_i, rels_i = _hom_free_into(res.degrees[i], N)
    if not degs_i:
        return zero_module(R)
    if i + 1 < len(res.degrees) and res.degrees[i + 1]:
        degs_o, rels_o = _hom_free_into(res.degrees[i + 1], N)
        out = _hom_map_images(res.differentials[i], len(res.degrees[i]), N, R.p)
        out = [R.nf_vec(v) for v in out]
    else:
        degs_o, rels_o, out = [], [], None
    if i >= 1:
        inc = _hom_map_images(res.differentials[i - 1], len(res.degrees[i - 1]), N, R.p)
        inc = [R.nf_vec(v) for v in inc]
        inc = [v for v in inc if v]
    else:
        inc = []
    module, _ = _homology(R, out, degs_o, rels_o, degs_i, rels_i, inc)
    return module


def ext(i: int, M: ModulePresentation, N: ModulePresentation, cap: int | None = None) -> ModulePresentation:
    """Ext^i_R(M, N) via the minimal resolution of M (Ext^0 = Hom)."""
    _same_ring(M, N)
    R = M.ring
    L = default_cap(R) if cap is None else cap
    if i >= L:
        raise CapExceeded(f"Ext^{i} needs the resolution beyond cap {L}")
    if i < 0:
        return zero_module(R)
    res = free_resolution(M, max(i + 1, 1))
    if i >= len(res.degrees):
        return zero_module(R)
    Nmin = minimal_presentation(N)
    parts = [_ext_block(i, res, B) for B in Nmin.split_blocks()]
    out = zero_module(R)
    for part in parts:
        out = out.direct_sum(part)
    out.minimal = True
    return out


def hom(M: ModulePresentation, N: ModulePresentation) -> ModulePresentation:
    return ext(0, M, N)


def dual(M: ModulePresentation) -> ModulePresentation:
    """M* = Hom_R(M, R)."""
    return hom(M, M.ring.free(1))


def tensor(M: ModulePresentation, N: ModulePresentation) -> ModulePresentation:
    """M (x)_R N = coker(A (x) 1 | 1 (x) B) on generator pairs."""
    _same_ring(M, N)
    R = M.ring
    M, N = minimal_presentation(M), minimal_presentation(N)
    n = N.ngens
    degs = [a + b for a in M.degrees for b in N.degrees]
    rels = []
    for v in M.relations:
        for l in range(n):
            rels.append({(j * n + l, m): val for (j, m), val in v.items()})
    for v in N.relations:
        for j in range(M.ngens):
            rels.append({(j * n + l, m): val for (l, m), val in v.items()})
    return minimal_presentation(ModulePresentation(R, degs, rels))


# ------------------------------------------------------------ depth etc.


def _residue_resolution(R: QuotientRing, length: int) -> FreeResolution:
    k = R.__dict__.get("_residue_field")
    if k is None:
        k = R.residue_field()
        R.__dict__["_residue_field"] = k
    return free_resolution(k, length)


def ext_vanishes(i: int, M: ModulePresentation, N: ModulePresentation) -> bool:
    return ext(i, M, N, cap=max(i + 1, default_cap(M.ring))).ngens == 0


def depth(M: ModulePresentation) -> int:
    """min{i : Ext^i(k, M) != 0}."""
    R = M.ring
    Mmin = minimal_presentation(M)
    if Mmin.ngens == 0:
        raise ZeroModule("depth of the zero module is undefined")
    top = R.dim + 1
    _residue_resolution(R, top + 1)
    k = R.__dict__["_residue_field"]
    for i in range(top + 1):
        if ext(i, k, Mmin, cap=top + 2).ngens:
            return i
    raise RuntimeError("Ext^i(k, M) vanished beyond dim R; engine inconsistency")


def module_dim(M: ModulePresentation) -> int:
    hs = M.hilbert_series
    if hs.is_zero():
        raise ZeroModule("dimension of the zero module is undefined")
    return hs.dim()


def is_mcm(M: ModulePresentation) -> bool:
    return depth(M) == M.ring.dim


# -------------------------------------------------------------- torsion


@dataclass
class TorsionResult:
    torsion: ModulePresentation
    quotient: ModulePresentation
    generators: list  # torsion generators as vectors in the free cover of M
    module: ModulePresentation

    def is_zero(self) -> bool:
        return self.torsion.ngens == 0


def torsion_submodule(M: ModulePresentation) -> TorsionResult:
    """T(M) = ker(M -> M**); valid over reduced rings, where torsion-free means torsionless."""
    R = M.ring
    if not R.is_reduced:
        raise UnsupportedNonReduced(f"{R.name} is not reduced; T(M) = ker(M -> M**) would be wrong")
    M = minimal_presentation(M)
    T = zero_module(R)
    Q = zero_module(R)
    gens = []
    for block_gens, block_rels in M.blocks():
        t, q, g = _torsion_block(M.restrict(block_gens, block_rels))
        T = T.direct_sum(t)
        Q = Q.direct_sum(q)
        # re-express torsion generators in M's own indexing
        for v in g:
            gens.append({(block_gens[c], m): val for (c, m), val in v.items()})
    T.minimal = True
    Q.minimal = True
    return TorsionResult(T, Q, gens, M)


def _torsion_block(M: ModulePresentation):
    R = M.ring
    zero = R.ambient.zero_mono()
    col_degs = M.column_degrees
    # A^T : R^n -> R^m, e_j -> row j of A
    rows = [dict() for _ in range(M.ngens)]
    for k, col in enumerate(M.relations):
        for (j, m), v in col.items():
            rows[j][(k, m)] = v
    neg_cols = [-d for d in col_degs]
    neg_gens = [-d for d in M.degrees]
    if M.nrels:
        K = kernel(R.ambient, rows, neg_cols, (), neg_gens, R.ideal_basis)
    else:
        K = [{(j, zero): 1} for j in range(M.ngens)]
    if not K:
        T_gens = [{(j, zero): 1} for j in range(M.ngens)]
    else:
        kdegs = [_vec_degree(v, neg_gens, R.weights) for v in K]
        # K^T : R^n -> R^s, e_j -> sum_t K[j, t] e_t
        images = [dict() for _ in range(M.ngens)]
        for t, col in enumerate(K):
            for (j, m), v in col.items():
                images[j][(t, m)] = v
        T_gens = kernel(R.ambient, images, [-d for d in kdegs], (), list(M.degrees), R.ideal_basis)
    # T(M) = ker(K^T) / im(A);  M / T(M) = R^n / ker(K^T)
    quotient = minimal_presentation(ModulePresentation(R, M.degrees, T_gens))
    real = [v for v in T_gens if not M.contains(v)]
    if not real:
        return zero_module(R), quotient, []
    tdegs = [_vec_degree(v, M.degrees, R.weights) for v in real]
    rels = kernel(R.ambient, real, M.degrees, list(M.relations), tdegs, R.ideal_basis)
    torsion = minimal_presentation(ModulePresentation(R, tdegs, rels))
    return torsion, quotient, real


# ------------------------------------------------------- Fitting ideals


def _det(R: QuotientRing, mat: list[list[dict]]) -> dict:
    """Determinant by cofactor expansion along the first row, entries reduced mod I."""
    from .algebra import pd_add, pd_mul

    n = len(mat)
    p = R.p
    memo: dict = {}

    def rec(row: int, cols: tuple) -> dict:
        if row == n:
            return {R.ambient.zero_mono(): 1}
        key = (row, cols)
        if key in memo:
            return memo[key]
        total: dict = {}
        for idx, c in enumerate(cols):
            e = mat[row][c]
            if not e:
                continue
            sub = rec(row + 1, cols[:idx] + cols[idx + 1:])
            if sub:
                total = pd_add(total, pd_mul(e, sub, p), p, -1 if idx % 2 else 1)
        total = R.nf(total)
        memo[key] = total
        return total

    return rec(0, tuple(range(n)))


def fitting_ideal(M: ModulePresentation, r: int) -> Ideal:
    """Fitt_r(M) lifted to the ambient ring (always contains I)."""
    R = M.ring
    n, m = M.ngens, M.nrels
    size = n - r
    ideal_gens = list(R.ideal.gens)
    if size <= 0:
        return Ideal(R.ambient, [R.ambient.one()])
    if size > m:
        return Ideal(R.ambient, ideal_gens)
    mat = [[vec_component(M.relations[k], j) for k in range(m)] for j in range(n)]
    minors = []
    seen = set()
    for rows in itertools.combinations(range(n), size):
        for cols in itertools.combinations(range(m), size):
            d = _det(R, [[mat[j][k] for k in cols] for j in rows])
            if d:
                key = frozenset(d.items())
                if key not in seen:
                    seen.add(key)
                    minors.append(Polynomial._raw(R.ambient, d))
    return Ideal(R.ambient, ideal_gens + minors)


def annihilator_of_ideal(R: QuotientRing, J: Ideal) -> Ideal:
    """Ann_R(J / I) lifted: (I : J)."""
    if not R.ideal.gens:
        if all(R.ideal.contains(g) for g in J.gens):
            return Ideal(R.ambient, [R.ambient.one()])
        return Ideal(R.ambient, [])
    return R.ideal.colon(J) if J.gens else Ideal(R.ambient, [R.ambient.one()])


def non_free_locus(M: ModulePresentation) -> Ideal:
    """J(M) = sum_r Fitt_r(M) * Ann(Fitt_{r-1}(M)); V(J(M)) is the non-free locus."""
    R = M.ring
    M = minimal_presentation(M)
    total = Ideal(R.ambient, list(R.ideal.gens))
    prev_ann = Ideal(R.ambient, [R.ambient.one()])  # Ann(Fitt_{-1}) = Ann(0) = R
    for r in range(M.ngens + 1):
        F = fitting_ideal(M, r)
        total = total + (F * prev_ann)
        prev_ann = annihilator_of_ideal(R, F)
    return Ideal(R.ambient, total.gb)


def _ideal_not_in(J: Ideal, prime: Ideal) -> bool:
    return any(not prime.contains(g) for g in J.gens)


@dataclass
class LocalRank:
    prime: Ideal
    rank: int | None  # None means M_p is not free
    evidence: dict = field(default_factory=dict)

    @property
    def free(self) -> bool:
        return self.rank is not None


@dataclass
class LocalRankReport:
    entries: list
    provenance: str

    @property
    def locally_free(self) -> bool:
        return all(e.free for e in self.entries)

    @property
    def has_constant_rank(self) -> bool:
        return self.locally_free and len({e.rank for e in self.entries}) <= 1

    def ranks(self) -> list:
        return [e.rank for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "primes": [
                {"prime": str(e.prime), "rank": e.rank, "free": e.free, "evidence": e.evidence} for e in self.entries
            ],
            "locally_free": self.locally_free,
            "has_constant_rank": self.has_constant_rank,
            "provenance": self.provenance,
        }


def _local_rank_block(M: ModulePresentation, prime: Ideal) -> tuple[int | None, dict]:
    R = M.ring
    for r in range(M.ngens + 1):
        F = fitting_ideal(M, r)
        if _ideal_not_in(F, prime):
            prev = fitting_ideal(M, r - 1) if r > 0 else Ideal(R.ambient, list(R.ideal.gens))
            ann = annihilator_of_ideal(R, prev) if r > 0 else Ideal(R.ambient, [R.ambient.one()])
            free = _ideal_not_in(ann, prime)
            evidence = {
                "first_fitting_not_in_prime": r,
                "ann_previous_fitting_not_in_prime": free,
            }
            return (r if free else None), evidence
    raise RuntimeError("Fitt_n is the unit ideal; unreachable")


def local_rank_at_min_primes(M: ModulePresentation) -> LocalRankReport:
    """For each minimal prime p: the rank of M_p if it is free, else None.

    M_p is free of rank r iff Fitt_r(M) is not in p and Fitt_{r-1}(M)_p = 0,
    the latter tested as Ann(Fitt_{r-1}(M)) not in p.
    """
    R = M.ring
    primes = R.minimal_primes
    M = minimal_presentation(M)
    blocks = M.split_blocks() if M.ngens else []
    entries = []
    for q in primes:
        total = 0
        free = True
        evidence = []
        for B in blocks:
            r, ev = _local_rank_block(B, q)
            evidence.append(ev)
            if r is None:
                free = False
            else:
                total += r
        entries.append(LocalRank(q, total if free else None, {"blocks": evidence}))
    return LocalRankReport(entries, R.minimal_primes_provenance)
