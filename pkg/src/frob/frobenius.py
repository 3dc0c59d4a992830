"""Frobenius functor, Frobenius pushforwards, bracket-power certificates and multiplicity.

Everything here is exact over F_p.  Since c^q = c for c in F_p, taking q-th
powers of polynomials only rescales exponents, and every polynomial splits
uniquely as sum_alpha g_alpha^q x^alpha with 0 <= alpha_i < q.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .algebra import BadFrobeniusPower, Polynomial, is_power_of, monomials_of_degree, wdeg
from .groebner import Ideal
from .modules import (
    ModulePresentation,
    QuotientRing,
    depth,
    free_resolution,
    minimalize,
)


class InternalInconsistency(RuntimeError):
    code = "InternalInconsistency"


class NonStabilized(RuntimeError):
    code = "NonStabilized"


HILBERT_SAMUEL_CAP = 64
RANDOM_SOPS_PER_DEGREE = 32


def _q(R: QuotientRing, n: int) -> int:
    if n < 0:
        raise BadFrobeniusPower(f"Frobenius power must be non-negative, got {n}")
    return R.p**n


# ------------------------------------------------------------ functor


def frobenius_power_vec(v: dict, q: int) -> dict:
    return {(c, tuple(q * e for e in m)): val for (c, m), val in v.items()}


def frobenius_functor_raw(M: ModulePresentation, n: int) -> ModulePresentation:
    """coker of the entrywise q-th power of M's relation matrix, before minimalization."""
    R = M.ring
    q = _q(R, n)
    rels = [frobenius_power_vec(v, q) for v in M.relations]
    return ModulePresentation(R, [q * d for d in M.degrees], rels)


def frobenius_functor(M: ModulePresentation, n: int) -> ModulePresentation:
    """F^n(M) = M (x)_R phi^n R, minimalized."""
    if n == 0:
        return minimalize(M)[0]
    return minimalize(frobenius_functor_raw(M, n))[0]


# -------------------------------------------------------- pushforward


def split_q(v: dict, q: int, labels: dict, nvars: int) -> dict:
    """Write each term c x^(q*g + a) e_j as c x^g E_(a, j); ``labels`` maps (a, j) to indices."""
    out: dict = {}
    for (j, m), c in v.items():
        alpha = tuple(e % q for e in m)
        gamma = tuple(e // q for e in m)
        out[(labels[(alpha, j)], gamma)] = c
    return out


@dataclass
class PushforwardPresentation:
    """phi^n M as an R-module, generated by the classes of x^alpha e_j."""

    module: ModulePresentation
    q: int
    labels: list  # (alpha, j) for each surviving generator, in order
    source: ModulePresentation
    raw: ModulePresentation | None = None
    all_labels: list = field(default_factory=list)

    @property
    def ngens(self) -> int:
        return self.module.ngens

    def generator_label(self, k: int) -> str:
        alpha, j = self.labels[k]
        ring = self.source.ring.ambient
        mono = "*".join(
            f"{v}^{e}" if e > 1 else v for v, e in zip(ring.variables, alpha) if e
        ) or "1"
        return mono if self.source.ngens == 1 else f"{mono}*e{j}"

    def fractional_degrees(self) -> list[str]:
        return [str(d) for d in self.module.degrees]

    def check_twist(self, var: int, k: int) -> bool:
        """x_var . E_k equals split(x_var^q x^alpha e_j) modulo the raw relations."""
        if self.raw is None:
            return True
        R = self.source.ring
        index = {lab: i for i, lab in enumerate(self.all_labels)}
        alpha, j = self.all_labels[k]
        nv = R.nvars
        unit = tuple(int(i == var) for i in range(nv))
        lhs = {(k, unit): 1}
        mono = tuple(a + self.q * u for a, u in zip(alpha, unit))
        rhs = split_q({(j, mono): 1}, self.q, index, nv)
        diff = dict(lhs)
        for t, c in rhs.items():
            val = (diff.get(t, 0) - c) % R.p
            if val:
                diff[t] = val
            else:
                diff.pop(t, None)
        return not diff or self.raw.contains(diff)

    def to_dict(self) -> dict:
        out = self.module.to_dict()
        out["q"] = self.q
        out["labels"] = [self.generator_label(k) for k in range(self.ngens)]
        return out


def _pushforward_raw(M: ModulePresentation, q: int) -> tuple[ModulePresentation, list]:
    R = M.ring
    P = R.ambient
    nv = R.nvars
    alphas = list(itertools.product(range(q), repeat=nv))
    labels = [(a, j) for j in range(M.ngens) for a in alphas]
    index = {lab: i for i, lab in enumerate(labels)}
    degrees = [(M.degrees[j] + wdeg(a, P.weights)) / q for a, j in labels]
    sources = list(M.relations)
    for h in R.ideal.gens:
        for j in range(M.ngens):
            sources.append({(j, m): c for m, c in h.terms.items()})
    rels = []
    # deterministic order: by (beta, source index)
    for beta in alphas:
        for v in sources:
            shifted = {(j, tuple(a + b for a, b in zip(m, beta))): c for (j, m), c in v.items()}
            rels.append(split_q(shifted, q, index, nv))
    return ModulePresentation(R, degrees, rels), labels


def frobenius_pushforward(M: ModulePresentation, n: int, keep_raw: bool = False) -> PushforwardPresentation:
    """phi^n M presented on the generators x^alpha e_j, 0 <= alpha < q, then minimalized."""
    R = M.ring
    q = _q(R, n)
    cache = M.__dict__.setdefault("_pushforwards", {})
    if (n, keep_raw) in cache:
        return cache[(n, keep_raw)]
    if not R.ideal.gens and not M.relations:
        # regular fast path: phi^n of a free module over a polynomial ring is free
        nv = R.nvars
        labels = [(a, j) for j in range(M.ngens) for a in itertools.product(range(q), repeat=nv)]
        degrees = [(M.degrees[j] + wdeg(a, R.weights)) / q for a, j in labels]
        module = ModulePresentation(R, degrees, [], minimal=True)
        out = PushforwardPresentation(module, q, labels, M, module if keep_raw else None, labels)
    else:
        raw, labels = _pushforward_raw(M, q)
        module, kept = minimalize(raw)
        out = PushforwardPresentation(module, q, [labels[k] for k in kept], M, raw if keep_raw else None, labels)
    cache[(n, keep_raw)] = out
    return out


# ----------------------------------------------------------- drs search


@dataclass
class DrsCertificate:
    q: int
    sop: list  # Polynomials
    holds: bool
    log: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "no candidate found"

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "sop": [str(f) for f in self.sop],
            "verdict": self.verdict,
            "log": self.log,
        }


def is_system_of_parameters(R: QuotientRing, elems) -> bool:
    if len(elems) != R.dim:
        return False
    J = Ideal(R.ambient, list(R.ideal.gens) + list(elems))
    return not J.is_unit() and J.dim() == 0


def bracket_contained(R: QuotientRing, q: int, elems) -> bool:
    """m^[q] subset of (elems) in R, tested generator by generator."""
    J = Ideal(R.ambient, list(R.ideal.gens) + list(elems))
    return all(J.contains(x**q) for x in R.ambient.gens())


def _drs_candidates(R: QuotientRing, seed: int, max_degree: int):
    P = R.ambient
    d = R.dim
    rng = random.Random(seed)
    for D in range(1, max_degree + 1):
        monos = [m for e in range(1, D + 1) for m in monomials_of_degree(P.weights, e)]
        top = set(monomials_of_degree(P.weights, D))
        for combo in itertools.combinations(monos, d):
            if not any(m in top for m in combo):
                continue
            yield D, "monomial", [P.monomial(m) for m in combo]
        if not top:
            continue
        top_sorted = sorted(top)
        for _ in range(RANDOM_SOPS_PER_DEGREE):
            elems = []
            for _ in range(d):
                terms = {m: rng.randrange(P.p) for m in top_sorted}
                f = Polynomial(P, terms)
                if not f:
                    f = P.monomial(top_sorted[0])
                elems.append(f)
            yield D, "random", elems


def drs_upper_bound(R: QuotientRing, q: int, seed: int = 0, max_degree: int | None = None) -> DrsCertificate:
    """Search for a system of parameters x with m^[q] in (x); a hit certifies drs(R) <= q."""
    if not is_power_of(q, R.p):
        raise BadFrobeniusPower(f"{q} is not a power of {R.p}")
    if R.dim < 1:
        raise ValueError("drs search needs dim R >= 1")
    key = (q, seed, max_degree)
    cache = R.__dict__.setdefault("_drs", {})
    if key in cache:
        return cache[key]
    if max_degree is None:
        max_degree = max(R.weights) * max(q, 2)
    log: dict = {}
    result = None
    for D, kind, elems in _drs_candidates(R, seed, max_degree):
        entry = log.setdefault(D, {"degree": D, "monomial": 0, "random": 0, "sops": 0})
        entry[kind] += 1
        if not is_system_of_parameters(R, elems):
            continue
        entry["sops"] += 1
        if bracket_contained(R, q, elems):
            result = DrsCertificate(q, elems, True, list(log.values()))
            break
    if result is None:
        result = DrsCertificate(q, [], False, list(log.values()))
    cache[key] = result
    return result


def check_certificate(R: QuotientRing, cert: DrsCertificate) -> bool:
    """Replay a certificate from its data alone."""
    if not cert.holds:
        return True
    return is_system_of_parameters(R, cert.sop) and bracket_contained(R, cert.q, cert.sop)


# ---------------------------------------------------------- multiplicity


def hilbert_samuel_length(R: QuotientRing, s: int) -> int:
    """length of R / m^(s+1)."""
    P = R.ambient
    gens = [P.monomial(m) for m in _standard_monomials_of_total_degree(P.nvars, s + 1)]
    J = Ideal(P, list(R.ideal.gens) + gens)
    return J.hilbert_series().length()


@lru_cache(maxsize=None)
def _standard_monomials_of_total_degree(nv: int, d: int) -> tuple:
    return tuple(monomials_of_degree((1,) * nv, d))


def multiplicity(R: QuotientRing) -> int:
    """e(R) from the Hilbert-Samuel function of the irrelevant maximal ideal."""
    cached = R.__dict__.get("_multiplicity")
    if cached is not None:
        return cached
    d = R.dim
    if d < 1:
        raise ValueError("multiplicity is computed here for dim R >= 1")
    values = []
    window = d + 3
    for s in range(HILBERT_SAMUEL_CAP):
        values.append(hilbert_samuel_length(R, s))
        if len(values) >= window:
            diffs = values[-window:]
            for _ in range(d):
                diffs = [b - a for a, b in zip(diffs, diffs[1:])]
            if len(set(diffs)) == 1:
                e = diffs[0]
                if e < 1:
                    raise InternalInconsistency(f"non-positive multiplicity {e}")
                R.__dict__["_multiplicity"] = e
                return e
    raise NonStabilized(f"Hilbert-Samuel differences did not stabilize within {HILBERT_SAMUEL_CAP} steps")


# ------------------------------------------------------------ regularity


def is_regular_kunz(R: QuotientRing) -> bool:
    """phi R is free; cross-checked against dim R = embedding dimension."""
    cached = R.__dict__.get("_kunz")
    if cached is not None:
        return cached
    push = frobenius_pushforward(R.free(1), 1)
    kunz = push.module.nrels == 0
    if kunz != R.is_regular():
        raise InternalInconsistency(
            f"Kunz test says regular={kunz} but dim/embedding-dimension test says {R.is_regular()}"
        )
    R.__dict__["_kunz"] = kunz
    return kunz


@dataclass
class RingInvariants:
    dim: int
    depth: int
    multiplicity: int
    drs_bounds: dict  # q -> DrsCertificate
    is_regular: bool

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "depth": self.depth,
            "multiplicity": self.multiplicity,
            "drs_bounds": {str(q): c.to_dict() for q, c in self.drs_bounds.items()},
            "is_regular": self.is_regular,
        }


def ring_invariants(R: QuotientRing, qs=None, seed: int = 0) -> RingInvariants:
    e = multiplicity(R)
    if qs is None:
        qs = [1]
        while qs[-1] < e:
            qs.append(qs[-1] * R.p)
    bounds = {q: drs_upper_bound(R, q, seed) for q in qs}
    return RingInvariants(R.dim, depth(R.free(1)), e, bounds, is_regular_kunz(R))


def smallest_admissible_power(R: QuotientRing) -> int:
    """Least n with p^n >= e(R)."""
    e = multiplicity(R)
    n, q = 0, 1
    while q < e:
        n += 1
        q *= R.p
    return n


def pushforward_betti(M: ModulePresentation, n: int, cap: int):
    return free_resolution(frobenius_pushforward(M, n).module, cap).betti_table()


def degree_grid(M: ModulePresentation) -> Fraction:
    """Common denominator of M's generator degrees."""
    return Fraction(1, math.lcm(1, *(d.denominator for d in M.degrees)))
