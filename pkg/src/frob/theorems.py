"""Instance verifiers binding the engine to the statements it checks.

Each verifier returns a :class:`VerificationReport`.  Status values:

``pass``
    hypotheses verified and conclusion verified.
``hypotheses_fail``
    some hypothesis is false on this instance; the conclusion is not asserted.
``not_applicable``
    a precondition of the statement (ring type, parameter range) is not met.
``counterexample``
    every hypothesis verified true and the conclusion verified false.
    This should never happen; it signals an engine bug.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import PolyRing, monomials_of_degree
from .frobenius import (
    drs_upper_bound,
    frobenius_functor,
    frobenius_pushforward,
    is_regular_kunz,
    multiplicity,
    smallest_admissible_power,
)
from .hilbert import HilbertSeries
from .modules import (
    CapExceeded,
    ModulePresentation,
    QuotientRing,
    default_cap,
    depth,
    dual,
    ext,
    free_resolution,
    hom,
    local_rank_at_min_primes,
    minimal_presentation,
    non_free_locus,
    syzygy,
    tensor,
    torsion_submodule,
    transpose,
)

STATEMENTS = ("Thm1.3", "Ex1.2", "Lem2.2", "Seq2.2.1", "Lem2.3", "Rem2.4", "Fact2.5", "Cor1.4", "Cor2.6")
SEQUENCE_DEGREE_BOUND = 12


@dataclass
class Hypothesis:
    name: str
    holds: bool
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "holds": self.holds, "evidence": self.evidence}


@dataclass
class VerificationReport:
    statement: str
    instance: dict
    hypotheses: list = field(default_factory=list)
    conclusion: str = "not_asserted"  # holds | fails | not_asserted
    conclusion_evidence: dict = field(default_factory=dict)
    status: str = "pass"
    notes: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def counterexample(self) -> bool:
        return self.status == "counterexample"

    def hypothesis(self, name: str, holds: bool, **evidence) -> bool:
        self.hypotheses.append(Hypothesis(name, bool(holds), _jsonable(evidence)))
        return bool(holds)

    def all_hypotheses_hold(self) -> bool:
        return all(h.holds for h in self.hypotheses)

    def settle(self, conclusion_holds: bool | None, **evidence) -> "VerificationReport":
        """Fix status from the hypotheses and (if asserted) the conclusion."""
        self.conclusion_evidence.update(_jsonable(evidence))
        if not self.all_hypotheses_hold():
            self.status = "hypotheses_fail"
            self.conclusion = "not_asserted"
            return self
        if conclusion_holds is None:
            self.conclusion = "not_asserted"
            self.status = "pass"
            return self
        self.conclusion = "holds" if conclusion_holds else "fails"
        self.status = "pass" if conclusion_holds else "counterexample"
        return self

    def not_applicable(self, reason: str) -> "VerificationReport":
        self.status = "not_applicable"
        self.conclusion = "not_asserted"
        self.notes.append(reason)
        return self

    def to_dict(self, with_timings: bool = False) -> dict:
        out = {
            "statement": self.statement,
            "instance": self.instance,
            "hypotheses": [h.to_dict() for h in self.hypotheses],
            "conclusion": self.conclusion,
            "conclusion_evidence": self.conclusion_evidence,
            "status": self.status,
            "counterexample": self.counterexample,
            "notes": list(self.notes),
        }
        if with_timings:
            out["timings"] = {k: round(v, 6) for k, v in self.timings.items()}
        return out

    def to_text(self) -> str:
        lines = [f"[{self.status}] {self.statement} {self.instance}"]
        for h in self.hypotheses:
            lines.append(f"  hypothesis {h.name}: {'yes' if h.holds else 'no'}  {h.evidence}")
        lines.append(f"  conclusion: {self.conclusion}  {self.conclusion_evidence}")
        for n in self.notes:
            lines.append(f"  note: {n}")
        if self.timings:
            lines.append("  timings: " + ", ".join(f"{k}={v:.3f}s" for k, v in self.timings.items()))
        return "\n".join(lines)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return str(obj)


class _Timer:
    def __init__(self, report: VerificationReport, name: str):
        self.report, self.name = report, name

    def __enter__(self):
        self.t = time.perf_counter()

    def __exit__(self, *exc):
        self.report.timings[self.name] = self.report.timings.get(self.name, 0.0) + time.perf_counter() - self.t


def _instance(R: QuotientRing, **kw) -> dict:
    out = {"ring": R.name, "p": R.p}
    out.update(kw)
    return _jsonable(out)


def _hf_dict(hs: HilbertSeries, upto=None) -> dict:
    if hs.is_zero():
        return {}
    if upto is None:
        if not hs.is_finite_length():
            raise ValueError("finite-length series expected")
        upto = max(e for e, _ in hs.numerator) + sum(hs.weights)
    return {str(d): v for d, v in hs.nonzero_function(upto).items()}


def _depth_or_inf(M: ModulePresentation):
    """depth with the convention depth(0) = infinity (returned as None)."""
    if minimal_presentation(M).ngens == 0:
        return None
    return depth(M)


# ------------------------------------------------------------ Thm 1.3


def verify_theorem_1_3(R: QuotientRing, M: ModulePresentation, n: int, label: str = "M") -> VerificationReport:
    """p^n >= e(R), F^n(M) MCM and M locally free on Min(R) imply M free."""
    rep = VerificationReport("Thm1.3", _instance(R, module=label, n=n))
    if R.dim < 1:
        return rep.not_applicable("dim R must be positive")
    if R.minimal_primes_provenance == "missing":
        return rep.not_applicable("minimal primes not declared")
    q = R.p**n
    with _Timer(rep, "multiplicity"):
        e = multiplicity(R)
    rep.hypothesis("p^n >= e(R)", q >= e, q=q, multiplicity=e)
    Mmin = minimal_presentation(M)
    with _Timer(rep, "frobenius"):
        F = frobenius_functor(Mmin, n)
    with _Timer(rep, "depth"):
        dF = _depth_or_inf(F)
    mcm = dF is None or dF == R.dim
    rep.hypothesis("F^n(M) maximal Cohen-Macaulay", mcm, depth=dF if dF is not None else "inf", dim=R.dim,
                   generators=F.ngens, relations=F.nrels)
    with _Timer(rep, "local_rank"):
        lr = local_rank_at_min_primes(Mmin)
    rep.hypothesis("M locally free on Min(R)", lr.locally_free, local_ranks=lr.to_dict())
    free = Mmin.nrels == 0
    if rep.all_hypotheses_hold():
        return rep.settle(free, minimal_generators=Mmin.ngens, minimal_relations=Mmin.nrels)
    rep.conclusion_evidence["M_free"] = free
    return rep.settle(None)


# ------------------------------------------------------------ Lem 2.2


def sequence_identity(M: ModulePresentation, N: ModulePresentation, upto=SEQUENCE_DEGREE_BOUND, cap=None) -> dict:
    """Degreewise alternating sum of Hilbert functions along
    0 -> Ext^1(Tr M, N) -> M (x) N -> Hom(M*, N) -> Ext^2(Tr M, N) -> 0."""
    R = M.ring
    cap = max(default_cap(R), 3) if cap is None else cap
    TrM = transpose(M)
    e1 = ext(1, TrM, N, cap=cap)
    e2 = ext(2, TrM, N, cap=cap)
    tens = tensor(M, N)
    hm = hom(dual(M), N)
    series = [e1.hilbert_series, tens.hilbert_series, hm.hilbert_series, e2.hilbert_series]
    total: dict = {}
    for sign, hs in zip((1, -1, 1, -1), series):
        for e, c in hs.numerator:
            total[e] = total.get(e, 0) + sign * c
    alt = HilbertSeries.from_dict(total, R.weights)
    bad = {str(d): v for d, v in alt.function(upto).items() if v}
    return {
        "exact": not bad,
        "defects": bad,
        "ext1_gens": e1.ngens,
        "ext2_gens": e2.ngens,
        "tensor_gens": tens.ngens,
        "hom_dual_gens": hm.ngens,
        "degree_bound": upto,
    }


def verify_lemma_2_2(
    R: QuotientRing, M: ModulePresentation, N: ModulePresentation, n: int, label: str = "M,N",
    check_sequence: bool = True,
) -> VerificationReport:
    """(i) M free on the punctured spectrum, (ii) depth(M (x) N) >= n, (iii) depth N >= n-1
    imply Ext^i(Tr M, N) = 0 for 1 <= i <= n.  The exact sequence is checked separately."""
    rep = VerificationReport("Lem2.2", _instance(R, modules=label, n=n))
    if n < 1:
        return rep.not_applicable("n must be positive")
    cap = max(default_cap(R), n + 2)
    with _Timer(rep, "non_free_locus"):
        J = non_free_locus(M)
        jd = J.dim() if not J.is_unit() else -1
    rep.hypothesis("M_p free for p != m", jd <= 0, dim_R_mod_J=jd, J=[str(g) for g in J.gens])
    with _Timer(rep, "tensor_depth"):
        dT = _depth_or_inf(tensor(M, N))
    rep.hypothesis("depth(M (x) N) >= n", dT is None or dT >= n, depth=dT if dT is not None else "inf")
    with _Timer(rep, "depth_N"):
        dN = _depth_or_inf(N)
    rep.hypothesis("depth(N) >= n-1", dN is None or dN >= n - 1, depth=dN if dN is not None else "inf")
    if check_sequence:
        with _Timer(rep, "sequence"):
            seq = sequence_identity(M, N, cap=cap)
        rep.conclusion_evidence["sequence_2_2_1"] = seq
        if not seq["exact"]:
            rep.notes.append("Seq2.2.1: alternating Hilbert function sum is nonzero; see verify_sequence_2_2_1")
    if not rep.all_hypotheses_hold():
        return rep.settle(None)
    with _Timer(rep, "ext"):
        TrM = transpose(M)
        sizes = [ext(i, TrM, N, cap=cap).ngens for i in range(1, n + 1)]
    return rep.settle(all(s == 0 for s in sizes), ext_generators=sizes)


def verify_sequence_2_2_1(R: QuotientRing, M: ModulePresentation, N: ModulePresentation, label: str = "M,N",
                          upto=SEQUENCE_DEGREE_BOUND) -> VerificationReport:
    """The four-term sequence is exact for all M, N; check it degreewise on Hilbert functions."""
    rep = VerificationReport("Seq2.2.1", _instance(R, modules=label, degree_bound=upto))
    with _Timer(rep, "sequence"):
        seq = sequence_identity(M, N, upto=upto)
    return rep.settle(seq["exact"], **seq)


# ------------------------------------------------------------ Lem 2.3


def verify_lemma_2_3(
    R: QuotientRing, M: ModulePresentation, n: int, t: int = 1, label: str = "M", cap: int | None = None,
    seed: int = 0,
) -> VerificationReport:
    """Ext^i(M, phi^n R) = 0 for t <= i < t + d implies pd M < t."""
    rep = VerificationReport("Lem2.3", _instance(R, module=label, n=n, t=t))
    d = R.dim
    if d < 1 or t < 1:
        return rep.not_applicable("needs dim R >= 1 and t >= 1")
    L = default_cap(R) if cap is None else cap
    if t + d - 1 >= L:
        raise CapExceeded(f"Lemma 2.3 needs Ext up to {t + d - 1} but the cap is {L}")
    q = R.p**n
    with _Timer(rep, "drs"):
        cert = drs_upper_bound(R, q, seed=seed)
    rep.hypothesis("p^n >= drs(R)", cert.holds, certificate=cert.to_dict())
    with _Timer(rep, "multiplicity"):
        e = multiplicity(R)
    rep.hypothesis("p^n >= drs(R_p) for p in Min(R)", q >= e, route="p^n >= e(R) >= drs(R_p)", q=q, multiplicity=e)
    rep.notes.append("minimal-prime drs bound discharged through p^n >= e(R)")
    with _Timer(rep, "pushforward"):
        push = frobenius_pushforward(R.free(1), n)
    Mmin = minimal_presentation(M)
    with _Timer(rep, "ext"):
        sizes = {i: ext(i, Mmin, push.module, cap=L).ngens for i in range(t, t + d)}
    rep.hypothesis("Ext^i(M, phi^n R) = 0 for t <= i < t+d", all(s == 0 for s in sizes.values()),
                   ext_generators=sizes)
    with _Timer(rep, "resolution"):
        res = free_resolution(Mmin, max(t, 1))
        beta_t = res.rank(t)
    return rep.settle(beta_t == 0, beta_t=beta_t, betti=res.betti_table().totals())


def verify_remark_2_4(R: QuotientRing, extra_powers: int = 1, seed: int = 0) -> VerificationReport:
    """Operational form: once a certificate exists at the first p-power q >= e(R),
    certificates exist at that q and the following powers of p as well."""
    rep = VerificationReport("Rem2.4", _instance(R, extra_powers=extra_powers))
    if R.dim < 1:
        return rep.not_applicable("dim R must be positive")
    e = multiplicity(R)
    q0 = R.p ** smallest_admissible_power(R)
    base = drs_upper_bound(R, q0, seed=seed)
    rep.hypothesis("certificate at the first p-power q >= e(R)", base.holds, q=q0, multiplicity=e,
                   certificate=base.to_dict())
    rep.notes.append("the inequality e(R) >= drs(R) itself is not asserted over a finite field")
    qs = [q0 * R.p**k for k in range(1, extra_powers + 1)]
    certs = {q: drs_upper_bound(R, q, seed=seed) for q in qs}
    return rep.settle(all(c.holds for c in certs.values()), certificates={q: c.to_dict() for q, c in certs.items()})


# ------------------------------------------------------------ Fact 2.5


def verify_fact_2_5(R: QuotientRing, M: ModulePresentation, L: int | None = None, label: str = "M",
                    powers=(1, 2)) -> VerificationReport:
    """Over a non-regular ring every Frobenius pushforward of M != 0 has beta_j > 0 for j <= L."""
    L = default_cap(R) if L is None else L
    rep = VerificationReport("Fact2.5", _instance(R, module=label, L=L, powers=list(powers)))
    with _Timer(rep, "kunz"):
        regular = is_regular_kunz(R)
    if regular:
        return rep.not_applicable("ring is regular")
    if minimal_presentation(M).ngens == 0:
        return rep.not_applicable("module is zero")
    rep.hypothesis("R not regular", True)
    tables = {}
    ok = True
    with _Timer(rep, "resolutions"):
        for i in powers:
            push = frobenius_pushforward(M, i)
            res = free_resolution(push.module, L)
            totals = [res.rank(j) if j <= res.length else 0 for j in range(L + 1)]
            tables[str(i)] = totals
            ok = ok and all(b > 0 for b in totals)
    return rep.settle(ok, betti_totals=tables)


# ------------------------------------------------------- Cor 1.4 / 2.6


def verify_corollary_torsion(R: QuotientRing, s: int, n: int) -> VerificationReport:
    """phi^s R (x) phi^n R has nonzero torsion when R is reduced, one-dimensional and not regular."""
    statement = "Cor1.4" if s == n else "Cor2.6"
    rep = VerificationReport(statement, _instance(R, s=s, n=n))
    if not R.is_reduced:
        return rep.not_applicable("ring is not reduced")
    if R.dim != 1:
        return rep.not_applicable("the torsion test is the dimension-one case")
    if is_regular_kunz(R):
        return rep.not_applicable("ring is regular (phi R (x) phi R is free)")
    q = R.p**n
    e = multiplicity(R)
    if q < e:
        return rep.not_applicable(f"p^n = {q} < e(R) = {e}")
    rep.hypothesis("reduced, dim 1, not regular", True)
    rep.hypothesis("p^n >= e(R)", True, q=q, multiplicity=e)
    if statement == "Cor2.6":
        rep.notes.append("threshold read as p^n >= e(R); the literal statement reads n >= e(R)")
    with _Timer(rep, "pushforward"):
        push = frobenius_pushforward(R.free(1), s)
    with _Timer(rep, "functor"):
        F = frobenius_functor(push.module, n)
    with _Timer(rep, "torsion"):
        T = torsion_submodule(F)
    hf = _hf_dict(T.torsion.hilbert_series) if T.torsion.ngens else {}
    return rep.settle(
        T.torsion.ngens > 0,
        torsion_generators=T.torsion.ngens,
        torsion_length=sum(hf.values()),
        torsion_hilbert_function=hf,
        tensor_generators=F.ngens,
        tensor_relations=F.nrels,
    )


def verify_corollary_1_4(R: QuotientRing, include_next: bool = True, max_q: int = 9) -> list[VerificationReport]:
    """Smallest admissible n (p^n >= e(R)) and, when p^(n+1) <= max_q, the next one."""
    n0 = smallest_admissible_power(R)
    n0 = max(n0, 1)
    out = [verify_corollary_torsion(R, n0, n0)]
    if include_next and R.p ** (n0 + 1) <= max_q:
        out.append(verify_corollary_torsion(R, n0 + 1, n0 + 1))
    elif include_next:
        out[0].notes.append(f"next power n = {n0 + 1} skipped: p^n exceeds the size bound {max_q}")
    return out


# ------------------------------------------------------------ Ex 1.2


def example_ring(p: int) -> QuotientRing:
    return QuotientRing(PolyRing(p, ("x", "y")), ["x^2"], name="R_A")


def verify_example_1_2(p: int) -> VerificationReport:
    """R = F_p[x,y]/(x^2), M = R/(xy): F(M) is free, M is not, and drs(R) = p."""
    R = example_ring(p)
    rep = VerificationReport("Ex1.2", _instance(R, module="R/(xy)"))
    if p not in (2, 3, 5):
        rep.notes.append("outside the primes {2, 3, 5} of the bundled checks")
    M = R.cyclic(["x*y"])
    with _Timer(rep, "drs"):
        at_p = drs_upper_bound(R, p)
        at_1 = drs_upper_bound(R, 1)
    with _Timer(rep, "functor"):
        F = frobenius_functor(M, 1)
    with _Timer(rep, "local_rank"):
        lr = local_rank_at_min_primes(M)
    checks = {
        "drs holds at q = p": at_p.holds,
        "drs fails at q = 1": not at_1.holds,
        "F(M) free of rank 1": F.nrels == 0 and F.ngens == 1,
        "M not free": not M.is_free(),
        "M not free at (x)": any((not e.free) and str(e.prime) == "(x)" for e in lr.entries),
    }
    rep.conclusion_evidence["assertions"] = checks
    rep.conclusion_evidence["certificate"] = at_p.to_dict()
    rep.conclusion_evidence["local_ranks"] = lr.to_dict()
    return rep.settle(all(checks.values()))


# ------------------------------------------------------- random modules


def _random_homogeneous(R: QuotientRing, degree, rng: random.Random) -> dict:
    if degree < 1 or Fraction(degree).denominator != 1:
        return {}
    monos = monomials_of_degree(R.weights, int(degree))
    terms = {}
    for m in monos:
        if rng.random() < 0.6:
            c = rng.randrange(R.p)
            if c:
                terms[m] = c
    return R.nf(terms)


def random_module(R: QuotientRing, seed: int, max_gens: int = 3, max_rel_degree: int = 6) -> ModulePresentation:
    """Seeded random graded module.

    Distribution: 1..max_gens generators with degrees in {0, 1}; 1..max_gens+1
    relation columns, each with a column degree chosen so that every entry has
    degree between 1 and ``max_rel_degree`` (entries lie in m); each monomial
    of the right degree enters with probability 0.6 and a uniform coefficient,
    and a column that comes out zero is redrawn (up to 20 times).
    With probability 1/4 the first syzygy of such a module is returned instead.
    """
    rng = random.Random(f"{R.fingerprint()}|{seed}")
    ngens = rng.randint(1, max_gens)
    degrees = [rng.randint(0, 1) for _ in range(ngens)]
    take_syzygy = rng.random() < 0.25
    cols = []
    for _ in range(rng.randint(1, max_gens + 1)):
        for _attempt in range(20):
            D = rng.randint(max(degrees) + 1, min(degrees) + max_rel_degree)
            col = {}
            for j, a in enumerate(degrees):
                for m, c in _random_homogeneous(R, D - a, rng).items():
                    col[(j, m)] = c
            if col:
                cols.append(col)
                break
    M = ModulePresentation(R, degrees, cols)
    if take_syzygy:
        S = syzygy(M, 1)
        if S.ngens:
            return S
    return M
