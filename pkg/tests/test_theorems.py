import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import RINGS, oracle_module, oracle_ring, ring_A, ring_B, ring_C
from frob import frobenius as fb
from frob import modules as md
from frob import theorems as th
from frob.algebra import PolyRing
from frob.modules import QuotientRing


def hyp(report):
    return {h.name: h.holds for h in report.hypotheses}


# ------------------------------------------------------------- reports


@given(st.lists(st.booleans(), max_size=4), st.one_of(st.none(), st.booleans()))
def test_counterexample_flag_invariant(hyps, conclusion):
    rep = th.VerificationReport("Thm1.3", {})
    for i, h in enumerate(hyps):
        rep.hypothesis(f"h{i}", h)
    rep.settle(conclusion)
    assert rep.counterexample == (all(hyps) and conclusion is False)
    if not all(hyps):
        assert rep.status == "hypotheses_fail" and rep.conclusion == "not_asserted"
    json.dumps(rep.to_dict())


def test_report_serialization_has_no_timings_by_default():
    rep = th.verify_example_1_2(2)
    d = rep.to_dict()
    assert "timings" not in d and "timings" in rep.to_dict(with_timings=True)
    assert "timings" in rep.to_text()


# ------------------------------------------------------------- Thm 1.3


def test_theorem_1_3_example_ring():
    rep = th.verify_theorem_1_3(ring_A(2), ring_A(2).cyclic(["x*y"]), 1)
    assert rep.status == "hypotheses_fail"
    assert hyp(rep) == {
        "p^n >= e(R)": True,
        "F^n(M) maximal Cohen-Macaulay": True,
        "M locally free on Min(R)": False,
    }


def test_theorem_1_3_free_passes():
    for mk in RINGS.values():
        R = mk(2)
        rep = th.verify_theorem_1_3(R, R.free(2), fb.smallest_admissible_power(R))
        assert rep.status == "pass" and rep.conclusion == "holds"


def test_theorem_1_3_regression_R_B_mod_x():
    # F(R_B/(x)) = R_B/(x^2) has depth 0, so the theorem's hypotheses fail
    rep = th.verify_theorem_1_3(ring_B(2), ring_B(2).cyclic(["x"]), 1)
    assert rep.status == "hypotheses_fail" and not rep.counterexample
    h = hyp(rep)
    assert h["F^n(M) maximal Cohen-Macaulay"] is False
    assert h["M locally free on Min(R)"] is True and h["p^n >= e(R)"] is True


def test_theorem_1_3_needs_primes():
    P = PolyRing(2, ("x", "y", "z"), (3, 4, 5))
    R = QuotientRing(P, ["y^2 - x*z", "x^3 - y*z", "x^2*y - z^2"])
    assert th.verify_theorem_1_3(R, R.free(1), 2).status == "not_applicable"


# ------------------------------------------------------------- Lem 2.2


def test_lemma_2_2_free_module():
    R = ring_B(2)
    rep = th.verify_lemma_2_2(R, R.free(1), R.free(1), 1)
    assert rep.status == "pass" and rep.conclusion == "holds"


def test_lemma_2_2_R_B_mod_x():
    R = ring_B(2)
    M = R.cyclic(["x"])
    rep = th.verify_lemma_2_2(R, M, M, 1)
    assert rep.status == "pass" and rep.conclusion_evidence["ext_generators"] == [0]
    assert rep.conclusion_evidence["sequence_2_2_1"]["exact"]
    # independent pin: Ext^1(Tr M, M) from the degreewise oracle
    T = md.transpose(M)
    O = oracles.DegreewiseResolution(oracle_module(T), 3, 10)
    ON = oracle_module(M)
    assert all(O.ext_dim(1, ON, e) == 0 for e in range(-10, 10))


def test_lemma_2_2_vacuous_when_depth_fails():
    R = ring_B(2)
    M = R.residue_field()
    rep = th.verify_lemma_2_2(R, M, R.free(1), 1)
    assert rep.status == "hypotheses_fail"


def test_sequence_statement_separately():
    R = ring_C(2)
    M = th.random_module(R, 3)
    rep = th.verify_sequence_2_2_1(R, M, R.free(1))
    assert rep.status == "pass"


# ------------------------------------------------------------- Lem 2.3


def test_lemma_2_3_free():
    R = ring_A(2)
    rep = th.verify_lemma_2_3(R, R.free(1), 1)
    assert rep.status == "pass" and rep.conclusion_evidence["beta_t"] == 0


@pytest.mark.parametrize("gens", [["x"], ["x", "y"]])
def test_lemma_2_3_ext_nonvanishing_pinned_by_oracle(gens):
    R = ring_A(2)
    M = R.cyclic(gens)
    rep = th.verify_lemma_2_3(R, M, 1)
    assert rep.status == "hypotheses_fail"
    push = fb.frobenius_pushforward(R.free(1), 1).module
    E = md.ext(1, M, push)
    assert E.ngens > 0
    O = oracles.DegreewiseResolution(oracle_module(M), 3, 8)
    ON = oracle_module(push)
    degs = [Fraction(k, 2) for k in range(-12, 8)]
    got = [E.hilbert_series.coefficient(e) for e in degs]
    assert got == [O.ext_dim(1, ON, e) for e in degs]
    assert any(got)


def test_lemma_2_3_cap():
    R = ring_A(2)
    with pytest.raises(md.CapExceeded):
        th.verify_lemma_2_3(R, R.free(1), 1, t=3, cap=3)


# ----------------------------------------------------- Rem 2.4, Fact 2.5


def test_remark_2_4():
    for mk in RINGS.values():
        rep = th.verify_remark_2_4(mk(2))
        assert rep.status == "pass"


def test_fact_2_5_examples():
    R = ring_A(2)
    rep = th.verify_fact_2_5(R, R.free(1), powers=(1,))
    assert rep.status == "pass"
    assert rep.conclusion_evidence["betti_totals"]["1"] == [4] * (md.default_cap(R) + 1)
    P = QuotientRing(PolyRing(2, ("x", "y")), [])
    assert th.verify_fact_2_5(P, P.free(1)).status == "not_applicable"
    C = ring_C(2)
    assert th.verify_fact_2_5(C, C.free(1), powers=(1,)).status == "pass"


# ------------------------------------------------------- Cor 1.4 / 2.6


def test_corollary_examples():
    rep = th.verify_corollary_torsion(ring_C(2), 2, 2)
    assert rep.statement == "Cor1.4" and rep.status == "pass"
    assert rep.conclusion_evidence["torsion_generators"] > 0
    rep3 = th.verify_corollary_torsion(ring_C(3), 1, 1)
    assert rep3.status == "pass"
    P = QuotientRing(PolyRing(2, ("x",)), [], minimal_primes=[[]])
    assert th.verify_corollary_torsion(P, 1, 1).status == "not_applicable"
    # below the threshold p^n >= e(R)
    assert th.verify_corollary_torsion(ring_C(2), 1, 1).status == "not_applicable"


def test_corollary_2_6_records_threshold_reading():
    rep = th.verify_corollary_torsion(ring_C(2), 1, 2)
    assert rep.statement == "Cor2.6" and rep.status == "pass"
    assert any("n >= e(R)" in n for n in rep.notes)


def test_corollary_1_4_runs_two_powers():
    reps = th.verify_corollary_1_4(ring_C(2))
    assert [r.instance["n"] for r in reps] == [2, 3]
    assert all(r.status == "pass" for r in reps)
    reps = th.verify_corollary_1_4(ring_C(5))
    assert len(reps) == 1 and reps[0].notes


# ------------------------------------------------------------- Ex 1.2


@pytest.mark.parametrize("p", [2, 3, 5])
def test_example_1_2(p):
    rep = th.verify_example_1_2(p)
    assert rep.status == "pass"
    assert all(rep.conclusion_evidence["assertions"].values())
    assert len(rep.conclusion_evidence["assertions"]) == 5


# ------------------------------------------------------- random modules


def test_random_module_deterministic():
    for mk in RINGS.values():
        R = mk(3)
        for s in range(5):
            a, b = th.random_module(R, s), th.random_module(R, s)
            assert a.degrees == b.degrees and a.relations == b.relations


def test_random_module_shape():
    for mk in RINGS.values():
        R = mk(2)
        for s in range(30):
            M = th.random_module(R, s)
            for v in M.relations:
                for (j, m), c in v.items():
                    assert any(m)  # entries lie in m
