import random

from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from frob.algebra import PolyRing, mono_divides
from frob.groebner import Ideal, member, normal_form, s_polynomial

P2 = PolyRing(2, ("x", "y", "z"))
P3w = PolyRing(3, ("x", "y", "z"), (1, 2, 3))


def random_homogeneous(ring, degree, rng, density=0.5):
    monos = oracles.monomials(ring.weights, degree)
    return ring.poly({m: rng.randrange(1, ring.p) for m in monos if rng.random() < density})


def random_ideal(ring, seed, ngens=3, max_deg=4):
    rng = random.Random(seed)
    gens = [random_homogeneous(ring, rng.randint(1, max_deg), rng) for _ in range(ngens)]
    return Ideal(ring, [g for g in gens if not g.is_zero()] or [ring.gens()[0]])


def oracle_of(I):
    return oracles.GradedRing(I.ring.p, I.ring.weights, [dict(g.terms) for g in I.gens])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([P2, P3w]))
def test_groebner_basis_properties(seed, ring):
    I = random_ideal(ring, seed)
    gb = I.gb
    # Buchberger criterion: all S-polynomials reduce to zero
    for i in range(len(gb)):
        for j in range(i + 1, len(gb)):
            assert normal_form(s_polynomial(gb[i], gb[j]), gb).is_zero()
    # reduced: no term of an element is divisible by another leading monomial
    for i, g in enumerate(gb):
        for m in g.terms:
            for j, h in enumerate(gb):
                if i != j:
                    assert not mono_divides(h.leading_monomial(), m)
    # same ideal as the generators, checked degreewise by linear algebra
    O = oracle_of(I)
    for g in gb:
        assert O.contains(g.terms)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([P2, P3w]))
def test_normal_form_and_membership_match_oracle(seed, ring):
    I = random_ideal(ring, seed)
    O = oracle_of(I)
    rng = random.Random(seed + 1)
    for _ in range(4):
        f = random_homogeneous(ring, rng.randint(1, 6), rng, 0.7)
        nf = normal_form(f, I)
        assert O.contains((f - nf).terms)
        assert member(f, I) == O.contains(f.terms)
        for m in nf.terms:
            assert not any(mono_divides(lm, m) for lm in I.leading_monomials())


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_hilbert_function_matches_oracle(seed):
    I = random_ideal(P3w, seed)
    O = oracle_of(I)
    hs = I.hilbert_series()
    for d in range(0, 12):
        assert hs.coefficient(d) == O.dim(d)


def test_colon_intersection_saturation():
    I = Ideal(P2, ["x*y", "y*z"])
    assert I.colon(Ideal(P2, ["y"])) == Ideal(P2, ["x", "z"])
    assert I.intersect(Ideal(P2, ["x"])) == Ideal(P2, ["x*y"])
    J = Ideal(P2, ["x^2", "x*y"])
    assert J.saturation(Ideal(P2, ["x", "y", "z"])) == J  # (x^2, y) is not m-primary here
    assert J.saturation(Ideal(P2, ["x", "y"])) == Ideal(P2, ["x"])
    assert I.dim() == 2


def test_bracket_power():
    m = Ideal(P2, ["x", "y + z"])
    assert m.bracket_power(4) == Ideal(P2, ["x^4", "y^4 + z^4"])


def test_spec_examples():
    Q = PolyRing(2, ("x", "y"))
    assert sorted(str(g) for g in Ideal(Q, ["x^2", "x*y"]).gb) == ["x*y", "x^2"]
    C = PolyRing(2, ("x", "y", "z"), (3, 4, 5))
    IC = Ideal(C, ["y^2 - x*z", "x^3 - y*z", "x^2*y - z^2"])
    # reduced basis equals the input up to scaling
    assert sorted(str(g.monic()) for g in IC.gb) == sorted(str(C.poly(g).monic()) for g in
                                                          ["y^2 - x*z", "x^3 - y*z", "x^2*y - z^2"])
    assert normal_form(C.poly("y^2"), IC) == C.poly("x*z")
    assert Ideal(Q, ["x*y", "x*y + 1"]).is_unit()
    assert normal_form(Q.poly("x^2"), Ideal(Q, ["x^2"])).is_zero()
    assert Ideal(Q, ["x*y"]).colon(Ideal(Q, ["x"])) == Ideal(Q, ["y"])
    assert member(Q.poly("x^2"), Ideal(Q, ["x"]))
    assert Ideal(Q, ["x^2*y"]).saturation(Ideal(Q, ["y"])) == Ideal(Q, ["x^2"])
    assert Ideal(Q, ["x", "y"]).bracket_power(1) == Ideal(Q, ["x", "y"])


def test_hilbert_series_examples():
    Q = PolyRing(2, ("x", "y"))
    hs = Ideal(Q, ["x^2"]).hilbert_series()
    assert [hs.coefficient(d) for d in range(5)] == [1, 2, 2, 2, 2]
    assert hs.dim() == 1
    assert Ideal(PolyRing(2, ("x",)), []).dim() == 1
    C = PolyRing(2, ("x", "y", "z"), (3, 4, 5))
    hc = Ideal(C, ["y^2 - x*z", "x^3 - y*z", "x^2*y - z^2"]).hilbert_series()
    S = oracles.semigroup((3, 4, 5), 40)
    assert [hc.coefficient(d) for d in range(40)] == [int(d in S) for d in range(40)]
    assert hc.dim() == 1
