import random

import pytest
from hypothesis import given, settings, strategies as st

from optwist.core import koszul_sign
from optwist.freeop import (ALPHA, AINF, Alphabet, Derivation, IndexOutOfRange, OperadElement,
                            UnknownGenerator, arity, corolla, d_mu, decode, degree, derivation_apply,
                            encode, graft, labels, mc_ainfty_differential, mu, mu_alpha,
                            tw_differential, verify_diffmu)


def el(*pairs):
    return OperadElement({decode(s): c for s, c in pairs})


def test_encoding_round_trip():
    for s in ["mu2(alpha,mu2(-,-))", "mu3(-,alpha,-)", "alpha", "mu2(mu2(-,-),-)"]:
        assert encode(decode(s)) == s
    t = decode("mu2(alpha,mu2(-,-))")
    assert arity(t) == 2 and degree(t) == -1
    assert labels(t) == ["mu2", "alpha", "mu2"]
    with pytest.raises(ValueError):
        decode("mu2(-,-))")


def test_graft_examples():
    m2 = corolla(mu(2))
    assert graft(m2, 1, m2) == el(("mu2(mu2(-,-),-)", 1))
    assert graft(m2, 1, ALPHA) == el(("mu2(alpha,-)", 1))
    assert graft(m2, 2, ALPHA) == el(("mu2(-,alpha)", 1))
    with pytest.raises(IndexOutOfRange):
        graft(m2, 3, ALPHA)
    with pytest.raises(IndexOutOfRange):
        graft(ALPHA, 1, m2)


def test_graft_sign_matches_sign_engine():
    # odd binary generator b: inserting it at leaf 1 of b moves it past b's label
    A = Alphabet({"b": (2, 1, 0), "c": (1, 1, 0)}, ainfty=False)
    r = graft(("b", None, None), 1, ("c", None), A)
    t = decode("b(c(-),-)")
    assert r.terms == {t: koszul_sign([1, 1], [0, 1])}
    r = graft(("b", ("c", None), None), 2, ("c", None), A)
    # the inserted block sits after both labels: no crossing
    assert r.terms == {decode("b(c(-),c(-))"): 1}


def test_mc_differential_values():
    d = mc_ainfty_differential()
    assert d_mu(2).is_zero()
    assert d_mu(3) == el(("mu2(mu2(-,-),-)", 1), ("mu2(-,mu2(-,-))", -1))
    assert d.on("alpha", 3) == el(("mu2(alpha,alpha)", -1), ("mu3(alpha,alpha,alpha)", -1))


def test_mu_alpha_examples():
    assert mu_alpha(3, 0) == el(("mu3(-,-,-)", 1))
    assert mu_alpha(1, 1) == el(("mu2(-,alpha)", -1), ("mu2(alpha,-)", 1))
    assert mu_alpha(0, 3) == el(("mu2(alpha,alpha)", 1), ("mu3(alpha,alpha,alpha)", 1))


def test_tw_differential_on_alpha():
    tw = tw_differential(3)
    assert derivation_apply(tw, ALPHA, 3) == el(("mu2(alpha,alpha)", 1), ("mu3(alpha,alpha,alpha)", 2))
    tw4 = tw_differential(4)
    assert derivation_apply(tw4, ALPHA, 4) == el(
        ("mu2(alpha,alpha)", 1), ("mu3(alpha,alpha,alpha)", 2), ("mu4(alpha,alpha,alpha,alpha)", 3))


def test_zero_derivation_and_leibniz():
    A = Alphabet({"x": (0, -2, 1)})
    zero = Derivation(-1, lambda name, cap: OperadElement({}, A), A)
    assert derivation_apply(zero, decode("mu2(alpha,alpha)")).is_zero()

    def vals(name, cap):
        return OperadElement({("x",): 1} if name == "alpha" else {}, A)
    D = Derivation(-1, vals, A)
    r = derivation_apply(D, decode("mu2(alpha,alpha)"))
    # the second alpha is reached after passing mu2 (even) and alpha (odd)
    assert r.terms == {decode("mu2(x,alpha)"): 1, decode("mu2(alpha,x)"): -1}
    with pytest.raises(UnknownGenerator):
        derivation_apply(D, decode("nu(-)"))


def test_square_zero():
    d = mc_ainfty_differential()
    for n in range(2, 7):
        assert derivation_apply(d, derivation_apply(d, corolla(mu(n)))).is_zero()
    assert derivation_apply(d, derivation_apply(d, ALPHA, 5), 5).is_zero()
    tw = tw_differential(4)
    assert derivation_apply(tw, derivation_apply(tw, ALPHA, 4), 4).is_zero()
    for n in range(2, 5):
        assert derivation_apply(tw, derivation_apply(tw, corolla(mu(n)), 4), 4).is_zero()


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_diffmu(n):
    for cap in range(5):
        r = verify_diffmu(n, cap)
        assert r, r


def test_diffmu_report_is_nontrivial():
    r = verify_diffmu(2, 3)
    assert not r.lhs.is_zero() and r.first is None
    assert "pass" in repr(r)


# random trees on a mixed-degree alphabet for the operad axioms
MIX = Alphabet({"a": (0, -1, 1), "b": (2, 1, 0), "c": (2, 0, 0), "e": (1, 1, 0), "f": (3, -1, 0)},
               ainfty=False)


def rand_tree(rng, vertices):
    t = corolla(rng.choice("bcef"), MIX)
    for _ in range(vertices - 1):
        g = rng.choice("abcef" if arity(t) > 1 else "bcef")
        i = rng.randint(1, arity(t))
        t = next(iter(graft(t, i, corolla(g, MIX), MIX).terms))
    return t


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_graft_associativity(seed):
    rng = random.Random(seed)
    t1, t2, t3 = (rand_tree(rng, rng.randint(1, 4)) for _ in range(3))
    d2, d3 = degree(t2, MIX), degree(t3, MIX)
    i = rng.randint(1, arity(t1))
    if arity(t2):
        j = rng.randint(1, arity(t2))
        lhs = graft(graft(t1, i, t2, MIX), i + j - 1, t3, MIX)
        rhs = graft(t1, i, graft(t2, j, t3, MIX), MIX)
        assert lhs == rhs
    if arity(t1) >= 2:
        i, k = sorted(rng.sample(range(1, arity(t1) + 1), 2))
        lhs = graft(graft(t1, i, t2, MIX), k + arity(t2) - 1, t3, MIX)
        rhs = graft(graft(t1, k, t3, MIX), i, t2, MIX).scale((-1) ** (d2 * d3))
        assert lhs == rhs


def test_json_layout():
    e = el(("mu2(alpha,-)", 1), ("mu2(-,alpha)", "-1/2"))
    assert e.to_json() == [{"tree": "mu2(-,alpha)", "coeff": "-1/2"}, {"tree": "mu2(alpha,-)", "coeff": "1"}]
    assert AINF.sig("alpha") == (0, -1, 1)
