import random
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings, strategies as st

from optwist.bamboo import (Bamboo, BambooElement, BambooVariant, DefComplexElement, IndexOutOfRange,
                            cohomology_table, compose, count, decode, defcomplex_check,
                            defcomplex_intertwines, diff_matrix, dsq_check, encode, enumerate_bamboos,
                            twistable_check, twisted_diff)

G, B = "ncGerst", "ncBV"


def el(variant, *pairs):
    return BambooElement(variant, {decode(s): c for s, c in pairs})


def test_encoding():
    for s in ["o-o.x*", "x*-x", "o", "o.o-x-o*"]:
        assert encode(decode(s)) == s
    b = decode("o-x*.o*")
    assert b.arity == 2 and b.blacks == 1 and b.degree == 3
    with pytest.raises(ValueError):
        decode("o--o")


def test_enumeration_examples():
    assert [encode(b) for b in enumerate_bamboos(G, 1, 1, 1)] == ["x-o", "o-x"]
    assert [encode(b) for b in enumerate_bamboos(B, 1, 0, 0)] == ["o"]
    assert [encode(b) for b in enumerate_bamboos(B, 1, 0, 1)] == ["o*"]
    assert len(enumerate_bamboos(G, 2, 2, 2)) == 18


def test_counts_match_enumeration():
    for V, (N, K, D) in ((G, (3, 4, 4)), (B, (2, 3, 4))):
        for n in range(N + 1):
            for k in range(K + 1):
                for d in range(D + 1):
                    bs = enumerate_bamboos(V, n, k, d)
                    assert len(bs) == count(V, n, k, d) == len(set(bs))
                    assert all(b.tri() == (n, k, d) for b in bs)


def test_compose_displays():
    assert compose(G, "o-o-o.o.o-o", 5, "o-o.o") == el(G, ("o-o-o.o.o-o.o-o", -1))
    assert compose(B, "o-o*", 2, "o-o*.o*") == el(B, ("o-o*-o*.o*", -1), ("o-o-o*-o*", -1))
    assert compose(G, "o-x.o", 2, "o") == el(G, ("o-x.o", 1))
    with pytest.raises(IndexOutOfRange):
        compose(G, "o-o", 3, "o")


def test_differential_displays():
    # the three cancelling pairs leave a single term
    assert twisted_diff(G, "o-o.x") == el(G, ("o-o-x.x", 1))
    assert twisted_diff(B, "o*") == el(B, ("o-x*", -1), ("x*-o", -1))
    assert twisted_diff(G, "x") == el(G, ("x-x", 1))


def test_diff_matrix_matches_differential():
    for V, n, k, d in ((G, 2, 1, 1), (B, 1, 1, 1), (G, 0, 1, 0)):
        m = diff_matrix(V, n, k, d)
        src = enumerate_bamboos(V, n, k, d)
        tgt = enumerate_bamboos(V, n, k + 1, d + 1)
        assert (m.rows, m.cols) == (len(tgt), len(src))
        for j, b in enumerate(src):
            col = m.column(j)
            assert BambooElement(V, {tgt[i]: c for i, c in col.items()}) == twisted_diff(V, b)
    assert diff_matrix(G, 0, 1, 0).column(0)
    assert diff_matrix(G, 1, 0, 3).cols == 0


def test_d_squared_small():
    for V, (N, K, D) in ((G, (2, 3, 3)), (B, (2, 3, 3))):
        for n in range(N + 1):
            for k in range(K + 1):
                for d in range(D + 1):
                    assert dsq_check(V, n, k, d) is None


def rand_bamboo(rng, V, maxv=4):
    m = rng.randint(1, maxv)
    while True:
        cols = "".join(rng.choice("oox") for _ in range(m))
        if "o" in cols:
            break
    e = tuple(rng.randint(0, 1) for _ in range(m - 1))
    t = tuple(rng.randint(0, 1) if V == B else 0 for _ in range(m))
    return Bamboo(cols, e, t)


@pytest.mark.parametrize("V", [G, B])
@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_operad_axioms_and_derivation(V, seed):
    rng = random.Random(seed)
    a, b, c = rand_bamboo(rng, V), rand_bamboo(rng, V), rand_bamboo(rng, V, 3)
    i = rng.randint(1, a.arity)
    j = rng.randint(1, b.arity)
    assert compose(V, compose(V, a, i, b), i + j - 1, c) == compose(V, a, i, compose(V, b, j, c))
    if a.arity >= 2:
        i2, k2 = sorted(rng.sample(range(1, a.arity + 1), 2))
        lhs = compose(V, compose(V, a, i2, b), k2 + b.arity - 1, c)
        rhs = compose(V, compose(V, a, k2, c), i2, b).scale((-1) ** (b.degree * c.degree))
        assert lhs == rhs
    lhs = twisted_diff(V, compose(V, a, i, b))
    rhs = compose(V, twisted_diff(V, a), i, b) + compose(V, a, i, twisted_diff(V, b)).scale((-1) ** a.degree)
    assert lhs == rhs


def test_cohomology_small_tables():
    t = cohomology_table(G, 1, 3, 5)
    assert t.totals == [1, 0, 0, 0] and t.match
    t = cohomology_table(G, 0, 3, 6)
    assert t.totals == [1, 0, 0, 0] and t.match
    # the class of gamma sits at two black vertices
    assert t.cells[(0, 2)] == 1
    t = cohomology_table(B, 1, 3, 4)
    assert t.totals == [1, 0, 1, 0]


def test_cohomology_json_and_text():
    t = cohomology_table(G, 1, 2, 3)
    d = t.to_json()
    assert d["variant"] == "ncGerst" and d["match"] is True
    assert len(d["cells"]) == 3 * 4
    assert t.to_text().endswith("match: yes\n")


def test_twistability_witnesses():
    r = twistable_check(G)
    assert not r and encode(r.witness) == "o.o"
    assert r.image == el(G, ("o-x.o", -1), ("o.x-o", -1))
    r = twistable_check(B)
    assert not r and not r.image.is_zero()
    # a quotient where every black-vertex bamboo vanishes kills the adjoint action
    mock = BambooVariant("mock", False, zero_if=lambda b: "x" in b.colors)
    assert twistable_check(mock).ok


def test_defcomplex():
    assert defcomplex_check(4, (0, 3))
    assert defcomplex_check(3, (0, 3), B)
    # rho_1 = id and the zero element
    ok, lhs, rhs = defcomplex_intertwines(DefComplexElement(G, {1: el(G, ("o", 1))}))
    assert ok and not lhs.is_zero()
    ok, lhs, rhs = defcomplex_intertwines(DefComplexElement(G, {}))
    assert ok and lhs.is_zero()
    # a random combination
    rng = random.Random(0)
    rho = DefComplexElement(G, {n: BambooElement(G, {b: Q(rng.randint(-3, 3)) for b in enumerate_bamboos(G, n, 0, 1)})
                                for n in (2, 3)})
    assert defcomplex_intertwines(rho)[0]


def test_unknown_variant():
    with pytest.raises(ValueError):
        twisted_diff("ncFoo", "o")
