import random
from fractions import Fraction as Q
from itertools import permutations

import pytest
from hypothesis import given, settings, strategies as st

from optwist import gauge as G
from optwist.core import FilteredModule
from optwist.homotopyalg import random_gauge, random_map, random_module


def rand_elem(rng, variant, deg, M, cap, top, density=0.5):
    V = G.get_variant(variant)
    comps = {n: random_map(rng, M, n, deg + V.offset(n), 0, density) for n in range(top + 1)}
    x = G.ConvolutionElement(variant, deg, M, comps, cap)
    if variant == "uCom_dual":
        sym = {}
        for n, m in x.comps.items():
            acc = {}
            for w in permutations(range(n)):
                G.mm_iadd(acc, G.mm_reorder(m, list(w), M.deg))
            sym[n] = acc
        x = x.like(sym)
    return x


def flat_module(rng, dim):
    # filtration 0 everywhere: nothing is forced to vanish
    return FilteredModule([(f"e{i}", rng.choice((-1, 0, 1)), 0) for i in range(dim)], 1)


@pytest.mark.parametrize("variant", ["uAs_dual", "endc_shifted", "uCom_dual"])
@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_prelie_identity(variant, seed):
    rng = random.Random(seed)
    M = flat_module(rng, 2)
    # arity <= 2 with cap 6: no intermediate product is cut off by the cap
    a, b, c = (rand_elem(rng, variant, rng.choice((-1, 0, 1)), M, 6, 2) for _ in range(3))
    lhs = G.star(G.star(a, b), c) - G.star(a, G.star(b, c))
    sgn = -1 if (b.degree * c.degree) % 2 else 1
    rhs = (G.star(G.star(a, c), b) - G.star(a, G.star(c, b))).scale(sgn)
    assert lhs == rhs
    one = G.unit(variant, M, 6)
    assert G.star(one, a) == a


def test_mm_partial_sign():
    M = FilteredModule([("x", 1, 0), ("y", 0, 0)], 1)
    f = {(0, 0): {1: Q(1)}}
    g = {(1,): {0: Q(1)}}   # degree 1 map y -> x
    assert G.mm_partial(f, 2, g, 1, M.deg) == {(0, 1): {1: Q(-1)}}
    assert G.mm_partial(f, 1, g, 1, M.deg) == {(1, 0): {1: Q(1)}}


def test_unknown_variant_and_mismatch():
    with pytest.raises(G.VariantMismatch):
        G.get_variant("nope")
    M = FilteredModule([("x", 0, 1)], 2)
    a = G.zero("uAs_dual", 0, M, 3)
    b = G.zero("endc_shifted", 0, M, 3)
    with pytest.raises(G.VariantMismatch):
        G.star(a, b)


def gauge_module(rng):
    return FilteredModule([(f"e{i}", rng.choice((-1, 0, 1, -2)), rng.randint(1, 3)) for i in range(5)], 4)


@pytest.mark.parametrize("variant", ["uAs_dual", "endc_shifted", "uCom_dual"])
def test_group_laws(variant):
    rng = random.Random(3)
    for _ in range(3):
        M = gauge_module(rng)
        x, y, z = (random_gauge(rng, M, variant, 3, density=0.5) for _ in range(3))
        X, Y, Z = map(G.prelie_exp, (x, y, z))
        one = G.unit(variant, M, 3)
        assert G.prelie_log(X) == x
        assert G.prelie_exp(G.prelie_log(Y)) == Y
        assert G.circle(G.circle(X, Y), Z) == G.circle(X, G.circle(Y, Z))
        assert G.circle(X, one) == X and G.circle(one, X) == X
        assert G.prelie_exp(G.bch(x, y)) == G.circle(X, Y)
        assert G.circle(X, G.isotopy_invert(X)) == one
        assert G.circle(G.isotopy_invert(X), X) == one


def test_bch_low_arity_matches_series():
    rng = random.Random(5)
    hits = 0
    for variant in ("uAs_dual", "endc_shifted"):
        for _ in range(3):
            M = gauge_module(rng)
            x, y = (random_gauge(rng, M, variant, 3, density=0.5) for _ in range(2))
            # arity <= 1 parts form a Lie algebra where BCH stops at order three
            x1 = x.like({k: v for k, v in x.comps.items() if k <= 1})
            y1 = y.like({k: v for k, v in y.comps.items() if k <= 1})
            assert G.bch(x1, y1) == G.bch_series3(x1, y1)
            hits += not G.bracket(x1, y1).is_zero()
    assert hits


def test_bch_order_three_coefficients():
    # BCH(tx, ty) is a polynomial in t; its t, t^2, t^3 coefficients are the Lie series
    rng = random.Random(11)
    M = random_module(rng, 6, 5, [0, -1, 0, -1, 0])
    x, y = (random_gauge(rng, M, "uAs_dual", 4, density=0.5) for _ in range(2))
    D = 10
    ts = [Q(j) for j in range(1, D + 2)]
    coef = _interpolate([G.bch(x.scale(t), y.scale(t)) for t in ts], ts)
    xy = G.bracket(x, y)
    assert not G.bracket(xy, y).is_zero()
    assert coef(1) == x + y
    assert coef(2) == xy.scale(Q(1, 2))
    assert coef(3) == (G.bracket(xy, y) + G.bracket(G.bracket(y, x), x)).scale(Q(1, 12))
    assert coef(D + 1).is_zero()


def test_bernoulli():
    assert [G.bernoulli(m) for m in range(5)] == [1, Q(-1, 2), Q(1, 6), 0, Q(-1, 30)]


def _interpolate(vals, ts):
    """Coefficients c_1..c_n of a polynomial sum c_k t^k from its values."""
    n = len(ts)
    A = [[t ** k for k in range(1, n + 1)] + [Q(int(i == j)) for j in range(n)] for i, t in enumerate(ts)]
    for c in range(n):
        p = next(r for r in range(c, n) if A[r][c])
        A[c], A[p] = A[p], A[c]
        pv = A[c][c]
        A[c] = [v / pv for v in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    inv = [row[n:] for row in A]

    def coef(k):
        acc = vals[0].like({})
        for j in range(n):
            if inv[k - 1][j]:
                acc = acc + vals[j].scale(inv[k - 1][j])
        return acc
    return coef


@pytest.mark.parametrize("seed", [4, 6, 7])
def test_magnus_coefficients(seed):
    rng = random.Random(seed)
    M = random_module(rng, 6, 5, [0, -1, 0, -1, 0])
    x = random_gauge(rng, M, "uAs_dual", 4, density=0.6)
    one = G.unit("uAs_dual", M, 4)
    D = 10
    ts = [Q(j) for j in range(1, D + 2)]
    coef = _interpolate([G.prelie_log(one + x.scale(t)) for t in ts], ts)
    s = G.star
    xx = s(x, x)
    assert s(x, xx) != s(xx, x)
    assert coef(1) == x
    assert coef(2) == xx.scale(Q(-1, 2))
    assert coef(3) == s(x, xx).scale(Q(1, 4)) + s(xx, x).scale(Q(1, 12))
    assert coef(D + 1).is_zero()


def _theta_mc(variant, M, cap, want):
    th = [i for i in range(M.dim) if M.deg[i] == want]
    return G.ConvolutionElement(variant, -1, M, {0: {(): {th[0]: Q(1)}}}, cap)


@pytest.mark.parametrize("variant,thd,degs", [("uAs_dual", -1, (0, 0, -1)),
                                              ("endc_shifted", -2, (-1, -1, -2, 0))])
def test_gauge_action(variant, thd, degs):
    rng = random.Random(4)
    fl = [1, 1, 1, 2, 2, 3]
    for _ in range(3):
        M = FilteredModule([(f"e{i}", degs[i % len(degs)] if i < 3 else rng.choice(degs), fl[i])
                            for i in range(6)], 4)
        x, y = (random_gauge(rng, M, variant, 3, density=0.5) for _ in range(2))
        alpha = _theta_mc(variant, M, 3, thd)
        b1 = G.gauge_action(x, alpha)
        b2 = G.gauge_action(y, b1)
        assert G.is_mc(b1)
        assert b1 == G.gauge_action_ad(x, alpha)
        assert b2 == G.gauge_action(G.bch(y, x), alpha)
        zero = G.zero(variant, 0, M, 3)
        assert G.gauge_action(zero, alpha) == alpha


def test_gauge_action_rejects_non_mc():
    M = FilteredModule([("a", 0, 1), ("b", -1, 1)], 3)
    alpha = G.ConvolutionElement("uAs_dual", -1, M, {2: {(0, 0): {1: 1}}, 1: {(1,): {0: 1}}}, 3)
    assert not G.is_mc(alpha)
    with pytest.raises(G.NotMaurerCartan):
        G.gauge_action(G.zero("uAs_dual", 0, M, 3), alpha)


def test_filtration_guards():
    M = FilteredModule([("a", 0, 1)], 3)
    lam = G.ConvolutionElement("uAs_dual", 0, M, {1: {(0,): {0: 1}}}, 3)
    with pytest.raises(G.FiltrationViolation):
        G.prelie_exp(lam)
    with pytest.raises(G.NotIsotopy):
        G.isotopy_invert(G.unit("uAs_dual", M, 3) + lam)


def test_json_round_trip():
    rng = random.Random(2)
    M = gauge_module(rng)
    x = random_gauge(rng, M, "endc_shifted", 3, density=0.5)
    assert G.ConvolutionElement.from_json(x.to_json(), M) == x
