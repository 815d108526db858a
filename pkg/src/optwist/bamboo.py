"""Bamboo operads ncGerst / ncBV and their twisted versions.

Cohomological degrees: every edge and every tadpole has degree 1, vertices have
degree 0.  White vertices are the inputs (numbered left to right), black
vertices are copies of the arity-0 twisting element alpha.  Signs are produced by
the sign engine: each term carries its word of odd symbols (edges of the first
factor, its tadpoles, edges of the second factor, its tadpoles) and we reorder it
into the canonical word (edges left to right, then tadpoles left to right).

The twisted differential is built as ad_X + D_mu with X = (x-o) + (o-x) (the
shifted multiplicative structure, mu_2 -> one edge) and D_mu(alpha) = -(x-x).
Unfolding these reproduces the five summand types of the usual description.
"""
import builtins
import json
from collections import namedtuple
from functools import lru_cache
from fractions import Fraction
from itertools import combinations
from math import comb

from .core import CompositionNotZero, SparseMatrix, _blocks, _eliminate, add_to, fmt, koszul_sign

Q = Fraction


class IndexOutOfRange(IndexError):
    pass


class Bamboo(namedtuple("Bamboo", "colors edges tads")):
    """colors: str over 'o'/'x'; edges[j] joins vertex j and j+1; tads[j] per vertex."""

    __slots__ = ()

    @property
    def arity(self):
        return self.colors.count("o")

    @property
    def blacks(self):
        return self.colors.count("x")

    @property
    def degree(self):
        return sum(self.edges) + sum(self.tads)

    def tri(self):
        return (self.arity, self.blacks, self.degree)

    def white_position(self, i):
        """Vertex position of the i-th white vertex (1-based i)."""
        seen = 0
        for p, c in builtins.enumerate(self.colors):
            if c == "o":
                seen += 1
                if seen == i:
                    return p
        raise IndexOutOfRange(f"white vertex {i} of a bamboo of arity {self.arity}")

    def __str__(self):
        return encode(self)


def encode(b):
    out = []
    for p, c in builtins.enumerate(b.colors):
        if p:
            out.append("-" if b.edges[p - 1] else ".")
        out.append(c + ("*" if b.tads[p] else ""))
    return "".join(out)


def decode(s):
    s = s.strip()
    colors, edges, tads = [], [], []
    pos = 0
    while pos < len(s):
        ch = s[pos]
        if ch in "ox":
            colors.append(ch)
            tads.append(0)
            pos += 1
            if pos < len(s) and s[pos] == "*":
                tads[-1] = 1
                pos += 1
            if pos < len(s):
                if s[pos] not in "-.":
                    raise ValueError(f"bad bamboo text {s!r}")
                edges.append(1 if s[pos] == "-" else 0)
                pos += 1
                if pos == len(s):
                    raise ValueError(f"bad bamboo text {s!r}")
        else:
            raise ValueError(f"bad bamboo text {s!r}")
    if not colors:
        raise ValueError("empty bamboo")
    return Bamboo("".join(colors), tuple(edges), tuple(tads))


def bamboo(text):
    return decode(text)


# ---------------------------------------------------------------- variants

class BambooVariant:
    """tadpoles: whether vertices may carry tadpoles.  zero_if: optional predicate
    killing basis elements (used for quotients in tests)."""

    def __init__(self, name, tadpoles, zero_if=None):
        self.name = name
        self.tadpoles = tadpoles
        self.zero_if = zero_if

    def __repr__(self):
        return f"BambooVariant({self.name!r})"


NCGERST = BambooVariant("ncGerst", False)
NCBV = BambooVariant("ncBV", True)
VARIANTS = {"ncGerst": NCGERST, "ncBV": NCBV, "ncgerst": NCGERST, "ncbv": NCBV}


def get_variant(v):
    if isinstance(v, BambooVariant):
        return v
    try:
        return VARIANTS[v]
    except KeyError:
        raise ValueError(f"unknown bamboo variant {v!r}") from None


# ---------------------------------------------------------------- elements

class BambooElement:
    def __init__(self, variant, terms=None):
        self.variant = get_variant(variant)
        self.terms = {}
        kill = self.variant.zero_if
        for b, c in (terms or {}).items():
            if kill is not None and kill(b):
                continue
            add_to(self.terms, b, Q(c))

    @classmethod
    def basis(cls, variant, b, c=1):
        if isinstance(b, str):
            b = decode(b)
        return cls(variant, {b: c})

    def __add__(self, other):
        out = dict(self.terms)
        for b, c in other.terms.items():
            add_to(out, b, c)
        return BambooElement(self.variant, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        c = Q(c)
        return BambooElement(self.variant, {b: c * v for b, v in self.terms.items()} if c else {})

    def __eq__(self, other):
        return isinstance(other, BambooElement) and self.terms == other.terms

    __hash__ = object.__hash__

    def is_zero(self):
        return not self.terms

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda bc: (len(bc[0].colors), encode(bc[0])))

    def tri(self):
        ts = {b.tri() for b in self.terms}
        if len(ts) > 1:
            raise ValueError(f"inhomogeneous bamboo element {ts}")
        return ts.pop() if ts else None

    def to_json(self):
        return [{"bamboo": encode(b), "coeff": fmt(c)} for b, c in self.sorted_terms()]

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({fmt(c)}){encode(b)}" for b, c in self.sorted_terms())


def _elem(variant, x):
    if isinstance(x, BambooElement):
        return x
    return BambooElement.basis(variant, x)


# ---------------------------------------------------------------- enumeration

def count(variant, n, k, d):
    V = get_variant(variant)
    m = n + k
    if m == 0:
        return 0
    places = comb(m, k)
    if not V.tadpoles:
        return places * comb(m - 1, d)
    return places * sum(comb(m - 1, e) * comb(m, d - e) for e in range(0, d + 1))


def _flag_sets(length, ones):
    for pos in combinations(range(length), ones):
        f = [0] * length
        for p in pos:
            f[p] = 1
        yield tuple(f)


def enumerate_bamboos(variant, n, k, d):
    """Canonical basis of the (n, k, d) piece: black positions, then edges, then
    tadpoles, each in lexicographic order of the chosen positions."""
    V = get_variant(variant)
    m = n + k
    if m == 0 or d < 0:
        return []
    out = []
    for blk in combinations(range(m), k):
        colors = "".join("x" if p in blk else "o" for p in range(m))
        if not V.tadpoles:
            if d > m - 1:
                continue
            for e in _flag_sets(m - 1, d):
                out.append(Bamboo(colors, e, (0,) * m))
            continue
        for ne in range(0, min(d, m - 1) + 1):
            nt = d - ne
            if nt > m:
                continue
            for e in _flag_sets(m - 1, ne):
                for t in _flag_sets(m, nt):
                    out.append(Bamboo(colors, e, t))
    if V.zero_if is not None:
        out = [b for b in out if not V.zero_if(b)]
    return out


enumerate = enumerate_bamboos  # noqa: A001  (public name used by the spec'd API)


# ---------------------------------------------------------------- composition

def _compose_at(G1, v, G2):
    """Substitute G2 for the vertex at position v of G1.  Returns [(bamboo, sign)]."""
    V1, V2 = len(G1.colors), len(G2.colors)
    # symbol ids: position in the starting word [E1, T1, E2, T2]
    word = []
    e1 = [None] * (V1 - 1)
    t1 = [None] * V1
    e2 = [None] * (V2 - 1)
    t2 = [None] * V2
    for j, f in builtins.enumerate(G1.edges):
        if f:
            e1[j] = len(word)
            word.append(1)
    for j, f in builtins.enumerate(G1.tads):
        if f:
            t1[j] = len(word)
            word.append(1)
    for j, f in builtins.enumerate(G2.edges):
        if f:
            e2[j] = len(word)
            word.append(1)
    for j, f in builtins.enumerate(G2.tads):
        if f:
            t2[j] = len(word)
            word.append(1)
    colors = G1.colors[:v] + G2.colors + G1.colors[v + 1:]
    edges = e1[:v] + e2 + e1[v:]
    tads = t1[:v] + t2 + t1[v + 1:]
    moving = t1[v]
    variants = []
    if moving is None:
        variants.append((edges, tads))
    else:
        for p in range(V2):
            if tads[v + p] is None:
                nt = list(tads)
                nt[v + p] = moving
                variants.append((edges, nt))
        for p in range(V2 - 1):
            if edges[v + p] is None:
                ne = list(edges)
                ne[v + p] = moving
                variants.append((ne, tads))
    out = []
    for es, ts in variants:
        final = [x for x in es if x is not None] + [x for x in ts if x is not None]
        s = koszul_sign(word, final)
        out.append((Bamboo(colors, tuple(0 if x is None else 1 for x in es),
                           tuple(0 if x is None else 1 for x in ts)), s))
    return out


def compose_at(variant, G1, v, G2):
    """Bilinear substitution at vertex position v (0-based, any color)."""
    V = get_variant(variant)
    a = _elem(V, G1)
    b = _elem(V, G2)
    out = {}
    for g1, c1 in a.terms.items():
        if not 0 <= v < len(g1.colors):
            raise IndexOutOfRange(f"vertex {v} of {encode(g1)}")
        for g2, c2 in b.terms.items():
            for r, s in _compose_at(g1, v, g2):
                add_to(out, r, s * c1 * c2)
    return BambooElement(V, out)


def compose(variant, G1, i, G2):
    """G1 o_i G2 with i a white index (1-based)."""
    V = get_variant(variant)
    a = _elem(V, G1)
    b = _elem(V, G2)
    out = BambooElement(V)
    for g1, c1 in a.terms.items():
        if not 1 <= i <= g1.arity:
            raise IndexOutOfRange(f"input {i} of a bamboo of arity {g1.arity}")
        out = out + compose_at(V, g1, g1.white_position(i), b).scale(c1)
    return out


# ---------------------------------------------------------------- differential

_XO = Bamboo("xo", (1,), (0, 0))
_OX = Bamboo("ox", (1,), (0, 0))
_XX = Bamboo("xx", (1,), (0, 0))


@lru_cache(maxsize=1 << 18)
def _d_basis(b):
    """Twisted differential of one basis bamboo, as {bamboo: coeff}.  Cached;
    callers must not mutate the result."""
    out = {}
    deg = b.degree
    # ad_X: X o_1 b
    for X in (_XO, _OX):
        p = X.colors.index("o")
        for r, s in _compose_at(X, p, b):
            out[r] = out.get(r, 0) + s
    # - (-1)^{|b|} sum over inputs b o_j X, and D_mu on each alpha
    eps = 1 if deg % 2 else -1
    for p, c in builtins.enumerate(b.colors):
        subs = (_XO, _OX) if c == "o" else (_XX,)
        for X in subs:
            for r, s in _compose_at(b, p, X):
                out[r] = out.get(r, 0) + eps * s
    return {r: v for r, v in out.items() if v}


def twisted_diff(variant, e):
    V = get_variant(variant)
    e = _elem(V, e)
    acc = {}
    for b, c in e.terms.items():
        for r, v in _d_basis(b).items():
            acc[r] = acc.get(r, 0) + c * v
    return BambooElement(V, {r: v for r, v in acc.items() if v})


def diff_matrix(variant, n, k, d):
    """Matrix of the twisted differential from slice (d, k) to (d+1, k+1)."""
    V = get_variant(variant)
    src = enumerate_bamboos(V, n, k, d)
    tgt = enumerate_bamboos(V, n, k + 1, d + 1)
    index = {b: i for i, b in builtins.enumerate(tgt)}
    cols = []
    for b in src:
        col = {}
        for r, v in twisted_diff(V, b).terms.items():
            col[index[r]] = v
        cols.append(col)
    return SparseMatrix.from_columns(len(tgt), cols)


def _row_blocks(rows):
    ent = {(i, j): v for i, row in rows.items() for j, v in row.items()}
    if not ent:
        return []
    nr = max(i for i, _ in ent) + 1
    nc = max(j for _, j in ent) + 1
    return _blocks(SparseMatrix(nr, nc, ent))


def _slice_rank(V, n, k, d, cache):
    key = (n, k, d)
    if key in cache:
        return cache[key]
    if k < 0 or d < 0:
        cache[key] = 0
        return 0
    rows = {}
    rid = {}
    for j, b in builtins.enumerate(enumerate_bamboos(V, n, k, d)):
        for r, v in twisted_diff(V, b).terms.items():
            i = rid.setdefault(r, len(rid))
            rows.setdefault(i, {})[j] = v
    r = sum(_eliminate(blk) for blk in _row_blocks(rows))
    cache[key] = r
    return r


def model_dims(variant, n, d_max):
    V = get_variant(variant)
    out = []
    for d in range(d_max + 1):
        if V is NCGERST:
            ok = (d == 0) if n == 0 else (d == n - 1)
        elif V is NCBV:
            ok = (d == 0 or d % 2 == 1) if n == 0 else (d >= n - 1 and (d - n + 1) % 2 == 0)
        else:
            ok = None
        out.append(None if ok is None else int(ok))
    return out


class CohomologyTable:
    def __init__(self, variant, arity, d_max, k_max, cells):
        self.variant = get_variant(variant)
        self.arity = arity
        self.d_max = d_max
        self.k_max = k_max
        self.cells = cells  # {(d, k): dim}
        self.totals = [sum(cells[(d, k)] for k in range(k_max + 1)) for d in range(d_max + 1)]
        self.model = model_dims(self.variant, arity, d_max)
        self.match = self.totals == self.model

    def cell_matches(self, d):
        return self.model[d] is not None and self.totals[d] == self.model[d]

    def to_json(self):
        return {
            "variant": self.variant.name,
            "arity": self.arity,
            "cells": [{"d": d, "k": k, "dim": self.cells[(d, k)]}
                      for d in range(self.d_max + 1) for k in range(self.k_max + 1)],
            "totals": self.totals,
            "model": self.model,
            "match": self.match,
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    def to_text(self):
        w = max(5, len(str(max(self.cells.values(), default=0))) + 1)
        head = f"# H(Tw {self.variant.name})({self.arity}), cells dim H^d at black count k\n"
        cols = "".join(f"{'k=' + str(k):>{w}}" for k in range(self.k_max + 1))
        lines = [head, f"{'d':>3}{cols}{'total':>{w + 2}}{'model':>{w + 2}}\n"]
        for d in range(self.d_max + 1):
            row = "".join(f"{self.cells[(d, k)]:>{w}}" for k in range(self.k_max + 1))
            m = self.model[d]
            lines.append(f"{d:>3}{row}{self.totals[d]:>{w + 2}}{'-' if m is None else m:>{w + 2}}\n")
        lines.append(f"match: {'yes' if self.match else 'no'}\n")
        return "".join(lines)

    def __repr__(self):
        return f"CohomologyTable({self.variant.name}, n={self.arity}, totals={self.totals})"


def cohomology_table(variant, n, d_max, k_max):
    """Per (d, k): dim of the cohomology of (d-1,k-1) -> (d,k) -> (d+1,k+1)."""
    V = get_variant(variant)
    cache = {}
    cells = {}
    for d in range(d_max + 1):
        for k in range(k_max + 1):
            dim = len(enumerate_bamboos(V, n, k, d))
            r_out = _slice_rank(V, n, k, d, cache) if dim else 0
            r_in = _slice_rank(V, n, k - 1, d - 1, cache)
            h = dim - r_out - r_in
            if h < 0:
                raise CompositionNotZero(f"d o d != 0 at (n={n}, k={k}, d={d})")
            cells[(d, k)] = h
    return CohomologyTable(V, n, d_max, k_max, cells)


def dsq_check(variant, n, k, d):
    """Returns the first basis bamboo of slice (n,k,d) with d(d(b)) != 0, or None."""
    V = get_variant(variant)
    for b in enumerate_bamboos(V, n, k, d):
        dd = twisted_diff(V, twisted_diff(V, b))
        if not dd.is_zero():
            return b, dd
    return None


# ---------------------------------------------------------------- twistability

class TwistableResult:
    def __init__(self, ok, witness=None, image=None):
        self.ok = ok
        self.witness = witness
        self.image = image

    def __bool__(self):
        return self.ok

    def __repr__(self):
        if self.ok:
            return "TwistableResult(ok)"
        return f"TwistableResult(witness={encode(self.witness)}, image={self.image!r})"


def generators(variant):
    V = get_variant(variant)
    gens = [Bamboo("oo", (0,), (0, 0)), Bamboo("oo", (1,), (0, 0))]
    if V.tadpoles:
        gens.append(Bamboo("o", (), (1,)))
    return gens


def ad_mu1(variant, e, sign=1):
    """ad_X(nu) = X o_1 nu - (-1)^{|nu|} sum_j nu o_j X with X = mu_2(alpha,-) + sign*mu_2(-,alpha),
    evaluated on elements of P (no alphas, so no D_mu part)."""
    V = get_variant(variant)
    e = _elem(V, e)
    X = BambooElement(V, {_XO: 1, _OX: sign})
    out = BambooElement(V)
    for b, c in e.terms.items():
        eps = 1 if b.degree % 2 else -1
        t = compose_at(V, _XO, 1, b) + compose_at(V, _OX, 0, b).scale(sign)
        for p, col in builtins.enumerate(b.colors):
            if col == "o":
                t = t + compose_at(V, b, p, X).scale(eps)
        out = out + t.scale(c)
    return out


def twistable_check(variant):
    """First generator nu with ad_{mu_1^alpha}(nu) != 0, or ok."""
    V = get_variant(variant)
    for g in generators(V):
        if V.zero_if is not None and V.zero_if(g):
            continue
        im = ad_mu1(V, g)
        if not im.is_zero():
            return TwistableResult(False, g, im)
    return TwistableResult(True)


# ---------------------------------------------------------------- deformation complex

class DefComplexElement:
    """rho = (rho_1, rho_2, ...), rho_n a combination of all-white bamboos with n
    vertices.  Shifted regime: no degree shift, Def degree = number of edges."""

    def __init__(self, variant, comps=None):
        self.variant = get_variant(variant)
        self.comps = {}
        for n, e in (comps or {}).items():
            e = _elem(self.variant, e)
            if not e.is_zero():
                self.comps[n] = e

    def __add__(self, other):
        keys = set(self.comps) | set(other.comps)
        z = BambooElement(self.variant)
        return DefComplexElement(self.variant, {n: self.comps.get(n, z) + other.comps.get(n, z) for n in keys})

    def scale(self, c):
        return DefComplexElement(self.variant, {n: e.scale(c) for n, e in self.comps.items()})

    def is_zero(self):
        return not self.comps

    def __eq__(self, other):
        return isinstance(other, DefComplexElement) and self.comps == other.comps

    __hash__ = object.__hash__

    def degrees(self):
        return {b.degree for e in self.comps.values() for b in e.terms}

    def __repr__(self):
        return "DefComplexElement(" + ", ".join(f"{n}: {e!r}" for n, e in sorted(self.comps.items())) + ")"


def def_star(rho, xi):
    """(rho * xi)_n = sum_{p+q+r=n} rho_{p+1+r} o_{p+1} xi_q; the shifted star carries
    only the Koszul signs already inside the bamboo composition."""
    V = rho.variant
    out = {}
    for m, a in rho.comps.items():
        for qq, b in xi.comps.items():
            for j in range(1, m + 1):
                t = compose(V, a, j, b)
                n = m + qq - 1
                out[n] = out[n] + t if n in out else t
    return DefComplexElement(V, out)


def def_mu(variant="ncGerst"):
    V = get_variant(variant)
    return DefComplexElement(V, {2: BambooElement(V, {Bamboo("oo", (1,), (0, 0)): 1})})


def def_differential(rho):
    """partial^mu(rho) = [mu, rho] = mu*rho - (-1)^{|rho|} rho*mu  (P has zero differential)."""
    mu = def_mu(rho.variant)
    out = DefComplexElement(rho.variant)
    for n, e in rho.comps.items():
        for b, c in e.terms.items():
            piece = DefComplexElement(rho.variant, {n: BambooElement(rho.variant, {b: c})})
            s = -1 if b.degree % 2 else 1
            out = out + def_star(mu, piece) + def_star(piece, mu).scale(-s)
    return out


def _blacken(b):
    return Bamboo("x" * len(b.colors), b.edges, b.tads)


def def_to_tw(rho):
    """rho -> -sum (-1)^{|rho|} rho_n(alpha^n) in (Tw P)(0)."""
    V = rho.variant
    out = {}
    for e in rho.comps.values():
        for b, c in e.terms.items():
            s = 1 if b.degree % 2 else -1
            add_to(out, _blacken(b), s * c)
    return BambooElement(V, out)


class DefComplexReport:
    def __init__(self, checked, failure=None, sign=-1):
        self.checked = checked
        self.failure = failure
        self.sign = sign
        self.ok = failure is None

    def __bool__(self):
        return self.ok

    def __repr__(self):
        return f"DefComplexReport(checked={self.checked}, {'pass' if self.ok else self.failure})"


def defcomplex_intertwines(rho, sign=-1):
    """d^tw(Phi(rho)) == sign * Phi(partial^mu rho); the suspension s^{-1} makes sign = -1."""
    lhs = twisted_diff(rho.variant, def_to_tw(rho))
    rhs = def_to_tw(def_differential(rho)).scale(sign)
    return lhs == rhs, lhs, rhs


def defcomplex_check(n_cap, d_window, variant="ncGerst", extra=()):
    """Check the intertwining on every basis bamboo rho_n (all white, n <= n_cap,
    degree in d_window) and on any extra DefComplexElements."""
    V = get_variant(variant)
    lo, hi = d_window
    checked = 0
    cands = []
    for n in range(1, n_cap + 1):
        for d in range(lo, hi + 1):
            for b in enumerate_bamboos(V, n, 0, d):
                cands.append(DefComplexElement(V, {n: BambooElement(V, {b: 1})}))
    cands += list(extra)
    for rho in cands:
        ok, lhs, rhs = defcomplex_intertwines(rho)
        checked += 1
        if not ok:
            return DefComplexReport(checked, (rho, lhs, rhs))
    return DefComplexReport(checked)
