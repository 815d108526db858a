"""Convolution pre-Lie algebras hom(C, End_A) and their gauge-group integration.

A multilinear map on a FilteredModule is a dict  inputs-tuple -> {output: coeff},
basis elements referred to by index.  A ConvolutionElement is a family of such
maps indexed by "keys" (the arity for the three operadic variants, a rooted tree
for the uPreLie one registered by rootedperm).  The variant decides the degree
offset of each component and how the star product is assembled.

Truncation: components with arity above `cap` are treated as zero.  For finite
elements (all our instances) nothing is lost.  On positively filtered modules
every map of arity >= N vanishes anyway, so all series below are finite.
"""
from fractions import Fraction
from math import factorial

from .core import add_to, fmt, koszul_sign, q

Q = Fraction


class VariantMismatch(ValueError):
    pass


class FiltrationViolation(ValueError):
    pass


class NotMaurerCartan(ValueError):
    pass


class NotIsotopy(ValueError):
    pass


# ---------------------------------------------------------------- End_A maps

def mm_add(a, b, c=1):
    """a + c*b, new dict."""
    out = {k: dict(v) for k, v in a.items()}
    for k, v in b.items():
        d = out.setdefault(k, {})
        for o, x in v.items():
            add_to(d, o, c * x)
        if not d:
            del out[k]
    return out


def mm_iadd(a, b, c=1):
    """In-place a += c*b."""
    if not c:
        return a
    for k, v in b.items():
        d = a.setdefault(k, {})
        for o, x in v.items():
            add_to(d, o, c * x)
        if not d:
            del a[k]
    return a


def mm_scale(a, c):
    if not c:
        return {}
    return {k: {o: c * x for o, x in v.items()} for k, v in a.items()}


def mm_partial(f, i, g, gdeg, deg):
    """f o_i g (i is 1-based) with the Koszul sign of g passing x_1..x_{i-1}.

    gdeg is the degree of g as a map, deg the degree list of the basis."""
    j = i - 1
    idx = {}
    for t, fo in f.items():
        idx.setdefault(t[j], []).append((t, fo))
    out = {}
    godd = gdeg % 2
    for s, go in g.items():
        for x, cg in go.items():
            for t, fo in idx.get(x, ()):
                sgn = -1 if godd and sum(deg[y] for y in t[:j]) % 2 else 1
                key = t[:j] + s + t[j + 1:]
                d = out.setdefault(key, {})
                c = sgn * cg
                for o, cf in fo.items():
                    add_to(d, o, c * cf)
                if not d:
                    del out[key]
    return out


def mm_reorder(h, word, deg):
    """r(x_0..x_{n-1}) = (Koszul sign) h(x_word[0], ..., x_word[n-1])."""
    n = len(word)
    out = {}
    for k, ho in h.items():
        t = [None] * n
        for j, w in enumerate(word):
            t[w] = k[j]
        t = tuple(t)
        s = koszul_sign([deg[x] for x in t], word)
        d = out.setdefault(t, {})
        for o, c in ho.items():
            add_to(d, o, s * c)
        if not d:
            del out[t]
    return out


def mm_apply(f, args, deg=None):
    """Evaluate a multilinear map on vectors (sparse dicts), with the Koszul sign
    of the map passing earlier arguments ignored (maps here are applied to
    homogeneous inputs from the left, so no sign is needed)."""
    out = {}
    if not args:
        for o, c in f.get((), {}).items():
            add_to(out, o, c)
        return out
    for t, fo in f.items():
        c = Q(1)
        for x, v in zip(t, args):
            cv = v.get(x)
            if not cv:
                c = 0
                break
            c *= cv
        if c:
            for o, cf in fo.items():
                add_to(out, o, c * cf)
    return out


def mm_degree(f, deg):
    """Set of degrees (output minus inputs) present in f."""
    return {deg[o] - sum(deg[x] for x in t) for t, fo in f.items() for o in fo}


def mm_filt_excess(f, filt):
    """min over entries of filt(output) - sum filt(inputs); None for the zero map."""
    m = None
    for t, fo in f.items():
        s = sum(filt[x] for x in t)
        for o in fo:
            e = filt[o] - s
            m = e if m is None else min(m, e)
    return m


def identity_map(dim):
    return {(i,): {i: Q(1)} for i in range(dim)}


# ---------------------------------------------------------------- variants

VARIANTS = {}


class Variant:
    """Degree offset, arity of a key and the star product rule."""

    def __init__(self, name, offset, arity, star, keys=None, symmetric=False):
        self.name = name
        self.offset = offset
        self.arity = arity
        self._star = star
        self.keys = keys
        self.symmetric = symmetric

    def star(self, f, g):
        return self._star(f, g)


def register_variant(v):
    VARIANTS[v.name] = v
    return v


def get_variant(name):
    try:
        return VARIANTS[name]
    except KeyError:
        raise VariantMismatch(f"unknown variant {name!r}") from None


class ConvolutionElement:
    def __init__(self, variant, degree, module, comps=None, cap=4):
        self.variant = variant if isinstance(variant, str) else variant.name
        self.V = get_variant(self.variant)
        self.degree = int(degree)
        self.module = module
        self.cap = int(cap)
        self.comps = {}
        for k, m in (comps or {}).items():
            if self.V.arity(k) > self.cap:
                continue
            m = {tuple(t): {o: q(c) for o, c in v.items() if c} for t, v in m.items()}
            m = {t: v for t, v in m.items() if v}
            if m:
                self.comps[k] = m

    # -- bookkeeping
    def map_degree(self, key):
        return self.degree + self.V.offset(key)

    def like(self, comps, degree=None, cap=None):
        return ConvolutionElement(self.variant, self.degree if degree is None else degree,
                                  self.module, comps, self.cap if cap is None else cap)

    def component(self, key):
        return self.comps.get(key, {})

    def is_zero(self):
        return not self.comps

    def restrict(self, cap):
        return self.like({k: m for k, m in self.comps.items() if self.V.arity(k) <= cap}, cap=cap)

    def _check(self, other):
        if not isinstance(other, ConvolutionElement):
            raise TypeError(other)
        if other.variant != self.variant:
            raise VariantMismatch(f"{self.variant} vs {other.variant}")
        if other.module != self.module:
            raise VariantMismatch("different modules")

    def __add__(self, other):
        return self._lin(other, 1)

    def __sub__(self, other):
        return self._lin(other, -1)

    def _lin(self, other, c):
        self._check(other)
        if other.is_zero():
            return self.like(self.comps, cap=min(self.cap, other.cap))
        if self.is_zero():
            return other.like(mm_comps_scale(other.comps, c), cap=min(self.cap, other.cap))
        if other.degree != self.degree:
            raise ValueError("adding elements of different degrees")
        out = {k: m for k, m in self.comps.items()}
        for k, m in other.comps.items():
            out[k] = mm_add(out.get(k, {}), m, c)
        return self.like(out, cap=min(self.cap, other.cap))

    def __neg__(self):
        return self.like(mm_comps_scale(self.comps, -1))

    def scale(self, c):
        return self.like(mm_comps_scale(self.comps, q(c)))

    def __rmul__(self, c):
        return self.scale(c)

    def __eq__(self, other):
        if not isinstance(other, ConvolutionElement):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        return (self.variant == other.variant and self.degree == other.degree
                and self.comps == other.comps)

    __hash__ = object.__hash__

    def __repr__(self):
        ks = sorted(self.comps, key=str)
        return f"ConvolutionElement({self.variant}, deg={self.degree}, keys={ks}, cap={self.cap})"

    def diff_report(self, other):
        """First key where self and other differ, or None."""
        for k in sorted(set(self.comps) | set(other.comps), key=str):
            if self.comps.get(k, {}) != other.comps.get(k, {}):
                return k
        return None

    def filt_ok(self, gauge=False):
        """Filtration-preserving everywhere; with gauge=True the arity 0 and 1
        parts must raise filtration by at least one."""
        filt = self.module.filt
        for k, m in self.comps.items():
            e = mm_filt_excess(m, filt)
            if e is None:
                continue
            need = 1 if gauge and self.V.arity(k) <= 1 else 0
            if e < need:
                return False
        return True

    def star(self, other):
        return star(self, other)

    # -- serialization
    def to_json(self):
        names = self.module.basis.names
        comps = []
        for k in sorted(self.comps, key=lambda k: (self.V.arity(k), str(k))):
            ents = []
            for t, fo in sorted(self.comps[k].items()):
                for o, c in sorted(fo.items()):
                    ents.append({"arity": len(t), "inputs": [names[x] for x in t],
                                 "output": names[o], "coeff": fmt(c)})
            item = {"arity": self.V.arity(k), "entries": ents}
            if not isinstance(k, int):
                item["key"] = key_to_str(k)
            comps.append(item)
        return {"variant": self.variant, "degree": self.degree, "cap": self.cap, "components": comps}

    @classmethod
    def from_json(cls, data, module):
        idx = module.basis.index
        comps = {}
        for item in data["components"]:
            k = key_from_str(item["key"]) if "key" in item else int(item["arity"])
            m = comps.setdefault(k, {})
            for e in item["entries"]:
                t = tuple(idx[x] for x in e["inputs"])
                add_to(m.setdefault(t, {}), idx[e["output"]], q(e["coeff"]))
        return cls(data["variant"], data["degree"], module, comps, data.get("cap", 4))


def mm_comps_scale(comps, c):
    return {k: mm_scale(m, c) for k, m in comps.items()} if c else {}


# tree keys of non-arity variants are serialized through hooks set by that module
_KEY_CODECS = {"to": str, "from": None}


def key_to_str(k):
    return _KEY_CODECS["to"](k)


def key_from_str(s):
    if _KEY_CODECS["from"] is None:
        raise ValueError("no key codec registered")
    return _KEY_CODECS["from"](s)


def zero(variant, degree, module, cap):
    return ConvolutionElement(variant, degree, module, {}, cap)


def unit(variant, module, cap):
    """The left unit 1: identity in arity one (or on the one-vertex tree)."""
    V = get_variant(variant)
    key = V.unit_key if hasattr(V, "unit_key") else 1
    return ConvolutionElement(variant, 0, module, {key: identity_map(module.dim)}, cap)


# ---------------------------------------------------------------- star products

def _arity_star(sign_rule):
    def star_(f, g):
        f._check(g)
        cap = min(f.cap, g.cap)
        deg = f.module.deg
        out = {}
        for m, fm in f.comps.items():
            for qq, gq in g.comps.items():
                n = m - 1 + qq
                if n > cap or n < 0:
                    continue
                gdeg = g.map_degree(qq)
                for p in range(m):
                    r = m - 1 - p
                    s = sign_rule(p, qq, r, g.degree)
                    comp = mm_partial(fm, p + 1, gq, gdeg, deg)
                    if comp:
                        mm_iadd(out.setdefault(n, {}), comp, s)
        out = {k: v for k, v in out.items() if v}
        return ConvolutionElement(f.variant, f.degree + g.degree, f.module, out, cap)
    return star_


def _shifted_sign(p, qq, r, gd):
    return 1


def _classical_sign(p, qq, r, gd):
    # (-1)^{p(q+1)} from the coproduct, (-1)^{|g|(p+r)} from moving g past
    # the p+r remaining suspension symbols
    return -1 if (p * (qq + 1) + gd * (p + r)) % 2 else 1


def _ucom_star(f, g):
    f._check(g)
    cap = min(f.cap, g.cap)
    deg = f.module.deg
    out = {}
    from itertools import combinations
    for m, fm in f.comps.items():
        if m == 0:
            continue
        for qq, gq in g.comps.items():
            n = m - 1 + qq
            if n > cap or n < 0:
                continue
            h = mm_partial(fm, 1, gq, g.map_degree(qq), deg)
            if not h:
                continue
            acc = out.setdefault(n, {})
            for S in combinations(range(n), qq):
                Ss = set(S)
                word = list(S) + [i for i in range(n) if i not in Ss]
                mm_iadd(acc, mm_reorder(h, word, deg))
    out = {k: v for k, v in out.items() if v}
    return ConvolutionElement(f.variant, f.degree + g.degree, f.module, out, cap)


register_variant(Variant("uAs_dual", lambda n: 0, lambda n: n, _arity_star(_shifted_sign)))
register_variant(Variant("endc_shifted", lambda n: n - 1, lambda n: n, _arity_star(_classical_sign)))
register_variant(Variant("uCom_dual", lambda n: 0, lambda n: n, _ucom_star, symmetric=True))


def star(f, g):
    f._check(g)
    return f.V.star(f, g)


def bracket(x, y):
    s = -1 if (x.degree * y.degree) % 2 else 1
    return star(x, y) - star(y, x).scale(s)


# ---------------------------------------------------------------- braces and circle

def brace(a, *bs, _memo=None):
    """Symmetric braces {a; b_1..b_n} by the recursion
    {a;b_1..b_n} = {{a;b_1..b_{n-1}};b_n} - sum_i eps_i {a;..,{b_i;b_n},..}."""
    bs = list(bs)
    if not bs:
        return a
    memo = {} if _memo is None else _memo
    return _brace(a, bs, memo, {})


def _brace(a, bs, memo, stars):
    n = len(bs)
    if n == 0:
        return a
    if n == 1:
        return _star_memo(a, bs[0], stars)
    even = all(b.degree % 2 == 0 for b in bs)
    key = (id(a), tuple(sorted(id(b) for b in bs)) if even else tuple(id(b) for b in bs))
    if key in memo:
        return memo[key][0]
    bn = bs[-1]
    res = _star_memo(_brace(a, bs[:-1], memo, stars), bn, stars)
    for i in range(n - 1):
        e = sum(b.degree for b in bs[i + 1:n - 1]) * bn.degree
        inner = _star_memo(bs[i], bn, stars)
        term = _brace(a, bs[:i] + [inner] + bs[i + 1:n - 1], memo, stars)
        res = res - term if e % 2 == 0 else res + term
    memo[key] = (res, a, list(bs))  # keep referenced objects alive
    return res


def _star_memo(x, y, stars):
    k = (id(x), id(y))
    if k not in stars:
        stars[k] = (star(x, y), x, y)
    return stars[k][0]


def circle(a, g, check=True):
    """a (.) g for group-like g = 1 + b: sum_n 1/n! {a; b, ..., b}."""
    a._check(g)
    one = unit(a.variant, a.module, g.cap)
    b = g - one
    if check and not b.filt_ok(gauge=True):
        raise FiltrationViolation("arity 0/1 part of b must raise filtration")
    if b.is_zero():
        return a.like(a.comps, cap=min(a.cap, g.cap))
    memo, stars = {}, {}
    res = a.like(a.comps, cap=min(a.cap, g.cap))
    maxn = max((a.V.arity(k) for k in a.comps), default=0)
    for n in range(1, maxn + 1):
        t = _brace(a, [b] * n, memo, stars)
        if not t.is_zero():
            res = res + t.scale(Q(1, factorial(n)))
    return res


# ---------------------------------------------------------------- exp / log / BCH

_MAXTERMS = 200


def prelie_exp(lam, check=True):
    """e^lam = 1 + lam + lam^2/2! + ... with lam^n = (..(lam*lam)*..)*lam."""
    if lam.degree != 0 and not lam.is_zero():
        raise ValueError("gauge elements have degree 0")
    if check and not lam.filt_ok(gauge=True):
        raise FiltrationViolation("lambda must raise filtration in arity 0 and 1")
    one = unit(lam.variant, lam.module, lam.cap)
    res = one + lam
    p = lam
    for n in range(2, _MAXTERMS):
        p = star(p, lam)
        if p.is_zero():
            return res
        res = res + p.scale(Q(1, factorial(n)))
    raise ArithmeticError("exponential series did not terminate")


def bernoulli(m):
    """Bernoulli numbers with B_1 = -1/2."""
    B = [Q(1)]
    for k in range(1, m + 1):
        s = sum(Q(factorial(k + 1), factorial(j) * factorial(k + 1 - j)) * B[j] for j in range(k))
        B.append(-s / (k + 1))
    return B[m]


def prelie_log(g, check=True):
    """Magnus expansion: the fixed point Omega = sum_m B_m/m! R_Omega^m(x),
    R_Omega(y) = y * Omega, with x = g - 1."""
    one = unit(g.variant, g.module, g.cap)
    x = g - one
    if check and not x.filt_ok(gauge=True):
        raise FiltrationViolation("g - 1 must raise filtration in arity 0 and 1")
    if x.is_zero():
        return x.like({}, degree=0)
    coef = {}
    omega = x
    for _ in range(_MAXTERMS):
        new = x
        y = x
        for m in range(1, _MAXTERMS):
            y = star(y, omega)
            if y.is_zero():
                break
            if m not in coef:
                coef[m] = bernoulli(m) / factorial(m)
            if coef[m]:
                new = new + y.scale(coef[m])
        if new == omega:
            return omega
        omega = new
    raise ArithmeticError("Magnus expansion did not stabilize")


def bch(x, y):
    return prelie_log(circle(prelie_exp(x), prelie_exp(y)))


def bch_series3(x, y):
    """Lie-series BCH through order three (test oracle)."""
    xy = bracket(x, y)
    return x + y + xy.scale(Q(1, 2)) + (bracket(xy, y) + bracket(bracket(y, x), x)).scale(Q(1, 12))


def is_mc(alpha):
    return star(alpha, alpha).is_zero()


def gauge_action(lam, alpha, check=True):
    """e^lam . alpha = (e^lam * alpha) (.) e^{-lam}."""
    if check and alpha.degree != -1:
        raise NotMaurerCartan(f"alpha has degree {alpha.degree}, expected -1")
    if check and not is_mc(alpha):
        raise NotMaurerCartan("alpha * alpha != 0 within the cap")
    return circle(star(prelie_exp(lam), alpha), prelie_exp(-lam))


def gauge_action_ad(lam, alpha):
    """e^{ad_lam}(alpha), with ad_lam(y) = lam*y - y*lam (lam has degree 0)."""
    res = alpha
    t = alpha
    for n in range(1, _MAXTERMS):
        t = (star(lam, t) - star(t, lam)).scale(Q(1, n))
        if t.is_zero():
            return res
        res = res + t
    raise ArithmeticError("adjoint series did not terminate")


def isotopy_invert(f):
    one = unit(f.variant, f.module, f.cap)
    x = f - one
    if f.degree != 0 and not x.is_zero():
        raise NotIsotopy("degree must be 0")
    if not x.filt_ok(gauge=True):
        raise NotIsotopy("f_1 - id and f_0 must raise filtration")
    return prelie_exp(-prelie_log(f))
