"""Curved A-infinity and L-infinity structures on finite filtered modules.

Degrees are homological.  Shifted regime: theta and every m_n have degree -1,
twisting elements have degree 0.  Classical regime: |theta| = -2, |m_n| = n-2,
twisting elements have degree -1.

Internally a structure is held as a Maurer-Cartan element of the matching
convolution algebra (uAs_dual, endc_shifted, uCom_dual), so the gauge machinery
applies verbatim.  The relation checkers below are written out from the
explicit formulas instead, and the tests compare both.
"""
import json
from itertools import combinations, permutations, product
from math import factorial

from .core import FilteredModule, GradedBasis, Q, add_to, fmt, koszul_sign, perm_sign, q, shuffle_inverses
from .gauge import (ConvolutionElement, FiltrationViolation, circle, identity_map, mm_add, mm_apply,
                    mm_filt_excess, mm_iadd, mm_partial, mm_reorder, mm_scale, star, unit)


class DegreeMismatch(ValueError):
    pass


class NoCurvatureFunctional(ValueError):
    pass


class Report:
    """Truthy iff ok; failures is a list of (where, inputs, residual)."""

    def __init__(self, failures=(), what=""):
        self.failures = list(failures)
        self.what = what

    @property
    def ok(self):
        return not self.failures

    def __bool__(self):
        return self.ok

    def first(self):
        return self.failures[0] if self.failures else None

    def __repr__(self):
        if self.ok:
            return f"Report({self.what}: pass)"
        return f"Report({self.what}: {len(self.failures)} failures, first={self.failures[0]!r})"


def _map_failures(where, m, names):
    out = []
    for t, v in sorted(m.items()):
        out.append((where, tuple(names[x] for x in t), {names[o]: fmt(c) for o, c in sorted(v.items())}))
    return out


# ---------------------------------------------------------------- structures

class _Structure:
    kind = None

    def __init__(self, module, theta=None, maps=None, cap=4, shift=True):
        self.module = module
        self.shift = bool(shift)
        self.cap = int(cap)
        self.theta = {i: q(c) for i, c in (theta or {}).items() if c}
        self.maps = {}
        for n, m in (maps or {}).items():
            if n < 1 or n > self.cap:
                continue
            m = {tuple(t): {o: q(c) for o, c in v.items() if c} for t, v in m.items()}
            m = {t: v for t, v in m.items() if v}
            if m:
                self.maps[n] = m

    def comps(self):
        c = {n: m for n, m in self.maps.items()}
        if self.theta:
            c[0] = {(): dict(self.theta)}
        return c

    def op(self, n):
        if n == 0:
            return {(): dict(self.theta)} if self.theta else {}
        return self.maps.get(n, {})

    def map_degree(self, n):
        raise NotImplementedError

    def check_degrees(self):
        deg = self.module.deg
        for n, m in self.comps().items():
            for t, v in m.items():
                for o in v:
                    if deg[o] - sum(deg[x] for x in t) != self.map_degree(n):
                        raise DegreeMismatch(f"arity {n}: entry {t}->{o} has the wrong degree")

    def check_filtration(self):
        f = self.module.filt
        for n, m in self.comps().items():
            e = mm_filt_excess(m, f)
            if e is not None and e < 0:
                raise FiltrationViolation(f"arity {n} map lowers filtration")

    def __eq__(self, other):
        return (type(self) is type(other) and self.module == other.module and self.shift == other.shift
                and self.theta == other.theta and self.maps == other.maps)

    __hash__ = object.__hash__

    def element_degree(self):
        return 0 if self.shift else -1

    def _elem_check(self, a):
        a = {i: q(c) for i, c in a.items() if c}
        if self.module.vec_filt(a) < 1:
            raise FiltrationViolation("the twisting element must lie in F_1")
        d = self.module.vec_degree(a)
        if d is not None and d != self.element_degree():
            raise DegreeMismatch(f"twisting element must have degree {self.element_degree()}")
        return a


class CurvedAinftyStructure(_Structure):
    kind = "ainfty"

    def map_degree(self, n):
        return -1 if self.shift else n - 2

    @property
    def variant(self):
        return "uAs_dual" if self.shift else "endc_shifted"

    def alpha(self, cap=None):
        return ConvolutionElement(self.variant, -1, self.module, self.comps(), cap or self.cap)

    @classmethod
    def from_alpha(cls, alpha, cap=None):
        shift = alpha.variant == "uAs_dual"
        theta = alpha.component(0).get((), {})
        maps = {n: m for n, m in alpha.comps.items() if n >= 1}
        return cls(alpha.module, theta, maps, cap or alpha.cap, shift)

    def like(self, theta, maps):
        return type(self)(self.module, theta, maps, self.cap, self.shift)


class CurvedLinftyStructure(_Structure):
    """Maps stored as full (Koszul-symmetric) tables."""
    kind = "linfty"

    def map_degree(self, n):
        return -1 if self.shift else n - 2

    variant = "uCom_dual"

    def alpha(self, cap=None):
        if not self.shift:
            raise ValueError("convolution picture only for the shifted regime; suspend first")
        return ConvolutionElement("uCom_dual", -1, self.module, self.comps(), cap or self.cap)

    @classmethod
    def from_alpha(cls, alpha, cap=None):
        theta = alpha.component(0).get((), {})
        maps = {n: m for n, m in alpha.comps.items() if n >= 1}
        return cls(alpha.module, theta, maps, cap or alpha.cap, True)

    def like(self, theta, maps):
        return type(self)(self.module, theta, maps, self.cap, self.shift)

    def sign_rule(self, perm, t):
        """Sign of the symmetric-group action (Koszul, times sgn in the classical regime)."""
        s = koszul_sign([self.module.deg[x] for x in t], perm)
        return s if self.shift else s * perm_sign(perm)

    def is_symmetric(self):
        for n, m in self.maps.items():
            for w in permutations(range(n)):
                if self._act(m, w) != m:
                    return False
        return True

    def _act(self, m, word):
        out = {}
        deg = self.module.deg
        for k, v in m.items():
            t = [None] * len(word)
            for j, w in enumerate(word):
                t[w] = k[j]
            t = tuple(t)
            s = koszul_sign([deg[x] for x in t], list(word))
            if not self.shift:
                s *= perm_sign(list(word))
            d = out.setdefault(t, {})
            for o, c in v.items():
                add_to(d, o, s * c)
            if not d:
                del out[t]
        return out


def symmetrize_map(m, n, deg, classical=False):
    acc = {}
    for w in permutations(range(n)):
        r = mm_reorder(m, list(w), deg)
        mm_iadd(acc, r, perm_sign(list(w)) if classical else 1)
    return acc


# ---------------------------------------------------------------- relations

def ainfty_relation(s, n):
    """Left side of the arity-n relation: sum over p+q+r = n of
    (+/-) m_{p+1+r} o_{p+1} m_q  (unsigned when shifted, (-1)^{pq+r} classical)."""
    deg = s.module.deg
    out = {}
    for qq in range(0, n + 1):
        inner = s.op(qq)
        if not inner:
            continue
        gdeg = s.map_degree(qq)
        for p in range(0, n - qq + 1):
            r = n - qq - p
            outer = s.op(p + 1 + r)
            if not outer:
                continue
            sign = 1 if s.shift else (-1) ** ((p * qq + r) % 2)
            mm_iadd(out, mm_partial(outer, p + 1, inner, gdeg, deg), sign)
    return out


def linfty_relation(s, n):
    """sum_{p+q=n} sum over inverse (q,p)-shuffles (l_{p+1} o_1 l_q)^sigma."""
    deg = s.module.deg
    out = {}
    for qq in range(0, n + 1):
        inner = s.op(qq)
        outer = s.op(n - qq + 1)
        if not inner or not outer:
            continue
        h = mm_partial(outer, 1, inner, s.map_degree(qq), deg)
        for w in shuffle_inverses(qq, n - qq):
            r = mm_reorder(h, list(w), deg)
            if not s.shift:
                r = mm_scale(r, perm_sign(list(w)))
            mm_iadd(out, r)
    return out


def check_relations(s, upto=None):
    if s.cap < 1:
        raise ValueError("arity cap must be at least 1")
    s.check_degrees()
    if s.kind == "linfty" and not s.shift:
        return check_relations(suspend(s), upto)
    rel = ainfty_relation if s.kind == "ainfty" else linfty_relation
    fails = []
    names = s.module.basis.names
    for n in range(0, (s.cap - 1 if upto is None else upto) + 1):
        r = rel(s, n)
        if r:
            fails += _map_failures(n, r, names)
    return Report(fails, f"{s.kind} relations")


# ---------------------------------------------------------------- twisting

def mc_residual(s, a):
    """theta + d(a) + m_2(a,a) + ...  (A-inf), sum 1/k! l_k(a^k) (L-inf)."""
    a = s._elem_check(a)
    out = dict(s.theta)
    for n, m in s.maps.items():
        c = Q(1, factorial(n)) if s.kind == "linfty" else 1
        for o, v in mm_apply(m, [a] * n).items():
            add_to(out, o, c * v)
    return out


def _twist_ainfty_maps(s, a):
    deg = s.module.deg
    comps = s.comps()
    out = {}
    for N, m in comps.items():
        for t, v in m.items():
            apos = [j for j in range(N) if t[j] in a]
            for k in range(len(apos) + 1):
                for S in combinations(apos, k):
                    n = N - k
                    if n > s.cap:
                        continue
                    c = Q(1)
                    Ss = set(S)
                    e = 0
                    for j in range(N):
                        if j in Ss:
                            c *= a[t[j]]
                        elif not s.shift:
                            # every later a crosses this free input: the printed
                            # (-1)^{k r_k} plus the Koszul sign of the odd a
                            e += (deg[t[j]] + 1) * sum(1 for i in S if i > j)
                    if e % 2:
                        c = -c
                    key = tuple(t[j] for j in range(N) if j not in Ss)
                    d = out.setdefault(n, {}).setdefault(key, {})
                    for o, x in v.items():
                        add_to(d, o, c * x)
                    if not d:
                        del out[n][key]
    return out


def twist(s, a):
    """m_n^a = sum (-1)^{sum k r_k} m_{n+|r|}(a^{r_0}, -, a^{r_1}, ..., -, a^{r_n}).

    In the classical regime the insertions are End-operad composites, so the odd
    element a also picks up the Koszul sign of the inputs it passes.  The
    shifted regime carries no sign at all."""
    if s.kind != "ainfty":
        raise TypeError("twist expects a curved A-infinity structure")
    a = s._elem_check(a)
    out = _twist_ainfty_maps(s, a)
    theta = out.pop(0, {}).get((), {})
    return s.like(theta, out)


def twist_linfty(s, a):
    """l_n^a = sum_k 1/k! l_{k+n}(a^k, -, ..., -)."""
    if s.kind != "linfty":
        raise TypeError("twist_linfty expects a curved L-infinity structure")
    a = s._elem_check(a)
    out = {}
    for N, m in s.comps().items():
        for t, v in m.items():
            for k in range(N + 1):
                if any(x not in a for x in t[:k]):
                    break
                n = N - k
                if n > s.cap:
                    continue
                c = Q(1, factorial(k))
                for x in t[:k]:
                    c *= a[x]
                d = out.setdefault(n, {}).setdefault(t[k:], {})
                for o, x in v.items():
                    add_to(d, o, c * x)
                if not d:
                    del out[n][t[k:]]
    theta = out.pop(0, {}).get((), {})
    return s.like(theta, out)


def element_as_gauge(module, variant, a, cap, degree=0):
    """The arity-0 convolution element carrying a."""
    return ConvolutionElement(variant, degree, module, {0: {(): dict(a)}} if a else {}, cap)


def twist_by_circle(s, a):
    """alpha (.) (1 + a), the gauge-action route (used as a cross-check)."""
    al = s.alpha()
    g = unit(al.variant, s.module, s.cap) + element_as_gauge(s.module, al.variant, a, s.cap)
    return type(s).from_alpha(circle(al, g), s.cap)


def symmetrize(s):
    """l_n = sum_sigma m_n^sigma (with sgn(sigma) in the classical regime)."""
    deg = s.module.deg
    maps = {n: symmetrize_map(m, n, deg, classical=not s.shift) for n, m in s.maps.items()}
    return CurvedLinftyStructure(s.module, s.theta, maps, s.cap, s.shift)


# ---------------------------------------------------------------- (de)suspension

def suspension_constant(n):
    """Global sign c_n used on arity-n components (see the decisions ledger)."""
    return -1 if (n * (n - 1) // 2) % 2 else 1


def _susp_map(m, n, deg_src, shift_dir):
    """Conjugate an arity-n map by the (de)suspension, Koszul signs included.

    shift_dir=+1: classical maps on A -> shifted maps on sA.
    The sign for inputs sx_1..sx_n is (-1)^{sum_j (n-j)(|x_j|)} * c_n, where the
    |x_j| are classical degrees."""
    out = {}
    cn = suspension_constant(n)
    for t, v in m.items():
        e = sum((n - 1 - j) * (deg_src[x]) for j, x in enumerate(t))
        s = cn * (-1 if e % 2 else 1)
        out[t] = {o: s * c for o, c in v.items()}
    return out


def suspend_module(module, by=1):
    els = [(n, d + by, f) for n, d, f in module.basis.elements]
    return FilteredModule(GradedBasis(els), module.N)


def suspend(s):
    """Classical structure on A -> shifted structure on sA (same basis names)."""
    if s.shift:
        raise ValueError("already shifted")
    M = suspend_module(s.module, 1)
    deg = s.module.deg
    maps = {n: _susp_map(m, n, deg, 1) for n, m in s.maps.items()}
    return type(s)(M, dict(s.theta), maps, s.cap, True)


def desuspend(s):
    """Inverse of suspend."""
    if not s.shift:
        raise ValueError("already classical")
    M = suspend_module(s.module, -1)
    deg = M.deg
    maps = {n: _susp_map(m, n, deg, -1) for n, m in s.maps.items()}
    return type(s)(M, dict(s.theta), maps, s.cap, False)


# ---------------------------------------------------------------- infinity-morphisms

class _Sum:
    """Direct sum of several modules, with index offsets."""

    def __init__(self, modules):
        els = []
        self.offsets = []
        off = 0
        for k, M in enumerate(modules):
            self.offsets.append(off)
            els += [(f"{k}.{n}", d, f) for n, d, f in M.basis.elements]
            off += M.dim
        self.module = FilteredModule(GradedBasis(els), max(M.N for M in modules))
        self.modules = modules

    def embed(self, m, src, dst):
        so, do = self.offsets[src], self.offsets[dst]
        return {tuple(x + so for x in t): {o + do: c for o, c in v.items()} for t, v in m.items()}

    def project(self, m, src, dst):
        so, do = self.offsets[src], self.offsets[dst]
        ns, nd = self.modules[src].dim, self.modules[dst].dim
        out = {}
        for t, v in m.items():
            if not all(so <= x < so + ns for x in t):
                continue
            w = {o - do: c for o, c in v.items() if do <= o < do + nd}
            if w:
                out[tuple(x - so for x in t)] = w
        return out


class InfinityMorphism:
    """f_0 (a vector of the target, in F_1) and f_n : source^n -> target."""

    def __init__(self, source, target, f0=None, maps=None, cap=None):
        if source.kind != target.kind or source.shift != target.shift:
            raise ValueError("source and target must be of the same kind and regime")
        self.source = source
        self.target = target
        self.cap = int(cap if cap is not None else min(source.cap, target.cap))
        self.f0 = {i: q(c) for i, c in (f0 or {}).items() if c}
        self.maps = {n: {tuple(t): {o: q(c) for o, c in v.items() if c} for t, v in m.items()}
                     for n, m in (maps or {}).items() if 1 <= n <= self.cap}
        self.maps = {n: {t: v for t, v in m.items() if v} for n, m in self.maps.items()}
        self.maps = {n: m for n, m in self.maps.items() if m}

    @classmethod
    def identity(cls, s):
        return cls(s, s, {}, {1: identity_map(s.module.dim)}, s.cap)

    def comps(self):
        c = dict(self.maps)
        if self.f0:
            c[0] = {(): dict(self.f0)}
        return c

    def __eq__(self, other):
        return self.f0 == other.f0 and self.maps == other.maps

    __hash__ = object.__hash__

    def __repr__(self):
        return f"InfinityMorphism(f0={self.f0}, arities={sorted(self.maps)})"


def _variant_of(s):
    if s.kind == "linfty":
        return "uCom_dual"
    return "uAs_dual" if s.shift else "endc_shifted"


def _morphism_setting(structs):
    S = _Sum([s.module for s in structs])
    return S, _variant_of(structs[0])


def _alpha_in(S, variant, s, k, cap):
    return ConvolutionElement(variant, -1, S.module, {n: S.embed(m, k, k) for n, m in s.comps().items()}, cap)


def _f_in(S, variant, f, src, dst, cap):
    return ConvolutionElement(variant, 0, S.module, {n: S.embed(m, src, dst) for n, m in f.comps().items()}, cap)


def check_infinity_morphism(f):
    """f * alpha = beta (.) f, arity by arity up to the cap."""
    if f.target.module.vec_filt(f.f0) < 1:
        raise FiltrationViolation("f_0 must lie in F_1")
    if f.source.kind == "linfty" and not f.source.shift:
        raise ValueError("classical L-infinity morphisms: suspend first")
    cap = f.cap
    S, var = _morphism_setting([f.source, f.target])
    al = _alpha_in(S, var, f.source, 0, cap)
    be = _alpha_in(S, var, f.target, 1, cap)
    F = _f_in(S, var, f, 0, 1, cap)
    lhs = star(F, al)
    rhs = circle(be, F, check=False)
    fails = []
    names = S.module.basis.names
    for n in range(0, cap):
        d = mm_add(lhs.component(n), rhs.component(n), -1)
        if d:
            fails += _map_failures(n, d, names)
    return Report(fails, "infinity-morphism equation")


def _morph_from(S, el, src, dst, source, target, cap):
    comps = {n: S.project(m, src, dst) for n, m in el.comps.items()}
    f0 = comps.pop(0, {}).get((), {})
    return InfinityMorphism(source, target, f0, comps, cap)


def compose(g, f):
    """g (.) f for f: A -> B, g: B -> C."""
    cap = min(f.cap, g.cap)
    S, var = _morphism_setting([f.source, f.target, g.target])
    F = _f_in(S, var, f, 0, 1, cap)
    G = _f_in(S, var, g, 1, 2, cap)
    return _morph_from(S, circle(G, F, check=False), 0, 2, f.source, g.target, cap)


def pushforward(f, a):
    """(f(a), f^a - f(a)) with f^a = f (.) (1 + a)."""
    a = f.source._elem_check(a)
    cap = f.cap
    S, var = _morphism_setting([f.source, f.target])
    F = _f_in(S, var, f, 0, 1, cap)
    one = unit(var, S.module, cap)
    A = ConvolutionElement(var, 0, S.module, {0: {(): {x + S.offsets[0]: c for x, c in a.items()}}}, cap)
    Fa = circle(F, one + A, check=False)
    m = _morph_from(S, Fa, 0, 1, f.source, f.target, cap)
    image = m.f0
    src_tw = twist(f.source, a) if f.source.kind == "ainfty" else twist_linfty(f.source, a)
    tgt_tw = twist(f.target, image) if f.target.kind == "ainfty" else twist_linfty(f.target, image)
    return image, InfinityMorphism(src_tw, tgt_tw, {}, m.maps, cap)


def split_constant(f):
    return dict(f.f0), InfinityMorphism(f.source, f.target, {}, f.maps, f.cap)


def dr_compose(g, f):
    """(c + g) (.) (b + f) = (c + g(b)) + (g^b - g(b)) (.) f."""
    if f.target.module != g.source.module:
        raise ValueError("target of f must be the source of g")
    if f.cap != g.cap:
        raise ValueError("arity caps differ")
    return compose(g, f)


def dr_compose_formula(g, f):
    """The right side (c + g(b)) + (g^b - g(b)) (.) f, evaluated separately."""
    b, f_ = split_constant(f)
    c, g_ = split_constant(g)
    gb, gtw = pushforward(g_, b)
    gtw = InfinityMorphism(f.target, g.target, {}, gtw.maps, g.cap)
    comp = compose(gtw, InfinityMorphism(f.source, f.target, {}, f_.maps, f.cap))
    const = dict(c)
    for i, v in gb.items():
        add_to(const, i, v)
    for i, v in comp.f0.items():
        add_to(const, i, v)
    return InfinityMorphism(f.source, g.target, const, comp.maps, comp.cap)


# ---------------------------------------------------------------- Kontsevich-Positselski

def _kp_h(fn, n, theta_dual, variant, deg):
    """nu_{n+1} -> theta* (x) f_n :  (x_1, ..., x_{n+1}) -> s theta*(x_1) f_n(x_2, ...)."""
    s = 1
    if variant == "endc_shifted":
        # make the (p,q,r) = (0,0,n) star term with alpha_0 give back +f_n
        s = -1 if n % 2 else 1
    out = {}
    for i, c in theta_dual.items():
        for t, v in fn.items():
            out[(i,) + t] = {o: s * c * x for o, x in v.items()}
    return out


def kp_gauge(s, theta_dual, arity_cap):
    """lambda with lambda_0 = lambda_1 = 0 and (1 + lambda) * alpha = alpha_0 in arities <= arity_cap."""
    if not s.theta:
        raise NoCurvatureFunctional("the curvature vanishes")
    theta_dual = {i: q(c) for i, c in theta_dual.items() if c}
    if sum(theta_dual.get(i, 0) * c for i, c in s.theta.items()) != 1:
        raise NoCurvatureFunctional("theta_dual(theta) != 1")
    var = s.variant
    W = arity_cap + 1
    al = ConvolutionElement(var, -1, s.module, s.comps(), W)
    alphas = {n: al.like({n: m}) for n, m in al.comps.items()}
    lam = {}
    for n in range(1, arity_cap + 1):
        delta = alphas.get(n, al.like({}))
        for k in range(2, n + 1):
            if k in lam and (n - k + 1) in alphas:
                delta = delta + star(al.like({k: lam[k]}, degree=0), alphas[n - k + 1])
        dn = delta.component(n)
        h = _kp_h(dn, n, theta_dual, var, s.module.deg)
        if h:
            lam[n + 1] = mm_scale(h, -1)
    return ConvolutionElement(var, 0, s.module, lam, W)


def kp_residual(s, lam, arity_cap):
    """(1 + lambda) * alpha - alpha_0 restricted to arities <= arity_cap."""
    var = s.variant
    W = max(arity_cap + 1, lam.cap)
    al = ConvolutionElement(var, -1, s.module, s.comps(), W)
    g = unit(var, s.module, W) + lam.like(lam.comps, cap=W)
    r = star(g, al) - al.like({0: al.component(0)} if al.component(0) else {})
    return {n: m for n, m in r.comps.items() if n <= arity_cap}


# ---------------------------------------------------------------- JSON I/O

def structure_to_json(s):
    names = s.module.basis.names
    ops = []
    for n in sorted(s.maps):
        m = s.maps[n]
        for t in sorted(m):
            if s.kind == "linfty" and list(t) != sorted(t):
                continue
            for o, c in sorted(m[t].items()):
                ops.append({"arity": n, "inputs": [names[x] for x in t], "output": names[o], "coeff": fmt(c)})
    ops.sort(key=lambda e: (e["arity"], e["inputs"], e["output"]))
    d = {
        "grading": "homological",
        "kind": s.kind,
        "shift": s.shift,
        "nilpotency": s.module.N,
        "arity_cap": s.cap,
        "basis": [{"name": n, "degree": dg, "filtration": f} for n, dg, f in s.module.basis.elements],
        "curvature": [{"basis": names[i], "coeff": fmt(c)} for i, c in sorted(s.theta.items())],
        "operations": ops,
    }
    return d


def dumps(d):
    return json.dumps(d, sort_keys=True, indent=2) + "\n"


class SchemaError(ValueError):
    pass


def structure_from_json(d, kind=None):
    try:
        if d.get("grading", "homological") != "homological":
            raise SchemaError("only homological grading is supported")
        kind = kind or d.get("kind", "ainfty")
        M = FilteredModule([(b["name"], int(b["degree"]), int(b["filtration"])) for b in d["basis"]],
                           int(d["nilpotency"]))
        idx = M.basis.index
        theta = {}
        for e in d.get("curvature", []):
            add_to(theta, idx[e["basis"]], q(e["coeff"]))
        maps = {}
        for e in d.get("operations", []):
            t = tuple(idx[x] for x in e["inputs"])
            n = int(e["arity"])
            if n != len(t) or n < 1:
                raise SchemaError(f"bad arity in {e}")
            add_to(maps.setdefault(n, {}).setdefault(t, {}), idx[e["output"]], q(e["coeff"]))
        cap = int(d.get("arity_cap", max(maps, default=1)))
        shift = bool(d["shift"])
    except (KeyError, TypeError, ValueError) as ex:
        if isinstance(ex, SchemaError):
            raise
        raise SchemaError(str(ex)) from ex
    if kind == "ainfty":
        s = CurvedAinftyStructure(M, theta, maps, cap, shift)
    elif kind == "linfty":
        s = CurvedLinftyStructure(M, theta, {}, cap, shift)
        full = {}
        for n, m in maps.items():
            acc = {}
            for t, v in m.items():
                seen = set()
                for w in permutations(range(n)):
                    r = s._act({t: v}, w)
                    k = next(iter(r)) if r else None
                    if k is None or k in seen:
                        continue
                    seen.add(k)
                    mm_iadd(acc, r)
            full[n] = acc
        s = CurvedLinftyStructure(M, theta, full, cap, shift)
    else:
        raise SchemaError(f"unknown kind {kind!r}")
    s.check_degrees()
    s.check_filtration()
    return s


# ---------------------------------------------------------------- random instances

def random_module(rng, dim, N, degrees, positive=True):
    # weighted towards low filtration so that higher arities survive
    levels = [1] * 3 + list(range(1, N)) if positive else [0] * 3 + list(range(0, N))
    els = [(f"e{i}", degrees[i % len(degrees)] if i < len(degrees) else rng.choice(degrees),
            rng.choice(levels)) for i in range(dim)]
    return FilteredModule(els, N)


def random_map(rng, M, n, mdeg, raise_=0, density=0.5, coeffs=(-2, -1, 1, 2)):
    out = {}
    for t in product(range(M.dim), repeat=n):
        fs = sum(M.filt[x] for x in t) + raise_
        ds = sum(M.deg[x] for x in t) + mdeg
        for o in range(M.dim):
            if M.deg[o] == ds and M.filt[o] >= fs and rng.random() < density:
                out.setdefault(t, {})[o] = Q(rng.choice(coeffs))
    return out


def random_gauge(rng, M, variant, cap, density=0.4, min_arity=0):
    from .gauge import get_variant
    V = get_variant(variant)
    comps = {}
    for n in range(min_arity, cap + 1):
        m = random_map(rng, M, n, V.offset(n), 1 if n <= 1 else 0, density)
        if variant == "uCom_dual" and n >= 2:
            m = symmetrize_map(m, n, M.deg)
        comps[n] = m
    return ConvolutionElement(variant, 0, M, comps, cap)


def _theta_index(M, shift):
    want = -1 if shift else -2
    c = [i for i in range(M.dim) if M.deg[i] == want]
    return min(c, key=lambda i: (M.filt[i], i)) if c else None


def random_ainfty(rng, shift=True, dim=5, N=4, cap=4, curved=True, density=0.4):
    """e^lambda . (theta + d) on a positively filtered module: always a valid structure."""
    degs = [0, -1, 0, -1, 0, -1] if shift else [-1, -2, -1, -2, 0, -1]
    M = random_module(rng, dim, N, degs)
    return _random_valid(rng, M, CurvedAinftyStructure, "uAs_dual" if shift else "endc_shifted",
                         shift, cap, curved, density)


def random_linfty(rng, dim=5, N=4, cap=4, curved=True, density=0.4):
    M = random_module(rng, dim, N, [0, -1, 0, -1, 0, -1])
    return _random_valid(rng, M, CurvedLinftyStructure, "uCom_dual", True, cap, curved, density)


def _square_zero(rng, M, mdeg):
    """A random d with d o d = 0: images avoid the domain."""
    src, tgt = set(), set()
    d = {}
    order = list(range(M.dim))
    rng.shuffle(order)
    for i in order:
        if i in tgt:
            continue
        cands = [o for o in range(M.dim) if o not in src and o != i and M.deg[o] == M.deg[i] + mdeg
                 and M.filt[o] >= M.filt[i]]
        if cands and rng.random() < 0.7:
            o = rng.choice(cands)
            d[(i,)] = {o: Q(rng.choice((-1, 1, 2)))}
            src.add(i)
            tgt.add(o)
    return d


def _random_valid(rng, M, cls, variant, shift, cap, curved, density):
    base = {}
    if curved:
        ti = _theta_index(M, shift)
        if ti is not None:
            base[0] = {(): {ti: Q(1)}}
    mdeg = -1
    d = _square_zero(rng, M, mdeg)
    if d:
        base[1] = d
    from .gauge import gauge_action
    alpha = ConvolutionElement(variant, -1, M, base, cap)
    lam = random_gauge(rng, M, variant, cap, density, min_arity=0 if curved else 1)
    return cls.from_alpha(gauge_action(lam, alpha), cap)


def random_element(rng, s, density=0.6):
    M = s.module
    want = s.element_degree()
    a = {}
    for i in range(M.dim):
        if M.deg[i] == want and M.filt[i] >= 1 and rng.random() < density:
            a[i] = Q(rng.choice((-2, -1, 1, 2, 3)))
    return a
