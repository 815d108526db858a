"""The free ns operad on graded generators, derivations, and the MC A-inf / Tw A-inf
differentials.

A planar tree is a nested tuple: a leaf is None, a vertex is (label, child_1, ...,
child_k) with k the arity of the label.  Its canonical word is the preorder list
of labels; grafting t2 into a leaf of t1 moves the block t2 past the labels of
t1 standing to the right of that leaf, which produces the Koszul sign.
Degrees are the homological ones of the MC A-inf operad: alpha has degree -1,
mu_n has degree n - 2.
"""
from fractions import Fraction

from .core import add_to, fmt, koszul_sign

Q = Fraction


class IndexOutOfRange(IndexError):
    pass


class UnknownGenerator(KeyError):
    pass


# ---------------------------------------------------------------- generators

class Alphabet:
    """name -> (arity, degree, filtration).  The default one is alpha, mu2, mu3, ...
    generated on demand."""

    def __init__(self, gens=None, ainfty=True):
        self.gens = dict(gens or {})
        self.ainfty = ainfty

    def sig(self, name):
        if name in self.gens:
            return self.gens[name]
        if self.ainfty:
            if name == "alpha":
                return (0, -1, 1)
            if name.startswith("mu") and name[2:].isdigit() and int(name[2:]) >= 2:
                n = int(name[2:])
                return (n, n - 2, 0)
        raise UnknownGenerator(name)

    def arity(self, name):
        return self.sig(name)[0]

    def degree(self, name):
        return self.sig(name)[1]


AINF = Alphabet()


def mu(n):
    return f"mu{n}"


def corolla(name, alphabet=AINF):
    return (name,) + (None,) * alphabet.arity(name)


ALPHA = ("alpha",)


# ---------------------------------------------------------------- tree helpers

def arity(t):
    if t is None:
        return 1
    return sum(arity(c) for c in t[1:])


def labels(t):
    """Preorder list of labels."""
    if t is None:
        return []
    out = [t[0]]
    for c in t[1:]:
        out += labels(c)
    return out


def degree(t, alphabet=AINF):
    return sum(alphabet.degree(x) for x in labels(t))


def alpha_count(t):
    return sum(1 for x in labels(t) if x == "alpha")


def encode(t):
    if t is None:
        return "-"
    if len(t) == 1:
        return t[0]
    return t[0] + "(" + ",".join(encode(c) for c in t[1:]) + ")"


def decode(s):
    s = s.replace(" ", "")
    pos = 0

    def parse():
        nonlocal pos
        if s[pos] == "-":
            pos += 1
            return None
        j = pos
        while pos < len(s) and s[pos] not in "(),":
            pos += 1
        name = s[j:pos]
        kids = []
        if pos < len(s) and s[pos] == "(":
            pos += 1
            while True:
                kids.append(parse())
                if s[pos] == ",":
                    pos += 1
                    continue
                if s[pos] == ")":
                    pos += 1
                    break
        return (name,) + tuple(kids)

    t = parse()
    if pos != len(s):
        raise ValueError(f"trailing input in {s!r}")
    return t


def tree_key(t):
    return encode(t)


def _substitute(t, children, alphabet):
    """Fill the leaves of t by children (None keeps the leaf).  Returns the tree and
    the Koszul sign of moving the word [labels of t, c_1, ..., c_k] (each child a
    single block) into the preorder word of the result."""
    degs = [alphabet.degree(x) for x in labels(t)]
    m = len(degs)
    blocks = [j for j, c in enumerate(children) if c is not None]
    degs += [degree(children[j], alphabet) for j in blocks]
    where = {j: m + b for b, j in enumerate(blocks)}
    word = []
    state = {"v": 0, "leaf": 0}

    def walk(x):
        if x is None:
            j = state["leaf"]
            state["leaf"] += 1
            c = children[j]
            if c is not None:
                word.append(where[j])
            return c
        word.append(state["v"])
        state["v"] += 1
        return (x[0],) + tuple(walk(c) for c in x[1:])

    r = walk(t)
    return r, koszul_sign(degs, word)


# ---------------------------------------------------------------- elements

class OperadElement:
    """Sparse linear combination of planar trees."""

    def __init__(self, terms=None, alphabet=AINF):
        self.alphabet = alphabet
        self.terms = {}
        for t, c in (terms or {}).items():
            add_to(self.terms, t, Q(c))

    @classmethod
    def tree(cls, t, c=1, alphabet=AINF):
        return cls({t: Q(c)}, alphabet)

    def __add__(self, other):
        out = dict(self.terms)
        for t, c in other.terms.items():
            add_to(out, t, c)
        return OperadElement(out, self.alphabet)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return OperadElement({t: c * v for t, v in self.terms.items()} if c else {}, self.alphabet)

    def __neg__(self):
        return self.scale(-1)

    def __eq__(self, other):
        return isinstance(other, OperadElement) and self.terms == other.terms

    __hash__ = object.__hash__

    def is_zero(self):
        return not self.terms

    def truncate(self, alpha_cap):
        return OperadElement({t: c for t, c in self.terms.items() if alpha_count(t) <= alpha_cap}, self.alphabet)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda tc: encode(tc[0]))

    def to_json(self):
        return [{"tree": encode(t), "coeff": fmt(c)} for t, c in self.sorted_terms()]

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({fmt(c)}){encode(t)}" for t, c in self.sorted_terms())

    def arities(self):
        return {arity(t) for t in self.terms}

    def degrees(self):
        return {degree(t, self.alphabet) for t in self.terms}


def _as_elem(x, alphabet):
    if isinstance(x, OperadElement):
        return x
    return OperadElement.tree(x, 1, alphabet)


def graft(t1, i, t2, alphabet=AINF, alpha_cap=None):
    """t1 o_i t2, bilinear.  In the preorder word the block t2 lands at leaf i, so
    it passes the labels of t1 to the right of that leaf."""
    e1 = _as_elem(t1, alphabet)
    e2 = _as_elem(t2, alphabet)
    out = {}
    for a, ca in e1.terms.items():
        if not 1 <= i <= arity(a):
            raise IndexOutOfRange(f"leaf {i} of a tree of arity {arity(a)}")
        k = arity(a)
        for b, cb in e2.terms.items():
            if alpha_cap is not None and alpha_count(a) + alpha_count(b) > alpha_cap:
                continue
            kids = [None] * k
            kids[i - 1] = b
            r, s = _substitute(a, kids, alphabet)
            add_to(out, r, s * ca * cb)
    return OperadElement(out, alphabet)


def full_compose(t, children, alphabet=AINF):
    """gamma(t; c_1, ..., c_k) on single trees (None = leave the leaf open)."""
    if len(children) != arity(t):
        raise IndexOutOfRange(f"{len(children)} children for a tree of arity {arity(t)}")
    return _substitute(t, list(children), alphabet)


# ---------------------------------------------------------------- derivations

class Derivation:
    """values(name, alpha_cap) -> OperadElement; extended by the Leibniz rule."""

    def __init__(self, degree, values, alphabet=AINF, name="D"):
        self.degree = degree
        self.values = values
        self.alphabet = alphabet
        self.name = name

    def on(self, gen, alpha_cap):
        return self.values(gen, alpha_cap)


def derivation_apply(D, e, alpha_cap=None):
    """Leibniz: sum over vertices, sign (-1)^{|D| * (labels preceding the vertex)}.
    With alpha_cap set, only output terms with <= alpha_cap alphas are kept."""
    e = _as_elem(e, D.alphabet)
    out = {}
    for t, c in e.terms.items():
        for r, s in _derive_tree(D, t, alpha_cap, alpha_count(t)).items():
            add_to(out, r, c * s)
    res = OperadElement(out, D.alphabet)
    return res.truncate(alpha_cap) if alpha_cap is not None else res


def _derive_tree(D, t, alpha_cap, total_alpha):
    """Returns {tree: coeff} for D(t)."""
    if t is None:
        return {}
    alph = D.alphabet
    out = {}
    name = t[0]
    alph.sig(name)
    kids = list(t[1:])
    # D applied to the root label
    budget = None if alpha_cap is None else alpha_cap - (total_alpha - (1 if name == "alpha" else 0))
    val = D.on(name, budget)
    for vt, vc in val.terms.items():
        r, s = full_compose(vt, kids, alph)
        add_to(out, r, s * vc)
    # D on children, passing the root and earlier children
    passed = alph.degree(name)
    for j, c in enumerate(kids):
        if c is not None:
            for ct, cc in _derive_tree(D, c, alpha_cap, total_alpha).items():
                new = kids[:j] + [ct] + kids[j + 1:]
                sgn = -1 if (D.degree * passed) % 2 else 1
                add_to(out, (name,) + tuple(new), sgn * cc)
            passed += degree(c, alph)
    return out


# ---------------------------------------------------------------- MC A-inf

def _mu_tree_with(n_total, slots):
    """mu_{n_total} whose children are given by slots (None for leaf, 'a' for alpha)."""
    return (mu(n_total),) + tuple(ALPHA if s == "a" else None for s in slots)


def d_mu(n):
    """sum_{p+q+r=n, p+1+r>=2, q>=2} (-1)^{pq+r+1} mu_{p+1+r} o_{p+1} mu_q."""
    out = OperadElement()
    for qq in range(2, n + 1):
        for p in range(0, n - qq + 1):
            r = n - qq - p
            if p + 1 + r < 2:
                continue
            s = -1 if (p * qq + r + 1) % 2 else 1
            out = out + graft(corolla(mu(p + 1 + r)), p + 1, corolla(mu(qq))).scale(s)
    return out


def mc_ainfty_differential():
    def values(name, cap):
        if name == "alpha":
            out = {}
            top = 2 if cap is None else cap
            for n in range(2, top + 1):
                add_to(out, _mu_tree_with(n, "a" * n), Q(-1))
            return OperadElement(out)
        n = AINF.arity(name)
        return d_mu(n)
    return Derivation(-1, values, AINF, "d")


def mu_alpha(n, alpha_cap):
    """mu_n^alpha = sum (-1)^{sum k r_k} mu_{n+|r|}(alpha^{r_0}, -, ..., -, alpha^{r_n})."""
    out = {}
    for tot in range(0, alpha_cap + 1):
        if n + tot < 2:
            continue
        for r in _compositions(tot, n + 1):
            slots = []
            for k in range(n + 1):
                slots += ["a"] * r[k]
                if k < n:
                    slots.append("-")
            s = sum(k * r[k] for k in range(n + 1))
            add_to(out, _mu_tree_with(n + tot, slots), Q(-1 if s % 2 else 1))
    return OperadElement(out)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def ad(X, nu, xdeg, alpha_cap=None):
    """ad_X(nu) = X o_1 nu - (-1)^{|X||nu|} sum_j nu o_j X, nu a single tree."""
    alph = AINF
    out = graft(X, 1, nu, alph, alpha_cap)
    nd = degree(nu, alph) if not isinstance(nu, OperadElement) else next(iter(nu.degrees()), 0)
    s = -1 if (xdeg * nd) % 2 else 1
    nuel = _as_elem(nu, alph)
    k = next(iter(nuel.arities()), 0)
    for j in range(1, k + 1):
        out = out - graft(nuel, j, X, alph, alpha_cap).scale(s)
    return out


def tw_differential(alpha_cap):
    """d^{mu_1^alpha} = d + ad_{mu_1^alpha} on generators."""
    d = mc_ainfty_differential()
    X = mu_alpha(1, alpha_cap)

    def values(name, cap):
        c = alpha_cap if cap is None else min(cap, alpha_cap)
        base = d.on(name, c)
        x = X.truncate(c)
        g = corolla(name)
        return (base + ad(x, g, -1, c)).truncate(c)
    return Derivation(-1, values, AINF, "d_tw")


def diffmu_rhs(n, alpha_cap):
    """sum_{p+q+r=n, q>=1} (-1)^{pq+r+1} mu^alpha_{p+1+r} o_{p+1} mu^alpha_q."""
    out = OperadElement()
    cache = {}

    def ma(k):
        if k not in cache:
            cache[k] = mu_alpha(k, alpha_cap)
        return cache[k]

    for qq in range(1, n + 1):
        for p in range(0, n - qq + 1):
            r = n - qq - p
            s = -1 if (p * qq + r + 1) % 2 else 1
            out = out + graft(ma(p + 1 + r), p + 1, ma(qq), AINF, alpha_cap).scale(s)
    return out


class DiffmuReport:
    def __init__(self, n, cap, lhs, rhs):
        self.n, self.cap, self.lhs, self.rhs = n, cap, lhs, rhs
        diff = lhs - rhs
        self.ok = diff.is_zero()
        self.first = None
        if not self.ok:
            t, c = diff.sorted_terms()[0]
            self.first = (encode(t), fmt(lhs.terms.get(t, 0)), fmt(rhs.terms.get(t, 0)))

    def __bool__(self):
        return self.ok

    def __repr__(self):
        return f"DiffmuReport(n={self.n}, cap={self.cap}, {'pass' if self.ok else self.first})"


def verify_diffmu(n, alpha_cap):
    d = mc_ainfty_differential()
    lhs = derivation_apply(d, mu_alpha(n, alpha_cap), alpha_cap)
    rhs = diffmu_rhs(n, alpha_cap)
    return DiffmuReport(n, alpha_cap, lhs, rhs)
