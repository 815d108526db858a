"""Rooted trees, the pre-Lie operad with insertion, its unital extension, and
twisting of shifted Perm-infinity algebras.

A tree is kept in canonical form as a nested tuple (label, children) with the
children sorted by their text encoding.  White vertices carry integer labels,
black vertices carry the label "x".  Text form: "2(1,4(3))" is the root 2 with
children 1 and 4, and 3 sits above 4.

A shifted Perm-infinity structure is a family m_tau of degree -1 maps indexed
by labelled rooted trees, the input x_j being fed to the vertex labelled j.
Through the convolution variant "uPreLie_dual" registered below it becomes an
element of the gauge module's machinery (star, braces, circle product), which
is how the relations and the twisting are cross-checked.
"""
from fractions import Fraction
from itertools import combinations, permutations, product
from math import factorial

from . import gauge as _gauge
from .core import add_to
from .gauge import (ConvolutionElement, FiltrationViolation, Variant, mm_iadd, mm_partial, mm_reorder,
                    register_variant)

Q = Fraction
BLACK = "x"


class IndexOutOfRange(IndexError):
    pass


class DegreeMismatch(ValueError):
    pass


# ---------------------------------------------------------------- canonical trees

def encode(t):
    if t == "u":
        return "u"
    lab, ch = t
    s = str(lab)
    if ch:
        s += "(" + ",".join(encode(c) for c in ch) + ")"
    return s


def node(label, children=()):
    """Canonical tree from a label and (any order of) child trees."""
    return (label, tuple(sorted(children, key=encode)))


def decode(s):
    s = s.replace(" ", "")
    if s == "u":
        return "u"
    pos = 0

    def parse():
        nonlocal pos
        j = pos
        while pos < len(s) and s[pos] not in "(),":
            pos += 1
        tok = s[j:pos]
        if not tok:
            raise ValueError(f"bad tree text {s!r}")
        lab = BLACK if tok == BLACK else int(tok)
        ch = []
        if pos < len(s) and s[pos] == "(":
            pos += 1
            ch.append(parse())
            while s[pos] == ",":
                pos += 1
                ch.append(parse())
            if s[pos] != ")":
                raise ValueError(f"bad tree text {s!r}")
            pos += 1
        return node(lab, ch)

    try:
        t = parse()
    except IndexError:
        raise ValueError(f"unbalanced tree text {s!r}") from None
    if pos != len(s):
        raise ValueError(f"trailing text in {s!r}")
    return t


def rt(s):
    return decode(s)


def size(t):
    return 1 + sum(size(c) for c in t[1])


def labels(t):
    out = [t[0]]
    for c in t[1]:
        out += labels(c)
    return out


def whites(t):
    return sorted(l for l in labels(t) if l != BLACK)


def blacks(t):
    return sum(1 for l in labels(t) if l == BLACK)


def relabel(t, f):
    lab, ch = t
    return node(f(lab) if lab != BLACK else BLACK, [relabel(c, f) for c in ch])


def _flat(t):
    """Vertex ids in preorder: (labels, parent) lists, root at 0."""
    labs, par = [], []

    def go(x, p):
        i = len(labs)
        labs.append(x[0])
        par.append(p)
        for c in x[1]:
            go(c, i)

    go(t, None)
    return labs, par


def _build(labs, par, alive=None):
    alive = set(range(len(labs))) if alive is None else set(alive)
    kids = {i: [] for i in alive}
    root = None
    for i in alive:
        if par[i] is None:
            if root is not None:
                raise ValueError("two roots")
            root = i
        else:
            kids[par[i]].append(i)

    def go(i):
        return node(labs[i], [go(c) for c in kids[i]])

    return go(root)


def parent_map(t):
    """label -> parent label (None at the root) for a white labelled tree."""
    labs, par = _flat(t)
    return {labs[i]: (labs[par[i]] if par[i] is not None else None) for i in range(len(labs))}


def from_parent_map(pm):
    labs = sorted(pm)
    idx = {l: k for k, l in enumerate(labs)}
    return _build(labs, [idx[pm[l]] if pm[l] is not None else None for l in labs])


def ladder(n, start=1):
    """root start, start+1 above it, ..., start+n-1 on top."""
    t = None
    for l in range(start + n - 1, start - 1, -1):
        t = node(l, [t] if t is not None else [])
    return t


def is_ladder(t):
    while t[1]:
        if len(t[1]) > 1:
            return False
        t = t[1][0]
    return True


_ALL = {}


def all_trees(n):
    """All labelled rooted trees on 1..n (n^(n-1) of them), canonical, sorted."""
    if n not in _ALL:
        if n < 1:
            _ALL[n] = []
        else:
            out = set()
            labs = list(range(1, n + 1))
            for root in labs:
                rest = [l for l in labs if l != root]
                for ps in product(labs, repeat=n - 1):
                    pm = dict(zip(rest, ps))
                    pm[root] = None
                    if _acyclic(pm):
                        out.add(from_parent_map(pm))
            _ALL[n] = sorted(out, key=encode)
    return _ALL[n]


def _acyclic(pm):
    for v in pm:
        seen = set()
        while v is not None:
            if v in seen:
                return False
            seen.add(v)
            v = pm[v]
    return True


def aut_order(t):
    """Automorphisms fixing every white label (only black subtrees can be swapped)."""
    c = 1
    groups = {}
    for ch in t[1]:
        c *= aut_order(ch)
        groups[ch] = groups.get(ch, 0) + 1
    for m in groups.values():
        c *= factorial(m)
    return c


# ---------------------------------------------------------------- insertion

def _check_vertex(t, i):
    if not isinstance(i, int) or not 1 <= i <= size(t):
        raise IndexOutOfRange(f"vertex {i} not in a tree with {size(t)} vertices")


def tree_insert(tau, i, ups):
    """tau o_i ups: ups replaces vertex i, the subtrees above i are grafted in
    every way onto the vertices of ups.  Labels j < i stay, j > i shift by
    |ups| - 1, and ups's labels are shifted by i - 1.  Returns {tree: coeff}."""
    _check_vertex(tau, i)
    m = size(ups)
    pt = parent_map(tau)
    pu = parent_map(ups)
    sh = lambda j: j if j < i else j + m - 1
    base = {}
    for v, p in pt.items():
        if v == i:
            continue
        base[sh(v)] = None if p is None else (sh(p) if p != i else None)
    kids = sorted(v for v, p in pt.items() if p == i)
    for k, p in pu.items():
        base[k + i - 1] = None if p is None else p + i - 1
    uroot = [k + i - 1 for k, p in pu.items() if p is None][0]
    # the root of ups takes the place of i
    base[uroot] = None if pt[i] is None else sh(pt[i])
    out = {}
    targets = [k + i - 1 for k in pu]
    for choice in product(targets, repeat=len(kids)):
        pm = dict(base)
        for c, tgt in zip(kids, choice):
            pm[sh(c)] = tgt
        add_to(out, from_parent_map(pm), Q(1))
    return out


def _lin_insert(e1, i, e2):
    out = {}
    for t1, c1 in e1.items():
        for t2, c2 in e2.items():
            for t, c in tree_insert(t1, i, t2).items():
                add_to(out, t, c1 * c2 * c)
    return out


def brace_oracle(tau, i, ups):
    """tau o_i ups through symmetric braces: every tree is the brace word
    {x_root; children}, the variable x_i is replaced by ups, and the result is
    normalised with {{x0; B..}; A..} = sum over placing each A with x0 or
    inside one of the B's."""
    _check_vertex(tau, i)
    m = size(ups)
    sh = lambda j: j if j < i else j + m - 1
    up = relabel(ups, lambda k: k + i - 1)

    def nf(tree, args):
        # {tree; args} with tree a normal form: distribute args
        lab, ch = tree
        out = {}
        for choice in product(range(len(ch) + 1), repeat=len(args)):
            parts = [[] for _ in ch]
            top = []
            for a, k in zip(args, choice):
                (top if k == len(ch) else parts[k]).append(a)
            new = []
            for c, extra in zip(ch, parts):
                new.append(nf(c, extra) if extra else [c])
            for combo in product(*new):
                add_to(out, node(lab, list(combo) + top), Q(1))
        return list(out)

    def sub(t):
        lab, ch = t
        kids = [sub(c) for c in ch]
        res = []
        for combo in product(*kids):
            if lab == i:
                res += nf(up, list(combo))
            else:
                res.append(node(sh(lab), list(combo)))
        return res

    out = {}
    for t in sub(tau):
        add_to(out, t, Q(1))
    return out


# ---------------------------------------------------------------- the unital extension

def _contract(labs, par, alive, v):
    """Plug u at vertex v of the forest-free tree (labs, par, alive).
    Returns (coeff, new parent list); coeff 0 means the composite vanishes,
    new parent list None means only u is left."""
    kids = [c for c in alive if par[c] == v]
    if not kids:
        if par[v] is None:
            return Q(1), None
        n = sum(1 for c in alive if par[c] == par[v])
        return Q(2 - n), list(par)
    if len(kids) == 1:
        par = list(par)
        par[kids[0]] = par[v]
        return Q(1), par
    return Q(0), None


def u_composite(tau, v):
    """(coeff, tree) for tau o_v u; coeff 0 gives (0, None), and a one-vertex
    tau gives (1, "u").  Remaining white labels above v move down by one."""
    _check_vertex(tau, v)
    labs, par = _flat(tau)
    iv = labs.index(v)
    alive = set(range(len(labs)))
    c, np_ = _contract(labs, par, alive, iv)
    if not c:
        return Q(0), None
    if np_ is None:
        return c, "u"
    alive.discard(iv)
    nl = [l - 1 if l != BLACK and l > v else l for l in labs]
    return c, _build(nl, np_, alive)


def contract_blacks(tt, order=None):
    """Replace every black vertex by u.  Returns (c, tree) where tree is the
    white tree (or "u"), c = 0 when the composite vanishes.  The order of the
    contractions can be given as a list of black vertex ids in preorder
    numbering; by default black leaves go first, from the top."""
    labs, par = _flat(tt)
    par = list(par)
    alive = set(range(len(labs)))
    todo = [i for i, l in enumerate(labs) if l == BLACK]
    if order is not None:
        todo = [todo[k] for k in order]
    c = Q(1)
    while todo:
        if order is None:
            leaves = [i for i in todo if not any(par[j] == i for j in alive)]
            v = max(leaves) if leaves else todo[-1]
        else:
            v = todo[0]
        todo.remove(v)
        f, np_ = _contract(labs, par, alive, v)
        if not f:
            return Q(0), None
        c *= f
        if np_ is None:
            return (c, "u") if not todo else (Q(0), None)
        par = np_
        alive.discard(v)
    if not alive:
        return c, "u"
    return c, _build(labs, par, alive)


def _inverse_moves(t):
    """Trees one black vertex bigger: a black leaf anywhere, a black vertex
    on an edge, or a black root."""
    labs, par = _flat(t)
    n = len(labs)
    out = set()
    for v in range(n):
        out.add(_build(labs + [BLACK], par + [v]))
    for v in range(n):
        if par[v] is not None:
            p2 = list(par) + [par[v]]
            p2[v] = n
            out.add(_build(labs + [BLACK], p2))
    p2 = list(par) + [None]
    p2[0] = n
    out.add(_build(labs + [BLACK], p2))
    return out


def unital_expansions(tau, black_cap):
    """[(tt, c)] over black-and-white trees with at most black_cap blacks whose
    u-contraction is c * tau with c != 0.  Sorted by (blacks, encoding)."""
    res = [(tau, Q(1))]
    layer = {tau}
    seen = {tau}
    for _ in range(black_cap):
        nxt = set()
        for t in layer:
            for s in _inverse_moves(t):
                if s not in seen:
                    seen.add(s)
                    nxt.add(s)
        for s in nxt:
            c, t = contract_blacks(s)
            if c and t == tau:
                res.append((s, c))
        layer = nxt
    return sorted(res, key=lambda p: (blacks(p[0]), encode(p[0])))


def expansion_coefficient(tt):
    """c for a given black-and-white tree (0 if it does not contract)."""
    return contract_blacks(tt)[0]


def label_blacks(tt):
    """White labels kept, blacks numbered after them in preorder."""
    n = len(whites(tt))
    cnt = [n]

    def go(t):
        lab, ch = t
        if lab == BLACK:
            cnt[0] += 1
            lab = cnt[0]
        return (lab, [go(c) for c in ch])

    def canon(t):
        return node(t[0], [canon(c) for c in t[1]])

    return canon(go(tt))


# ---------------------------------------------------------------- the convolution algebra

def _subtrees(tau):
    """Connected vertex sets (as sorted label tuples)."""
    pm = parent_map(tau)
    labs = sorted(pm)
    out = []
    for r in range(1, len(labs) + 1):
        for S in combinations(labs, r):
            Ss = set(S)
            if sum(1 for v in S if pm[v] not in Ss) == 1:
                out.append(S)
    return out


def decompose(tau, S):
    """The shuffle-tree decomposition along the subtree on S:
    (tau/ups, i, ups, word).  ups is S relabelled in order, the contracted
    vertex of tau/ups is labelled by the rank i of min(S) among the rest, and
    word lists the inputs (0-based) in the order (c_1..c_{i-1}, S, c_i, ...)."""
    pm = parent_map(tau)
    Ss = set(S)
    comp = sorted(l for l in pm if l not in Ss)
    s0 = min(S)
    i = 1 + sum(1 for c in comp if c < s0)
    rs = {l: k + 1 for k, l in enumerate(S)}
    ups = from_parent_map({rs[l]: (rs[p] if p in Ss else None) for l, p in pm.items() if l in Ss})
    # quotient: complement labels ranked together with the new vertex at s0
    qlabs = sorted(comp + [s0])
    rq = {l: k + 1 for k, l in enumerate(qlabs)}
    img = lambda l: rq[s0] if l in Ss else rq[l]
    qpm = {}
    for l in qlabs:
        if l == s0:
            top = [v for v in S if pm[v] not in Ss][0]
            p = pm[top]
        else:
            p = pm[l]
        qpm[img(l)] = None if p is None else img(p)
    word = [c - 1 for c in comp if c < s0] + [l - 1 for l in S] + [c - 1 for c in comp if c > s0]
    return from_parent_map(qpm), i, ups, word


_DEC = {}
_UEXP = {}


def _decompositions(tau):
    if tau not in _DEC:
        _DEC[tau] = [decompose(tau, S) for S in _subtrees(tau)]
    return _DEC[tau]


def _one_black(tau):
    """[(T, c)]: expansions with exactly one black, the black labelled |tau|+1."""
    if tau not in _UEXP:
        _UEXP[tau] = [(label_blacks(s), c) for s, c in unital_expansions(tau, 1) if blacks(s) == 1]
    return _UEXP[tau]


def _tree_arity(k):
    return 0 if k == "u" else size(k)


UNIT_TREE = (1, ())


def _prelie_star(f, g):
    f._check(g)
    cap = min(f.cap, g.cap)
    deg = f.module.deg
    out = {}
    fk = set(f.comps)
    for n in range(1, cap + 1):
        for tau in all_trees(n):
            acc = {}
            for T, i, U, word in _decompositions(tau):
                if T in fk and U in g.comps:
                    h = mm_partial(f.comps[T], i, g.comps[U], g.map_degree(U), deg)
                    if h:
                        mm_iadd(acc, mm_reorder(h, word, deg))
            if "u" in g.comps and n + 1 <= cap:
                gu = g.comps["u"]
                for T, c in _one_black(tau):
                    if T in fk:
                        mm_iadd(acc, mm_partial(f.comps[T], n + 1, gu, g.map_degree("u"), deg), c)
            if acc:
                out[tau] = acc
    if "u" in g.comps and UNIT_TREE in f.comps:
        h = mm_partial(f.comps[UNIT_TREE], 1, g.comps["u"], g.map_degree("u"), deg)
        if h:
            out["u"] = h
    return ConvolutionElement(f.variant, f.degree + g.degree, f.module, out, cap)


_V = register_variant(Variant("uPreLie_dual", lambda k: 0, _tree_arity, _prelie_star, symmetric=True))
_V.unit_key = UNIT_TREE
_gauge._KEY_CODECS["to"] = lambda k: encode(k) if not isinstance(k, int) else str(k)
_gauge._KEY_CODECS["from"] = decode


def relabel_map(m, rho, deg):
    """The map attached to rho(tau) given the one of tau, rho[j-1] = new label of j."""
    return mm_reorder(m, [r - 1 for r in rho], deg)


def is_equivariant(e, max_n=None):
    """Check f_{rho(tau)} = relabel_map(f_tau, rho) for every stored size."""
    deg = e.module.deg
    for tau, m in e.comps.items():
        if tau == "u":
            continue
        n = size(tau)
        if max_n is not None and n > max_n:
            continue
        for rho in permutations(range(1, n + 1)):
            t2 = relabel(tau, lambda j: rho[j - 1])
            if e.comps.get(t2, {}) != relabel_map(m, rho, deg):
                return False
    return True


def symmetrize(raw, deg):
    """Equivariant family from one map per orbit representative: the orbit sum
    f_{tau'} = sum over rho with rho(tau0) = tau' of relabel_map(r, rho)."""
    out = {}
    for tau0, r in raw.items():
        n = size(tau0)
        for rho in permutations(range(1, n + 1)):
            t2 = relabel(tau0, lambda j: rho[j - 1])
            mm_iadd(out.setdefault(t2, {}), relabel_map(r, rho, deg))
    return {k: v for k, v in out.items() if v}


def orbit_reps(n):
    seen = set()
    reps = []
    for t in all_trees(n):
        if t in seen:
            continue
        reps.append(t)
        for rho in permutations(range(1, n + 1)):
            seen.add(relabel(t, lambda j: rho[j - 1]))
    return reps


# ---------------------------------------------------------------- structures

class PermInftyStructure:
    """Shifted Perm-infinity structure: maps[tau] of degree -1 for labelled
    trees with at most `cap` vertices; theta (optional) is a curvature."""

    def __init__(self, module, maps=None, cap=4, theta=None):
        self.module = module
        self.cap = int(cap)
        self.maps = {}
        for t, m in (maps or {}).items():
            if isinstance(t, str):
                t = decode(t)
            if size(t) > self.cap:
                continue
            m = {tuple(k): dict(v) for k, v in m.items() if v}
            if m:
                self.maps[t] = m
        self.theta = {i: Q(c) for i, c in (theta or {}).items() if c}

    def op(self, tau):
        if isinstance(tau, str):
            tau = decode(tau)
        return self.maps.get(tau, {})

    def check_degrees(self):
        deg = self.module.deg
        for t, m in self.maps.items():
            for k, v in m.items():
                for o in v:
                    if deg[o] - sum(deg[x] for x in k) != -1:
                        raise DegreeMismatch(f"{encode(t)}: entry {k}->{o} is not of degree -1")
        for o in self.theta:
            if deg[o] != -1:
                raise DegreeMismatch("curvature must have degree -1")

    def to_convolution(self):
        comps = dict(self.maps)
        if self.theta:
            comps["u"] = {(): dict(self.theta)}
        return ConvolutionElement("uPreLie_dual", -1, self.module, comps, self.cap)

    @classmethod
    def from_convolution(cls, e):
        maps = {k: m for k, m in e.comps.items() if k != "u"}
        theta = e.comps.get("u", {}).get((), {})
        return cls(e.module, maps, e.cap, theta)

    def __eq__(self, other):
        return (isinstance(other, PermInftyStructure) and self.module == other.module
                and self.maps == other.maps and self.theta == other.theta)

    __hash__ = object.__hash__

    def to_json(self):
        return self.to_convolution().to_json()

    @classmethod
    def from_json(cls, d, module):
        return cls.from_convolution(ConvolutionElement.from_json(d, module))

    def __repr__(self):
        return f"PermInftyStructure(dim={self.module.dim}, trees={len(self.maps)}, cap={self.cap})"


class PermReport:
    def __init__(self, failures=()):
        self.failures = list(failures)

    @property
    def ok(self):
        return not self.failures

    def first(self):
        return self.failures[0] if self.failures else None

    def __bool__(self):
        return self.ok

    def __repr__(self):
        if self.ok:
            return "PermReport(ok)"
        return f"PermReport({len(self.failures)} failing trees, first {self.failures[0][0]})"


def perm_relations(s):
    """The element alpha * alpha of the convolution algebra: its tree
    components are the left-hand sides of the relations."""
    a = s.to_convolution()
    return _prelie_star(a, a)


def perm_check_relations(s):
    """Check sum over subtrees of (m_{tau/ups} o_i m_ups)^sigma = 0 for every
    tree with at most cap vertices.  Failures are (tree text, n entries)."""
    s.check_degrees()
    r = perm_relations(s)
    fails = []
    for k in sorted(r.comps, key=lambda k: (_tree_arity(k), encode(k))):
        if k == "u":
            continue
        fails.append((encode(k), len(r.comps[k])))
    return PermReport(fails)


def _elem_check(s, a):
    a = {i: Q(c) for i, c in a.items() if c}
    if s.module.vec_filt(a) < 1:
        raise FiltrationViolation("the twisting element must lie in F_1")
    d = s.module.vec_degree(a)
    if d not in (None, 0):
        raise DegreeMismatch("twisting element must have degree 0")
    return a


def _feed_tail(m, n, a):
    """m(x_1..x_n, a, ..., a) as a map of n inputs."""
    out = {}
    for k, v in m.items():
        c = Q(1)
        for x in k[n:]:
            cx = a.get(x)
            if not cx:
                c = 0
                break
            c *= cx
        if c:
            d = out.setdefault(k[:n], {})
            for o, y in v.items():
                add_to(d, o, c * y)
            if not d:
                del out[k[:n]]
    return out


def twist_coefficient(tt, rule="aut"):
    """Weight of m_tt in the twisted operation.  'aut' is c/|Aut| (what the
    circle product alpha (.) (1+a) gives), 'inverse' is the printed 1/c."""
    c = expansion_coefficient(tt)
    if not c:
        return Q(0)
    if rule == "aut":
        return c / aut_order(tt)
    if rule == "inverse":
        return 1 / c
    raise ValueError(rule)


def perm_mc_residual(s, a):
    """sum_n m_{ladder_n}(a, ..., a), plus the curvature if any."""
    a = _elem_check(s, a)
    out = dict(s.theta)
    for n in range(1, s.cap + 1):
        m = s.maps.get(ladder(n))
        if m:
            for o, v in _feed_tail(m, 0, a).get((), {}).items():
                add_to(out, o, v)
    return out


def perm_twist(s, a, rule="aut", keep_curvature=False):
    """m^a_tau = sum over unital expansions tt of w(tt) m_tt(-, ..., -, a, ..., a)
    with the whites keeping their labels and the blacks numbered after them.
    The curvature of the result is the MC residual; it is dropped unless
    keep_curvature is set."""
    a = _elem_check(s, a)
    if not a:
        return PermInftyStructure(s.module, s.maps, s.cap, s.theta if keep_curvature else None)
    maps = {}
    for n in range(1, s.cap + 1):
        for tau in all_trees(n):
            acc = {}
            for tt, c in unital_expansions(tau, s.cap - n):
                w = twist_coefficient(tt, rule)
                m = s.maps.get(label_blacks(tt))
                if w and m:
                    mm_iadd(acc, _feed_tail(m, n, a), w)
            if acc:
                maps[tau] = acc
    theta = perm_mc_residual(s, a) if keep_curvature else None
    return PermInftyStructure(s.module, maps, s.cap, theta)


def perm_twist_by_circle(s, a):
    """The same twist computed as alpha (.) (1 + a) in the convolution algebra."""
    a = _elem_check(s, a)
    alpha = s.to_convolution()
    one = _gauge.unit("uPreLie_dual", s.module, s.cap)
    g = one + ConvolutionElement("uPreLie_dual", 0, s.module, {"u": {(): a}}, s.cap) if a else one
    return PermInftyStructure.from_convolution(_gauge.circle(alpha, g))


def ladder_ainfty(s):
    """The shifted A-infinity structure m_n = m_{ladder_n}."""
    from .homotopyalg import CurvedAinftyStructure
    maps = {n: s.maps[ladder(n)] for n in range(1, s.cap + 1) if ladder(n) in s.maps}
    return CurvedAinftyStructure(s.module, s.theta, maps, s.cap, shift=True)


# ---------------------------------------------------------------- random instances

def random_equivariant(rng, M, cap, degree=0, density=0.4, min_size=1, raise_one=True):
    """Equivariant family of maps of the given degree; the one-vertex part
    raises filtration when raise_one is set."""
    from .homotopyalg import random_map
    deg = M.deg
    raw = {}
    for n in range(min_size, cap + 1):
        for t in orbit_reps(n):
            r = random_map(rng, M, n, degree, 1 if (raise_one and n == 1) else 0, density)
            if r:
                raw[t] = r
    return symmetrize(raw, deg)


def perm_module(N=4, degrees=(0, 1, 2)):
    """One basis element per (filtration level 1..N-1, degree)."""
    from .core import FilteredModule
    els = [(f"e{l}_{d}".replace("-", "m"), d, l) for l in range(1, N) for d in degrees]
    return FilteredModule(els, N)


def random_perm(rng, N=4, cap=3, degrees=(0, 1, 2), density=0.4, module=None):
    """A valid structure e^{ad lam}(d) with d a square-zero differential and lam
    a random equivariant degree-0 family raising filtration in arity one."""
    from .homotopyalg import _square_zero
    M = module if module is not None else perm_module(N, degrees)
    d = _square_zero(rng, M, -1)
    base = {UNIT_TREE: d} if d else {}
    alpha = ConvolutionElement("uPreLie_dual", -1, M, base, cap)
    lam = ConvolutionElement("uPreLie_dual", 0, M, random_equivariant(rng, M, cap, 0, density), cap)
    beta = _gauge.gauge_action_ad(lam, alpha)
    return PermInftyStructure.from_convolution(beta)


def random_element(rng, s, density=0.7):
    M = s.module
    a = {}
    for i in range(M.dim):
        if M.deg[i] == 0 and M.filt[i] >= 1 and rng.random() < density:
            a[i] = Q(rng.choice((-2, -1, 1, 2, 3)))
    return a


# ---------------------------------------------------------------- serialization

def perm_to_json(s):
    """Same layout as the A-infinity format, operations keyed by tree text."""
    from .core import fmt
    names = s.module.basis.names
    ops = []
    for t, m in s.maps.items():
        for k, v in m.items():
            for o, c in v.items():
                ops.append({"tree": encode(t), "inputs": [names[x] for x in k], "output": names[o], "coeff": fmt(c)})
    ops.sort(key=lambda e: (len(e["inputs"]), e["tree"], e["inputs"], e["output"]))
    return {
        "grading": "homological",
        "kind": "perm",
        "shift": True,
        "nilpotency": s.module.N,
        "vertex_cap": s.cap,
        "basis": [{"name": n, "degree": dg, "filtration": f} for n, dg, f in s.module.basis.elements],
        "curvature": [{"basis": names[i], "coeff": fmt(c)} for i, c in sorted(s.theta.items())],
        "operations": ops,
    }


def perm_from_json(d):
    from .core import FilteredModule, q
    from .homotopyalg import SchemaError
    try:
        if d.get("kind", "perm") != "perm":
            raise SchemaError("not a perm structure")
        M = FilteredModule([(b["name"], int(b["degree"]), int(b["filtration"])) for b in d["basis"]],
                           int(d["nilpotency"]))
        idx = M.basis.index
        theta = {}
        for e in d.get("curvature", []):
            add_to(theta, idx[e["basis"]], q(e["coeff"]))
        maps = {}
        for e in d.get("operations", []):
            t = decode(e["tree"])
            if t == "u" or blacks(t) or whites(t) != list(range(1, size(t) + 1)):
                raise SchemaError(f"bad tree {e['tree']!r}")
            k = tuple(idx[x] for x in e["inputs"])
            if len(k) != size(t):
                raise SchemaError(f"arity mismatch in {e}")
            add_to(maps.setdefault(t, {}).setdefault(k, {}), idx[e["output"]], q(e["coeff"]))
        cap = int(d.get("vertex_cap", max((size(t) for t in maps), default=1)))
    except (KeyError, TypeError, ValueError, IndexError) as ex:
        if isinstance(ex, SchemaError):
            raise
        raise SchemaError(str(ex)) from ex
    s = PermInftyStructure(M, maps, cap, theta)
    s.check_degrees()
    for t, m in s.maps.items():
        e = _gauge.mm_filt_excess(m, M.filt)
        if e is not None and e < 0:
            raise FiltrationViolation(f"{encode(t)} lowers filtration")
    return s
