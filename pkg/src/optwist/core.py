"""Exact rationals, sparse matrices over Q, graded bases and the Koszul sign engine.

Everything downstream (differentials, structure constants, cohomology) goes
through these few primitives, so they are kept small and boring.
"""
from fractions import Fraction
from itertools import combinations
from math import comb

Q = Fraction


class CompositionNotZero(ArithmeticError):
    pass


class LengthMismatch(ValueError):
    pass


def q(x):
    """Parse "p/q", "p", int or Fraction into a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x).strip())


def fmt(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def add_to(d, key, c):
    """d[key] += c, dropping exact zeros."""
    if not c:
        return
    v = d.get(key, 0) + c
    if v:
        d[key] = v
    else:
        d.pop(key, None)


def lin_add(a, b, c=1):
    """a + c*b for sparse dicts, returns a new dict."""
    out = dict(a)
    for k, v in b.items():
        add_to(out, k, c * v)
    return out


def lin_scale(a, c):
    if not c:
        return {}
    return {k: c * v for k, v in a.items()}


# ---------------------------------------------------------------- signs

def koszul_sign(degrees, perm):
    """Sign of rearranging symbols x_0..x_{n-1} (given degrees) into the word
    x_{perm[0]}, x_{perm[1]}, ...  Each crossed pair contributes (-1)^{d_i d_j}."""
    n = len(degrees)
    if len(perm) != n or sorted(perm) != list(range(n)):
        raise LengthMismatch(f"perm {perm!r} does not act on {n} symbols")
    odd = [degrees[p] % 2 for p in perm]
    s = 0
    for k in range(n):
        if not odd[k]:
            continue
        pk = perm[k]
        for l in range(k + 1, n):
            if odd[l] and perm[l] < pk:
                s ^= 1
    return -1 if s else 1


def perm_sign(perm):
    return koszul_sign([1] * len(perm), perm)


def shuffle_inverses(p, q_):
    """Inverses of (p,q)-shuffles, as words: the p chosen indices in increasing
    order followed by the q remaining ones.  C(p+q, p) of them, lexicographic."""
    n = p + q_
    out = []
    for s in combinations(range(n), p):
        ss = set(s)
        out.append(tuple(s) + tuple(i for i in range(n) if i not in ss))
    assert len(out) == comb(n, p)
    return out


# ---------------------------------------------------------------- graded bases

class GradedBasis:
    """Ordered list of (name, degree, filtration)."""

    def __init__(self, elements):
        self.elements = [(str(n), int(d), int(f)) for n, d, f in elements]
        self.names = [e[0] for e in self.elements]
        if len(set(self.names)) != len(self.names):
            raise ValueError("basis names must be unique")
        self.degree = [e[1] for e in self.elements]
        self.filt = [e[2] for e in self.elements]
        self.index = {n: i for i, n in enumerate(self.names)}
        if any(f < 0 for f in self.filt):
            raise ValueError("filtration levels are non-negative")

    def __len__(self):
        return len(self.elements)

    def __eq__(self, other):
        return isinstance(other, GradedBasis) and self.elements == other.elements

    def __hash__(self):
        return hash(tuple(self.elements))

    def __repr__(self):
        return f"GradedBasis({self.elements!r})"


class FilteredModule:
    """A graded basis with filtration levels and a nilpotency index N (F_N = 0)."""

    def __init__(self, basis, N):
        if not isinstance(basis, GradedBasis):
            basis = GradedBasis(basis)
        self.basis = basis
        self.N = int(N)
        if any(f >= self.N for f in basis.filt):
            raise ValueError("every basis element must have filtration < N")
        self.dim = len(basis)
        self.deg = basis.degree
        self.filt = basis.filt

    def __eq__(self, other):
        return isinstance(other, FilteredModule) and self.basis == other.basis and self.N == other.N

    def __hash__(self):
        return hash((self.basis, self.N))

    def vec_filt(self, v):
        """Filtration of a vector (N for the zero vector)."""
        return min((self.filt[i] for i in v), default=self.N)

    def vec_degree(self, v):
        ds = {self.deg[i] for i in v}
        if len(ds) > 1:
            raise ValueError("inhomogeneous vector")
        return ds.pop() if ds else None

    def direct_sum(self, other, prefix=("A.", "B.")):
        els = [(prefix[0] + n, d, f) for n, d, f in self.basis.elements]
        els += [(prefix[1] + n, d, f) for n, d, f in other.basis.elements]
        return FilteredModule(GradedBasis(els), max(self.N, other.N))


# ---------------------------------------------------------------- sparse matrices

class SparseMatrix:
    def __init__(self, rows, cols, entries=None):
        self.rows = int(rows)
        self.cols = int(cols)
        self.entries = {}
        for (i, j), v in (entries or {}).items():
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise IndexError((i, j))
            v = q(v)
            if v:
                self.entries[(i, j)] = v

    @classmethod
    def from_dense(cls, rows):
        rows = [list(r) for r in rows]
        nc = len(rows[0]) if rows else 0
        return cls(len(rows), nc, {(i, j): v for i, r in enumerate(rows) for j, v in enumerate(r) if v})

    @classmethod
    def from_columns(cls, nrows, columns):
        """columns: list of sparse dicts row -> value."""
        ent = {}
        for j, col in enumerate(columns):
            for i, v in col.items():
                if v:
                    ent[(i, j)] = v
        return cls(nrows, len(columns), ent)

    def dense(self):
        out = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def column(self, j):
        return {i: v for (i, jj), v in self.entries.items() if jj == j}

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise ValueError("dimension mismatch")
        byrow = {}
        for (k, j), v in other.entries.items():
            byrow.setdefault(k, []).append((j, v))
        out = {}
        for (i, k), v in self.entries.items():
            for j, w in byrow.get(k, ()):
                add_to(out, (i, j), v * w)
        return SparseMatrix(self.rows, other.cols, out)

    def apply(self, vec):
        out = {}
        for (i, j), v in self.entries.items():
            if j in vec:
                add_to(out, i, v * vec[j])
        return out

    def is_zero(self):
        return not self.entries

    def triplets(self):
        return [[i, j, fmt(v)] for (i, j), v in sorted(self.entries.items())]

    def __eq__(self, other):
        return (isinstance(other, SparseMatrix) and self.rows == other.rows
                and self.cols == other.cols and self.entries == other.entries)

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={len(self.entries)})"


def _size(v):
    return abs(v.numerator) + v.denominator


def _blocks(m):
    """Split the bipartite row/column graph into connected pieces."""
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (i, j) in m.entries:
        for x in (("r", i), ("c", j)):
            parent.setdefault(x, x)
        a, b = find(("r", i)), find(("c", j))
        if a != b:
            parent[a] = b
    groups = {}
    for (i, j), v in m.entries.items():
        groups.setdefault(find(("r", i)), {}).setdefault(i, {})[j] = v
    return list(groups.values())


def _eliminate(rows):
    """Markowitz-flavoured elimination on {row: {col: val}}; returns the rank."""
    rows = {r: dict(d) for r, d in rows.items() if d}
    colrows = {}
    for r, d in rows.items():
        for c in d:
            colrows.setdefault(c, set()).add(r)
    rank = 0
    while rows:
        r = min(rows, key=lambda k: (len(rows[k]), k))
        prow = rows.pop(r)
        c = min(prow, key=lambda k: (len(colrows[k]), _size(prow[k]), k))
        pv = prow[c]
        for cc in prow:
            colrows[cc].discard(r)
        rank += 1
        for r2 in list(colrows[c]):
            row2 = rows[r2]
            f = row2[c] / pv
            for cc, v in prow.items():
                nv = row2.get(cc, 0) - f * v
                if nv:
                    if cc not in row2:
                        colrows[cc].add(r2)
                    row2[cc] = nv
                else:
                    row2.pop(cc, None)
                    colrows[cc].discard(r2)
            if not row2:
                del rows[r2]
    return rank


def rank(m):
    """Exact rank over Q; works block by block on the connected pieces."""
    return sum(_eliminate(b) for b in _blocks(m))


def rref(m):
    """Reduced row echelon form: (pivot columns, list of pivot rows as dicts)."""
    rows = [dict() for _ in range(m.rows)]
    for (i, j), v in m.entries.items():
        rows[i][j] = v
    rows = [r for r in rows if r]
    pivots, prow = [], []
    for c in range(m.cols):
        cand = [r for r in rows if c in r]
        if not cand:
            continue
        p = min(cand, key=lambda r: _size(r[c]))
        rows = [r for r in rows if r is not p]
        inv = 1 / p[c]
        p = {k: v * inv for k, v in p.items()}
        for r in rows + prow:
            if c in r:
                f = r[c]
                for k, v in p.items():
                    add_to(r, k, -f * v)
        rows = [r for r in rows if r]
        pivots.append(c)
        prow.append(p)
    return pivots, prow


def rank_kernel(m):
    """(rank, kernel basis); kernel vectors are sparse dicts col -> value."""
    pivots, prow = rref(m)
    pset = set(pivots)
    ker = []
    for f in range(m.cols):
        if f in pset:
            continue
        v = {f: Fraction(1)}
        for c, r in zip(pivots, prow):
            if f in r:
                v[c] = -r[f]
        ker.append(v)
    return len(pivots), ker


def cohomology_dims(d_in, d_out):
    """dim ker(d_out) - rank(d_in) for a composable pair d_out . d_in = 0."""
    if d_in.rows != d_out.cols:
        raise ValueError("matrices are not composable")
    if not (d_out @ d_in).is_zero():
        raise CompositionNotZero("d_out . d_in != 0")
    return d_out.cols - rank(d_out) - rank(d_in)
