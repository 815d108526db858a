"""optwist command line.

  optwist cohomology --operad ncgerst --arity 1 --max-degree 3 --max-black 5 --check
  optwist verify --suite diffmu --n 3 --alpha-cap 3
  optwist twist --algebra s.json --element "a" --kind ainfty --output t.json
  optwist gauge exp --input x.json

Exit codes: 0 success, 1 a verification failed, 2 bad input.  Random suites
use Python's random.Random (Mersenne Twister) seeded by --seed.
"""
import argparse
import json
import random
import re
import sys

from . import bamboo as B
from . import freeop as F
from . import gauge as G
from . import homotopyalg as H
from . import rootedperm as R
from .core import CompositionNotZero, FilteredModule, add_to, fmt, q

OPERADS = {"ncgerst": "ncGerst", "ncbv": "ncBV"}


class InputError(Exception):
    pass


# ---------------------------------------------------------------- helpers

_TERM = re.compile(r"\s*([+-])?\s*(?:(\d+(?:/\d+)?)\s*\*\s*)?([A-Za-z_][\w.]*|\d+(?:/\d+)?)\s*")


def parse_element(text, module):
    """'a', '2*a - 1/2*b', '0' -> sparse vector over the basis of module."""
    out = {}
    pos = 0
    text = text.strip()
    if not text:
        raise InputError("empty element")
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise InputError(f"cannot parse element {text!r}")
        sgn, c, name = m.groups()
        pos = m.end()
        if pos == len(text) and c is None and re.fullmatch(r"\d+(?:/\d+)?", name):
            if q(name) != 0 or out:
                raise InputError(f"bare scalar in element {text!r}")
            continue
        if name not in module.basis.index:
            raise InputError(f"unknown basis element {name!r}")
        v = q(c) if c else q(1)
        add_to(out, module.basis.index[name], -v if sgn == "-" else v)
    return out


def format_vector(v, module):
    if not v:
        return "0"
    names = module.basis.names
    parts = []
    for i, c in sorted(v.items()):
        s = "-" if c < 0 else "+"
        a = abs(c)
        parts.append((s, names[i] if a == 1 else f"{fmt(a)}*{names[i]}"))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for s, t in parts[1:]:
        out += f" {s} {t}"
    return out


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as ex:
        raise InputError(f"cannot read {path}: {ex}") from ex


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------- cohomology

def cmd_cohomology(a):
    t = B.cohomology_table(OPERADS[a.operad], a.arity, a.max_degree, a.max_black)
    sys.stdout.write(t.dumps() if a.format == "json" else t.to_text())
    if a.check and not t.match:
        return 1
    return 0


# ---------------------------------------------------------------- verify suites

def suite_dsq(a):
    V = OPERADS[a.operad]
    checked = 0
    for n in range(a.arity + 1):
        for k in range(a.max_black + 1):
            for d in range(a.max_degree + 1):
                bad = B.dsq_check(V, n, k, d)
                checked += 1
                if bad is not None:
                    b, dd = bad
                    return False, f"d^2 != 0 on {B.encode(b)}: {dd!r}"
    return True, f"{checked} slices of Tw {V}"


def suite_diffmu(a):
    for n in range(1, a.n + 1):
        r = F.verify_diffmu(n, a.alpha_cap)
        if not r.ok:
            t, lc, rc = r.first
            return False, f"n={n}: coefficient of {t} is {lc} on the left, {rc} on the right"
    return True, f"n <= {a.n}, alpha-cap {a.alpha_cap}"


def _gauge_trial(rng, cap):
    s = H.random_ainfty(rng, dim=5, N=4, cap=cap)
    M = s.module
    x = H.random_gauge(rng, M, "uAs_dual", cap)
    y = H.random_gauge(rng, M, "uAs_dual", cap)
    z = H.random_gauge(rng, M, "uAs_dual", cap)
    one = G.unit("uAs_dual", M, cap)
    ex, ey, ez = G.prelie_exp(x), G.prelie_exp(y), G.prelie_exp(z)
    if G.prelie_log(ex) != x:
        return "log(exp(x)) != x"
    if G.circle(ex, one) != ex or G.circle(one, ex) != ex:
        return "1 is not a unit for the circle product"
    if G.circle(G.circle(ex, ey), ez) != G.circle(ex, G.circle(ey, ez)):
        return "circle product is not associative"
    if G.prelie_exp(G.bch(x, y)) != G.circle(ex, ey):
        return "exp(BCH(x,y)) != exp(x) (.) exp(y)"
    alpha = s.alpha()
    b1 = G.gauge_action(x, alpha)
    if not G.is_mc(b1):
        return "gauge action left the Maurer-Cartan locus"
    if G.gauge_action(y, b1) != G.gauge_action(G.bch(y, x), alpha):
        return "gauge action is not a group action"
    return None


def suite_gauge(a):
    rng = random.Random(a.seed)
    for t in range(a.trials):
        err = _gauge_trial(rng, a.cap)
        if err:
            return False, f"trial {t}: {err}"
    return True, f"{a.trials} trials, cap {a.cap}, seed {a.seed}"


def _perm_trial(rng, cap, degrees):
    s = R.random_perm(rng, N=cap + 1, cap=cap, degrees=degrees, density=0.3)
    rep = R.perm_check_relations(s)
    if not rep.ok:
        return f"random structure fails at {rep.first()[0]}"
    x = R.random_element(rng, s)
    res = R.perm_mc_residual(s, x)
    tw = R.perm_twist(s, x)
    if tw.maps != R.perm_twist_by_circle(s, x).maps:
        return "explicit twist differs from alpha (.) (1+a)"
    A = R.ladder_ainfty(s)
    At = H.twist(A, x)
    if any(tw.op(R.ladder(n)) != At.op(n) for n in range(1, cap + 1)):
        return "ladder part differs from the A-infinity twist"
    if H.mc_residual(A, x) != res:
        return "ladder residual differs from the A-infinity residual"
    if not res and not R.perm_check_relations(tw).ok:
        return "Maurer-Cartan twist fails the relations"
    return None


def suite_perm(a):
    rng = random.Random(a.seed)
    for t in range(a.trials):
        err = _perm_trial(rng, a.cap, (0, 1, 2) if t % 2 == 0 else (-1, 0, 1))
        if err:
            return False, f"trial {t}: {err}"
    return True, f"{a.trials} trials, vertex cap {a.cap}, seed {a.seed}"


def suite_defcomplex(a):
    r = B.defcomplex_check(a.n_cap, (0, a.max_degree))
    if not r.ok:
        return False, f"intertwining fails: {r.failure}"
    return True, f"{r.checked} checks, n <= {a.n_cap}"


SUITES = {"dsq": suite_dsq, "diffmu": suite_diffmu, "gauge": suite_gauge,
          "perm": suite_perm, "defcomplex": suite_defcomplex}


def cmd_verify(a):
    names = list(SUITES) if a.suite == "all" else [a.suite]
    code = 0
    for n in names:
        ok, msg = SUITES[n](a)
        print(f"{n}: {'PASS' if ok else 'FAIL'} ({msg})")
        if not ok:
            code = 1
    return code


# ---------------------------------------------------------------- twist

def cmd_twist(a):
    d = _load_json(a.algebra)
    if a.kind == "perm":
        s = R.perm_from_json(d)
        x = parse_element(a.element, s.module)
        t = R.perm_twist(s, x, keep_curvature=True)
        res = t.theta
        out = R.perm_to_json(t)
        check = (lambda: R.perm_check_relations(R.PermInftyStructure(t.module, t.maps, t.cap)).ok)
    else:
        s = H.structure_from_json(d, a.kind)
        if s.kind != a.kind:
            raise InputError(f"--kind {a.kind} but the file holds {s.kind}")
        x = parse_element(a.element, s.module)
        t = H.twist(s, x) if a.kind == "ainfty" else H.twist_linfty(s, x)
        res = t.theta
        out = H.structure_to_json(t)
        check = (lambda: bool(H.check_relations(t)))
    text = H.dumps(out)
    report = sys.stdout if a.output not in (None, "-") else sys.stderr
    _write(a.output, text)
    print(f"residual: {format_vector(res, t.module)}", file=report)
    if res:
        print("not Maurer-Cartan: the twisted structure is curved", file=report)
    else:
        print("Maurer-Cartan: twisted structure is uncurved", file=report)
    if a.check:
        ok = check()
        print(f"relations: {'pass' if ok else 'FAIL'}", file=report)
        return 0 if ok else 1
    return 0


# ---------------------------------------------------------------- gauge

def _load_element(path):
    d = _load_json(path)
    try:
        M = FilteredModule([(b["name"], int(b["degree"]), int(b["filtration"])) for b in d["basis"]],
                           int(d["nilpotency"]))
        e = G.ConvolutionElement.from_json(d["element"], M)
    except (KeyError, TypeError, ValueError) as ex:
        raise InputError(f"{path}: {ex}") from ex
    return M, e


def element_json(e):
    M = e.module
    return {"basis": [{"name": n, "degree": dg, "filtration": f} for n, dg, f in M.basis.elements],
            "nilpotency": M.N, "element": e.to_json()}


def cmd_gauge(a):
    M, x = _load_element(a.input)
    extra = {}
    if a.op == "exp":
        r = G.prelie_exp(x)
    elif a.op == "log":
        r = G.prelie_log(x)
    else:
        if not a.other:
            raise InputError(f"gauge {a.op} needs --other")
        M2, y = _load_element(a.other)
        if M2 != M:
            raise InputError("the two elements live on different modules")
        if a.op == "bch":
            r = G.bch(x, y)
        else:
            r = G.gauge_action(x, y)
            extra["is_mc"] = G.is_mc(r)
    d = element_json(r)
    d.update(extra)
    _write(a.output, json.dumps(d, sort_keys=True, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------- parser

def _nonneg(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{s!r} is not an integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="optwist", description="Operadic twisting computations over Q.")
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("cohomology", help="cohomology tables of Tw ncGerst / Tw ncBV")
    c.add_argument("--operad", choices=sorted(OPERADS), required=True)
    c.add_argument("--arity", type=_nonneg, required=True)
    c.add_argument("--max-degree", type=_nonneg, required=True)
    c.add_argument("--max-black", type=_nonneg, required=True)
    c.add_argument("--check", action="store_true", help="exit 1 unless the totals match the model")
    c.add_argument("--format", choices=["table", "json"], default="table")
    c.set_defaults(func=cmd_cohomology)

    v = sub.add_parser("verify", help="run an invariant suite")
    v.add_argument("--suite", choices=sorted(SUITES) + ["all"], required=True)
    v.add_argument("--operad", choices=sorted(OPERADS), default="ncgerst")
    v.add_argument("--arity", type=_nonneg, default=2)
    v.add_argument("--max-black", type=_nonneg, default=3)
    v.add_argument("--max-degree", type=_nonneg, default=3)
    v.add_argument("--n", type=_nonneg, default=3)
    v.add_argument("--alpha-cap", type=_nonneg, default=3)
    v.add_argument("--n-cap", type=_nonneg, default=4)
    v.add_argument("--cap", type=_nonneg, default=3)
    v.add_argument("--trials", type=_nonneg, default=10)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("twist", help="twist a structure by an element")
    t.add_argument("--algebra", required=True)
    t.add_argument("--element", required=True)
    t.add_argument("--kind", choices=["ainfty", "linfty", "perm"], required=True)
    t.add_argument("--output")
    t.add_argument("--check", action="store_true", help="also check the relations of the result")
    t.set_defaults(func=cmd_twist)

    g = sub.add_parser("gauge", help="exp / log / bch / action on convolution elements")
    g.add_argument("op", choices=["exp", "log", "bch", "action"])
    g.add_argument("--input", required=True)
    g.add_argument("--other")
    g.add_argument("--output")
    g.set_defaults(func=cmd_gauge)
    return p


def main(argv=None):
    a = build_parser().parse_args(argv)
    try:
        return a.func(a)
    except (InputError, H.SchemaError, G.FiltrationViolation, G.VariantMismatch, G.NotMaurerCartan,
            H.DegreeMismatch, R.DegreeMismatch) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2
    except CompositionNotZero as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
