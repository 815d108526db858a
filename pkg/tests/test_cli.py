import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from optwist import homotopyalg as H
from optwist import rootedperm as R
from optwist.cli import main, parse_element, format_vector
from optwist.core import FilteredModule

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"
NIL = HERE / "data" / "nilpotent_n3.json"

GOLDEN_RUNS = [
    ("cohomology_ncgerst_arity1.txt", ["--operad", "ncgerst", "--arity", "1", "--max-degree", "3", "--max-black", "5"]),
    ("cohomology_ncbv_arity0.txt", ["--operad", "ncbv", "--arity", "0", "--max-degree", "5", "--max-black", "6"]),
]


def run(*args):
    return subprocess.run([sys.executable, "-m", "optwist.cli", *args], capture_output=True, text=True)


@pytest.mark.parametrize("name,flags", GOLDEN_RUNS)
def test_golden_cohomology(name, flags):
    p = run("cohomology", *flags, "--check")
    assert p.returncode == 0, p.stderr
    assert p.stdout.encode() == (GOLDEN / name).read_bytes()


def test_cohomology_json_and_degenerate_window(capsys):
    assert main(["cohomology", "--operad", "ncgerst", "--arity", "0", "--max-degree", "0", "--max-black", "0"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# H(Tw ncGerst)(0)")
    assert main(["cohomology", "--operad", "ncgerst", "--arity", "1", "--max-degree", "2",
                 "--max-black", "2", "--format", "json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["totals"] == [1, 0, 0] and d["match"]


def test_cohomology_check_fails_on_short_window(capsys):
    # with no black vertices allowed the class of gamma is missing
    code = main(["cohomology", "--operad", "ncgerst", "--arity", "0", "--max-degree", "1",
                 "--max-black", "0", "--check"])
    assert code == 1
    assert "match: no" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["cohomology", "--operad", "ncfoo", "--arity", "1", "--max-degree", "1", "--max-black", "1"],
    ["cohomology", "--operad", "ncgerst", "--arity", "-1", "--max-degree", "1", "--max-black", "1"],
    ["verify", "--suite", "nope"],
    ["verify", "--suite", "dsq", "--bogus", "1"],
])
def test_bad_flags_exit_two(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == 2


@pytest.mark.parametrize("argv", [
    ["verify", "--suite", "diffmu", "--n", "3", "--alpha-cap", "3"],
    ["verify", "--suite", "dsq", "--operad", "ncbv", "--arity", "1", "--max-black", "3", "--max-degree", "3"],
    ["verify", "--suite", "gauge", "--cap", "3", "--trials", "3", "--seed", "7"],
    ["verify", "--suite", "perm", "--cap", "3", "--trials", "4"],
    ["verify", "--suite", "defcomplex", "--n-cap", "3"],
])
def test_verify_suites(argv, capsys):
    assert main(argv) == 0
    line = capsys.readouterr().out
    assert ": PASS (" in line


def test_verify_is_deterministic(capsys):
    argv = ["verify", "--suite", "gauge", "--cap", "3", "--trials", "2", "--seed", "7"]
    main(argv)
    a = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == a


def test_parse_and_format_element():
    M = FilteredModule([("a", 0, 1), ("b", -1, 2)], 3)
    assert parse_element("2*a - 1/2*b", M) == {0: 2, 1: Fraction(-1, 2)}
    assert parse_element("0", M) == {}
    assert format_vector({0: 2, 1: -1}, M) == "2*a - b"
    assert format_vector({}, M) == "0"
    for bad in ("", "c", "a +", "3"):
        with pytest.raises(Exception):
            parse_element(bad, M)


def test_twist_nilpotent_example(tmp_path, capsys):
    out = tmp_path / "t.json"
    assert main(["twist", "--algebra", str(NIL), "--element", "a", "--kind", "ainfty",
                 "--output", str(out), "--check"]) == 0
    txt = capsys.readouterr().out
    assert "residual: b" in txt and "not Maurer-Cartan" in txt
    t = H.structure_from_json(json.loads(out.read_text()))
    assert t.theta == {1: 1} and t.op(1) == {(0,): {1: 2}}


def test_twist_by_zero_is_byte_identical(tmp_path, capsys):
    out = tmp_path / "t.json"
    assert main(["twist", "--algebra", str(NIL), "--element", "0", "--kind", "ainfty", "--output", str(out)]) == 0
    assert out.read_text() == H.dumps(H.structure_to_json(H.structure_from_json(json.loads(NIL.read_text()))))
    assert "residual: 0" in capsys.readouterr().out


def test_twist_mc_input(tmp_path, capsys):
    M = FilteredModule([("a", 0, 1), ("t", -1, 2)], 3)
    s = H.CurvedAinftyStructure(M, {1: 1}, {2: {(0, 0): {1: -1}}}, 3, True)
    src = tmp_path / "s.json"
    src.write_text(H.dumps(H.structure_to_json(s)))
    out = tmp_path / "t.json"
    assert main(["twist", "--algebra", str(src), "--element", "a", "--kind", "ainfty",
                 "--output", str(out), "--check"]) == 0
    txt = capsys.readouterr().out
    assert "Maurer-Cartan: twisted structure is uncurved" in txt and "relations: pass" in txt
    assert H.check_relations(H.structure_from_json(json.loads(out.read_text()))).ok


def test_twist_perm_and_linfty(tmp_path, capsys):
    import random
    rng = random.Random(1)
    s = R.random_perm(rng, N=4, cap=3, degrees=(-1, 0, 1), density=0.4)
    src = tmp_path / "p.json"
    src.write_text(H.dumps(R.perm_to_json(s)))
    assert main(["twist", "--algebra", str(src), "--element", "0", "--kind", "perm", "--check"]) == 0
    assert "relations: pass" in capsys.readouterr().err
    L = H.random_linfty(rng, dim=4, N=3, cap=3)
    src = tmp_path / "l.json"
    src.write_text(H.dumps(H.structure_to_json(L)))
    assert main(["twist", "--algebra", str(src), "--element", "0", "--kind", "linfty", "--check"]) == 0


def test_twist_input_errors(tmp_path, capsys):
    assert main(["twist", "--algebra", str(tmp_path / "missing.json"), "--element", "a", "--kind", "ainfty"]) == 2
    assert main(["twist", "--algebra", str(NIL), "--element", "zz", "--kind", "ainfty"]) == 2
    # degree 1 element: not a valid twisting element
    assert main(["twist", "--algebra", str(NIL), "--element", "b", "--kind", "ainfty"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"grading": "cohomological"}))
    assert main(["twist", "--algebra", str(bad), "--element", "a", "--kind", "ainfty"]) == 2
    assert capsys.readouterr().err.count("error:") == 4


def _element_file(path, x):
    from optwist.cli import element_json
    path.write_text(json.dumps(element_json(x), sort_keys=True, indent=2) + "\n")


def test_gauge_subcommands(tmp_path):
    import random
    from optwist import gauge as G
    rng = random.Random(3)
    M = FilteredModule([(f"e{i}", rng.choice((-1, 0, 1)), rng.randint(1, 3)) for i in range(4)], 4)
    x, y = (H.random_gauge(rng, M, "uAs_dual", 3, density=0.5) for _ in range(2))
    fx, fy = tmp_path / "x.json", tmp_path / "y.json"
    _element_file(fx, x)
    _element_file(fy, y)

    def load(p):
        return G.ConvolutionElement.from_json(json.loads(p.read_text())["element"], M)

    e = tmp_path / "e.json"
    assert main(["gauge", "exp", "--input", str(fx), "--output", str(e)]) == 0
    assert load(e) == G.prelie_exp(x)
    lg = tmp_path / "l.json"
    assert main(["gauge", "log", "--input", str(e), "--output", str(lg)]) == 0
    assert load(lg) == x
    b = tmp_path / "b.json"
    assert main(["gauge", "bch", "--input", str(fx), "--other", str(fy), "--output", str(b)]) == 0
    assert load(b) == G.bch(x, y)
    assert main(["gauge", "bch", "--input", str(fx)]) == 2
    # y has degree 0, not an MC element
    assert main(["gauge", "action", "--input", str(fx), "--other", str(fy)]) == 2
