import io
import subprocess
import sys

import pytest

from gstl import data_path
from gstl.cli import main
from gstl.solve import read_dimacs, count_models

D = {name: str(data_path(name)) for name in
     ("kitchen.gm", "eq9.gstl", "eq9_patched.gstl", "until_o.sig", "until_o.gstl",
      "mp.proof", "mp_premises.gstl", "hierarchy.gm")}


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    rc = main(list(argv), out, err)
    return rc, out.getvalue(), err.getvalue()


def eq9_args(name="eq9.gstl", *extra):
    return ("--model", D["kitchen.gm"], "--formulas", D[name], "--horizon", "25", *extra)


def test_check_inconsistent_human():
    rc, out, _ = run("check", *eq9_args())
    assert rc == 1
    assert out.splitlines()[0] == "Inconsistent (conflict at t=15)"
    assert "conflict formulas: phi4 phi5 phi6" in out


def test_check_machine_is_stable():
    a = run("check", *eq9_args("eq9.gstl", "--format", "machine", "--grounding", "abstract"))
    b = run("check", *eq9_args("eq9.gstl", "--format", "machine", "--grounding", "abstract"))
    assert a == b
    lines = dict(l.split("=", 1) for l in a[1].splitlines())
    assert lines["verdict"] == "inconsistent"
    assert lines["conflict_step"] == "15"
    assert lines["variables"] == "78"


def test_count_patched():
    rc, out, _ = run("count", *eq9_args("eq9_patched.gstl", "--grounding", "abstract",
                                        "--count-method", "components"))
    assert rc == 0
    assert out.splitlines()[0] == "Consistent, 16384 models, 78 variables"


def test_count_limit_exit_code():
    rc, _, err = run("count", *eq9_args("eq9_patched.gstl", "--grounding", "abstract",
                                        "--max-models", "10"))
    assert rc == 3 and "resource limit" in err


def test_eval_until_o():
    rc, out, _ = run("eval", "--signal", D["until_o.sig"], "--formulas", D["until_o.gstl"],
                     "--format", "machine")
    assert rc == 0
    assert out.splitlines() == ["overlap=true", "p_early=true", "q_late=true"]


def test_eval_unknown_predicate(tmp_path):
    f = tmp_path / "bad.gstl"
    f.write_text("x: zzz\n")
    rc, _, err = run("eval", "--signal", D["until_o.sig"], "--formulas", str(f))
    assert rc == 2 and "zzz" in err


def test_compile_writes_files(tmp_path):
    cnf = tmp_path / "eq9.cnf"
    rc, _, _ = run("compile", *eq9_args("eq9_patched.gstl", "--grounding", "abstract"),
                   "-o", str(cnf))
    assert rc == 0
    c = read_dimacs(cnf.read_text(), (tmp_path / "eq9.cnf.map").read_text())
    assert len(c.atoms) == 78
    assert count_models(c, method="components") == 16384


def test_compile_stdout():
    rc, out, _ = run("compile", "--model", D["kitchen.gm"], "--formulas", D["eq9.gstl"],
                     "--horizon", "2", "--map", "/dev/null")
    assert rc == 0 and out.startswith("c gstl cnf horizon=2\np cnf ")


def test_prove():
    rc, out, _ = run("prove", "--proof", D["mp.proof"], "--premises", D["mp_premises.gstl"])
    assert rc == 0 and out.startswith("Valid")


def test_prove_invalid(tmp_path):
    f = tmp_path / "bad.proof"
    f.write_text("1. a ; premise\n2. b ; mp 1 1\n")
    rc, out, _ = run("prove", "--proof", str(f), "--format", "machine")
    assert rc == 1
    assert "verdict=invalid" in out and "step=2" in out


def test_empty_theory_is_trivially_consistent(tmp_path):
    f = tmp_path / "empty.gstl"
    f.write_text("# nothing\n")
    rc, out, _ = run("check", "--model", D["hierarchy.gm"], "--formulas", str(f))
    assert rc == 0 and out.startswith("Consistent, 1 model (trivial)")


@pytest.mark.parametrize("argv", [
    ("check",),
    ("check", "--model", "/nonexistent.gm", "--formulas", "/nonexistent.gstl"),
    ("check", "--model", D["kitchen.gm"], "--formulas", D["eq9.gstl"], "--horizon", "-1"),
    ("check", "--model", D["kitchen.gm"], "--formulas", D["eq9.gstl"], "--root", "nowhere"),
    ("frobnicate",),
])
def test_usage_errors(argv):
    assert run(*argv)[0] == 2


def test_epsilon_override_changes_neighbors():
    base = run("check", *eq9_args("eq9_patched.gstl", "--format", "machine"))
    tight = run("check", *eq9_args("eq9_patched.gstl", "--format", "machine", "--epsilon", "0"))
    assert base[0] == 0 and tight[0] == 0
    assert base[1] != tight[1]


def test_console_script_entry_point():
    p = subprocess.run([sys.executable, "-m", "gstl.cli", "prove", "--proof", D["mp.proof"]],
                       capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout.startswith("Valid")
