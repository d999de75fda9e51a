import io
import json
import subprocess
import sys
from importlib.resources import files

import pytest

from helpers import ALL
from shades.cli import main

CORPUS = files("shades").joinpath("corpus")


def path(name):
    return str(CORPUS.joinpath(name))


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


LOOP_DEPTH_3 = """<eps>
!c
!c !c
!c !c !c
!c !c !d
!c !d
!c !d end
!d
!d end
"""


def test_traces_loop_figure():
    assert cli("traces", path("loop.st"), "--depth", "3", "--abbrev") == (0, LOOP_DEPTH_3, "")


def test_traces_of_an_automaton_file():
    code, out, _ = cli("traces", path("loop_fig.aut"), "--depth", "3", "--abbrev")
    assert (code, out) == (0, LOOP_DEPTH_3)


def test_traces_canonical_spelling():
    code, out, _ = cli("traces", path("counter.st"), "--depth", "1")
    assert out == "<eps>\n&[dump,inc]:dump\n&[dump,inc]:inc\n"


def test_check_bad_cycle():
    code, out, _ = cli("check", path("bad_cycle.st"))
    assert code == 1
    assert out.splitlines()[1] == "contractive: fail: trivial equations loop [X -> Y -> Z -> X]"


def test_check_ok():
    assert cli("check", path("counter.st")) == (0, "valid: ok\ncontractive: ok\nformation: ok\n", "")


def test_check_unreachable_bad_identifier():
    code, out, _ = cli("check", path("grow.st"))
    assert code == 1
    assert "formation: ok" in out


def test_equiv_exit_codes():
    assert cli("equiv", path("loop.st"), path("loop2.st"))[:2] == (0, "Equivalent\n")
    code, out, _ = cli("equiv", path("meta.st"), path("nest.st"))
    assert code == 3 and out.startswith("EquivalentUpTo(12)\n")
    code, out, _ = cli("equiv", path("loop.st"), path("counter.st"))
    assert code == 1
    assert out.splitlines()[1] == "witness: !c"


def test_fuel_from_environment(monkeypatch):
    monkeypatch.setenv("SHADES_FUEL", "5")
    code, out, _ = cli("equiv", path("meta.st"), path("nest.st"))
    assert code == 3 and out.startswith("EquivalentUpTo(5)")


def test_dualcheck(tmp_path):
    dual = tmp_path / "dual.st"
    dual.write_text("system recursive\ntype t = Y\nY = ?end.Y\n")
    assert cli("dualcheck", path("loop.st"), str(dual))[:2] == (0, "Equivalent\n")
    assert cli("dualcheck", path("loop.st"), path("loop.st"))[0] == 1


def test_compile_and_decompile(tmp_path):
    target = tmp_path / "counter.aut"
    code, out, _ = cli("compile", path("counter.st"), "-o", str(target))
    assert code == 0 and out == f"wrote {target}\n"
    assert target.read_text().startswith("automaton onecounter\nstates q_X q_Y q_Z q_end\n")
    code, out, _ = cli("decompile", str(target))
    assert code == 0 and out.startswith("system onecounter\n")


def test_convert_and_dual():
    code, out, _ = cli("convert", "--to", "pushdown", path("counter.st"))
    assert code == 0 and "stack u" in out
    code, out, _ = cli("convert", "--to", "nested", path("meta.st"))
    assert "X_eps = &{addIn: X_b(X_eps), addOut: X_a(X_eps)}" in out
    code, out, _ = cli("dual", path("loop.st"))
    assert out == "system recursive\ntype loop = X_dual\nX = !end.X\nX_dual = ?end.X_dual\n"


def test_convert_unsupported_direction():
    assert cli("convert", "--to", "onecounter", path("meta.st"))[0] == 1


def test_tree():
    code, out, _ = cli("tree", path("loop.st"), "--depth", "2")
    assert out == "!\n  c: !\n  d: end\n"


def test_usage_errors():
    assert cli()[0] == 64
    assert cli("bogus")[0] == 64
    assert cli("traces", path("loop.st"))[0] == 64
    assert cli("traces", "/nonexistent.st", "--depth", "2")[0] == 64


def test_parse_errors(tmp_path):
    bad = tmp_path / "bad.st"
    bad.write_text("system onecounter\ntype t = X(z)\nX(s N) = Y(\n")
    code, _, err = cli("check", str(bad))
    assert code == 65 and "3:11" in err
    invalid = tmp_path / "invalid.st"
    invalid.write_text("system recursive\ntype t = X\nX = Y\n")
    code, out, _ = cli("check", str(invalid))
    assert code == 65 and out.startswith("valid: fail")


@pytest.mark.parametrize(
    "argv",
    [
        ("check", path("bad_cycle.st")),
        ("check", path("meta.st")),
        ("equiv", path("loop.st"), path("loop2.st")),
        ("equiv", path("meta.st"), path("nest.st")),
        ("equiv", path("loop.st"), path("counter.st")),
        ("traces", path("tree.st"), "--depth", "3"),
        ("dual", path("counter.st")),
    ],
)
def test_json_matches_human(argv):
    code, human, _ = cli(*argv)
    jcode, text, _ = cli(*argv, "--json")
    report = json.loads(text)
    assert code == jcode == report["exit"]
    if "result" in report:
        assert human.splitlines()[0].startswith(report["result"])
    if "traces" in report:
        assert report["traces"] == human.splitlines()
    if "contractive" in report:
        assert report["contractive"]["status"] in human.splitlines()[1] or report["contractive"]["status"] == "ok"


@pytest.mark.parametrize("name", ALL)
def test_output_is_deterministic(name):
    argv = ("traces", path(f"{name}.st"), "--depth", "3")
    first = cli(*argv)
    assert cli(*argv) == first


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "shades", "traces", path("loop.st"), "--depth", "3", "--abbrev"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout == LOOP_DEPTH_3
