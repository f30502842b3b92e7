import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from fqshtuka import cli
from fqshtuka.errors import SchemaError, UnresolvedReference

SAMPLES = Path(__file__).resolve().parent.parent / "samples"

MINIMAL = {
    "schema": "fqshtuka-document/1",
    "ring": {"preset": "Fq", "q": 2},
    "objects": {"sh": {"kind": "local", "matrix": [["z"]]}},
    "commands": [{"op": "tower", "object": "sh", "n_max": 2}],
}


def doc(**changes):
    d = json.loads(json.dumps(MINIMAL))
    d.update(changes)
    return json.dumps(d)


def test_parse_minimal():
    pd = cli.parse(doc())
    assert len(pd.commands) == 1 and "sh" in pd.objects


def test_run_minimal_orders():
    rep = cli.run(cli.parse(doc()))
    assert rep.results[0]["status"] == "ok"
    assert rep.results[0]["value"]["orders"] == [2, 4]


def test_schema_errors_are_located():
    bad = doc(commands=[{"op": "frobnicate", "object": "sh"}], options={"precision": "x"})
    with pytest.raises(SchemaError) as exc:
        cli.parse(bad)
    errs = exc.value.witness
    assert any(e.startswith("$.commands[0].op") for e in errs)
    assert any(e.startswith("$.options.precision") for e in errs)


def test_unresolved_reference():
    with pytest.raises(UnresolvedReference):
        cli.parse(doc(commands=[{"op": "tower", "object": "nope"}]))


def test_malformed_json():
    with pytest.raises(SyntaxError):
        cli.parse("{not json")


def test_structured_roundtrip():
    rep = cli.run(cli.parse((SAMPLES / "epsilon.json").read_text()))
    again = cli.parse(cli.emit(rep, "structured"))
    assert again == rep


def test_output_is_deterministic():
    text = (SAMPLES / "finite.json").read_text()
    a = cli.emit(cli.run(cli.parse(text)), "structured")
    b = cli.emit(cli.run(cli.parse(text)), "structured")
    assert a == b
    assert "seconds" not in a


def test_option_precedence():
    env = {"FQSHTUKA_PRECISION": "20", "FQSHTUKA_SEED": "5"}
    out = cli.resolve_options({"precision": 15, "dmax": 3}, env=env, flags={"seed": 9})
    assert out["precision"] == 20 and out["dmax"] == 3 and out["seed"] == 9
    assert out["emax"] == cli.DEFAULTS["emax"]


def test_per_command_errors_are_reported():
    bad = doc(objects={"sh": {"kind": "local", "matrix": [["z^3"]]}},
              commands=[{"op": "verschiebung", "object": "sh", "d": 1},
                        {"op": "tower", "object": "sh", "n_max": 1}])
    rep = cli.run(cli.parse(bad))
    assert rep.results[0]["status"] == "error"
    assert rep.results[0]["error"]["type"] == "NotAnnihilated"
    assert rep.results[1]["status"] == "ok"


def _cli(args, env_extra=None, stdin=None):
    env = dict(os.environ)
    env.update(env_extra or {})
    return subprocess.run([sys.executable, "-m", "fqshtuka.cli", *args], input=stdin,
                          capture_output=True, text=True, env=env)


def test_exit_code_success(tmp_path):
    path = tmp_path / "d.json"
    path.write_text(doc())
    res = _cli([str(path), "--format", "structured"])
    assert res.returncode == 0
    assert json.loads(res.stdout)["results"][0]["value"]["orders"] == [2, 4]


def test_exit_code_failed_command():
    bad = doc(objects={"sh": {"kind": "local", "matrix": [["z^3"]]}},
              commands=[{"op": "verschiebung", "object": "sh", "d": 1}])
    assert _cli(["-"], stdin=bad).returncode == 1


def test_exit_code_schema_error():
    res = _cli(["-"], stdin=doc(commands=[{"op": "tower", "object": "nope"}]))
    assert res.returncode == 2 and "UnresolvedReference" in res.stderr


def test_exit_code_bad_zeta():
    res = _cli(["-"], stdin=doc(ring={"preset": "Fq", "q": 2, "zeta": "1"}))
    assert res.returncode == 2


def test_env_override_reaches_header():
    res = _cli(["-", "--format", "structured"], {"FQSHTUKA_PRECISION": "7"}, doc())
    assert json.loads(res.stdout)["header"]["options"]["precision"] == 7
    res = _cli(["-", "--format", "structured", "--precision", "9"],
               {"FQSHTUKA_PRECISION": "7"}, doc())
    assert json.loads(res.stdout)["header"]["options"]["precision"] == 9


def test_byte_identical_runs(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        _cli([str(SAMPLES / "deform.json"), "--format", "structured", "-o", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_suite_subset_via_cli():
    res = _cli(["--suite", "--criteria", "6", "8", "--format", "structured"])
    assert res.returncode == 0
    val = json.loads(res.stdout)["results"][0]["value"]
    assert val["passed"] == val["total"] == 2


@pytest.mark.parametrize("name", ["tower.json", "epsilon.json", "deform.json", "finite.json"])
def test_samples_run_clean(name):
    rep = cli.run(cli.parse((SAMPLES / name).read_text()))
    assert rep.failed == 0
    assert cli.emit(rep, "human").endswith("0 failed\n")
