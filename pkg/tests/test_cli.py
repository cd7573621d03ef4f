import json
import shutil
import subprocess
from fractions import Fraction
from pathlib import Path

import pytest

from gkdeform.cli import main, run
from gkdeform.fields import section_from_json
from gkdeform.report import SCHEMA_VERSION, dumps, encode
from gkdeform.scalar import S, from_pairs

SCEN = Path(__file__).resolve().parent.parent / "scenarios"


def scenario(name):
    return str(SCEN / name)


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


@pytest.mark.parametrize("mode,name", [
    ("mc", "mc_constant.json"),
    ("mc", "mc_nonconstant.json"),
    ("kuranishi", "kuranishi_constant.json"),
    ("kuranishi", "kuranishi_obstructed.json"),
    ("surfaces", "surfaces.json"),
])
def test_scenarios_pass(mode, name):
    code, doc = run(mode, scenario(name), trials=5 if mode == "identities" else None)
    assert code == 0, doc.get("error")
    assert doc["pass"] and doc["exit_code"] == 0
    assert doc["schema_version"] == SCHEMA_VERSION
    assert "not reproduced" in doc["scope"]["not_reproduced"]


def test_identities_fail_only_on_literal_leibniz():
    code, doc = run("identities", scenario("identities.json"), trials=10)
    assert code == 1 and not doc["pass"]
    suites = doc["results"]["identities"]
    assert not suites["leibniz"]["pass"] and suites["leibniz_sign_consistent"]["pass"]
    assert all(v["pass"] for k, v in suites.items() if k != "leibniz")
    assert all(v["pass"] for v in doc["results"]["derived_bracket_oracle"].values())


def test_kuranishi_obstructed_reports_obstruction():
    _, doc = run("kuranishi", scenario("kuranishi_obstructed.json"))
    assert doc["results"]["obstructed"]
    assert any(not row["zero"] for row in doc["results"]["obstruction_polynomial"])
    assert all(row["holds"] for row in doc["results"]["equivalence"])


def test_biherm_fails_only_on_first_order():
    code, doc = run("biherm", scenario("biherm_constant.json"))
    assert code == 1
    r = doc["results"]
    assert all(r["checks"].values())
    assert all(row["closed"] for row in r["spinor_closedness"])
    assert all(all(v for k, v in row.items() if k != "order") for row in r["loop_conditions"])
    fo = r["first_order_check"]
    assert fo["J_plus_order1_zero"] and fo["contraction_routes_agree"]
    assert not fo["J_minus_matches"] and not fo["pass"]


def test_reports_are_deterministic(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        main(["identities", "--scenario", scenario("identities.json"), "--trials", "3", "--seed", "7",
              "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    doc = json.loads(outs[0])
    assert doc["scenario"]["seed"] == 7 and doc["scenario"]["trials"] == 3


@pytest.mark.parametrize("doc", [
    {"mode": "mc", "n": 2, "N": 3, "eps1": [], "bogus": 1},
    {"mode": "kuranishi", "n": 2, "N": 3, "eps1": []},
    {"mode": "mc", "n": 2, "N": "3", "eps1": []},
    {"mode": "mc", "n": 2, "N": 3, "eps1": [{"k": [0, 0, 0, 0], "basis_word": "p1"}]},
    {"mode": "mc", "n": 2, "N": 3, "seed": -1, "eps1": []},
    {"mode": "biherm", "n": 2, "N": 2, "beta": [], "omega": [[1, 0]]},
    {"mode": "surfaces", "configurations": [{"n": 4, "lines": [[1, 2]]}]},
    {"mode": "kuranishi", "n": 2, "N": 2, "basis": []},
])
def test_schema_errors(tmp_path, doc):
    code, rep = run(doc["mode"], write(tmp_path, doc))
    assert code == 2
    assert rep["error"]["kind"] == "schema" and not rep["pass"]


def test_mode_mismatch_and_bad_json(tmp_path):
    assert run("mc", scenario("surfaces.json"))[0] == 2
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert run("mc", str(p))[0] == 2
    assert run("mc", str(tmp_path / "missing.json"))[0] == 2


def test_odd_degree_eps_is_schema_error(tmp_path):
    doc = {"mode": "mc", "n": 2, "N": 2,
           "eps1": [{"k": [0, 0, 0, 0], "basis_word": "p1", "re_num": 1, "re_den": 1, "im_num": 0, "im_den": 1}]}
    assert run("mc", write(tmp_path, doc))[0] == 2


def test_non_closed_eps_is_schema_error(tmp_path):
    doc = json.loads((SCEN / "kuranishi_obstructed.json").read_text())
    terms = [t for b in doc["basis"] for t in b]
    code, rep = run("mc", write(tmp_path, {"mode": "mc", "n": 2, "N": 2, "eps1": terms}))
    assert code == 2 and "closed" in rep["error"]["message"]


def test_scenario_echo_round_trip(tmp_path):
    code, doc = run("mc", scenario("mc_nonconstant.json"))
    echo = dict(doc["scenario"])
    code2, doc2 = run("mc", write(tmp_path, echo))
    assert (code, doc["results"]) == (code2, doc2["results"])
    eps1 = section_from_json({"n": 2, "fiber_kind": "multivector", "terms": echo["eps1"]})
    first = doc["results"]["series"]["coeffs"][0]
    assert section_from_json(first["section"]) == eps1


def test_exact_encoding():
    assert encode(Fraction(-3, 4)) == {"num": -3, "den": 4}
    z = S(Fraction(1, 3), -2)
    e = encode(z)
    assert from_pairs(e["re_num"], e["re_den"], e["im_num"], e["im_den"]) == z
    assert dumps({"b": 1, "a": [1]}) == '{\n  "a": [\n    1\n  ],\n  "b": 1\n}\n'


def test_console_script(tmp_path):
    exe = shutil.which("gkdeform")
    if exe is None:
        pytest.skip("console script not installed")
    out = tmp_path / "s.json"
    p = subprocess.run([exe, "surfaces", "--scenario", scenario("surfaces.json"), "--out", str(out)],
                       capture_output=True, text=True)
    assert p.returncode == 0
    assert "S8" in p.stderr
    assert json.loads(out.read_text())["pass"]
    p = subprocess.run([exe, "surfaces", "--scenario", scenario("surfaces.json"), "--seed", str(2 ** 64)],
                       capture_output=True, text=True)
    assert p.returncode == 2
