import json
import subprocess
import sys

import pytest

from atld.cli import main
from atld.model import dump_model, load_model
from atld.synthesis import CnfInstance, brute_sat
from conftest import fixture_path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, json.loads(out.strip().splitlines()[-1]), err


def test_validate_fixture(capsys):
    code, rep, _ = run(capsys, "validate", fixture_path("bob"))
    assert code == 0 and rep["result"]["ok"]


def test_validate_corrupted_availability(capsys, tmp_path):
    doc = json.load(open(fixture_path("bob")))
    doc["availability"]["r2"]["q0"] = []
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    code, rep, _ = run(capsys, "validate", str(p))
    assert code == 1 and "empty availability at (r2,q0)" in rep["result"]["violations"]


def test_missing_transition_is_input_error(capsys, tmp_path):
    doc = json.load(open(fixture_path("bob")))
    doc["transitions"].pop()
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    code, rep, _ = run(capsys, "validate", str(p))
    assert code == 2 and "missing transition" in rep["result"]["error"]


def test_check_example_at_state(capsys):
    code, rep, err = run(capsys, "check", fixture_path("bob"),
                         "[true: right -> {r2}]+ [!atBob: left -> {r1}]- <{}> atBob R !warm", "--state", "q0")
    assert code == 0 and rep["result"]["holds"] is True
    assert "holds at q0" in err


def test_check_false_at_state_exits_1(capsys):
    code, rep, _ = run(capsys, "check", fixture_path("bob"), "<{r1,r2}> X atBob", "--state", "q0")
    assert code == 1 and rep["result"]["holds"] is False


def test_check_true_gives_all_states(capsys):
    _, rep, _ = run(capsys, "check", fixture_path("bob"), "true")
    assert rep["result"]["states"] == ["q0", "q1", "q2"]


def test_engines_agree_on_identity_observations(capsys):
    f = "!has(r2,right) & [true: right -> {r2}]+ (has(r2,right) & <{r1,r2}> X atBob)"
    _, a, _ = run(capsys, "check", fixture_path("bob"), f)
    _, b, _ = run(capsys, "check", fixture_path("bob"), f, "--epistemic")
    assert a["result"] == b["result"]


def test_input_errors(capsys):
    assert run(capsys, "check", fixture_path("bob"), "<{r1} X p")[0] == 2
    assert run(capsys, "check", fixture_path("bob"), "p", "--state", "q9")[0] == 2
    assert run(capsys, "check", "/nonexistent.json", "p")[0] == 2
    assert run(capsys, "check", fixture_path("bob"), "K{r1} p")[0] == 2


def test_budget_exit_code(capsys):
    code, rep, _ = run(capsys, "check", fixture_path("bob_imperfect"), "<{r1,r2}> X atBob",
                       "--epistemic", "--budget", "1")
    assert code == 3 and rep["result"]["attempted"] == 2


def test_report_stable_except_timing(capsys):
    args = ("check", fixture_path("bob"), "<{r1,r2}> F atBob")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    a.pop("timing"), b.pop("timing")
    assert a == b
    assert a["inputs"][fixture_path("bob")].startswith("sha256:")


def test_apply_grant_matches_fixture(capsys, tmp_path):
    out = tmp_path / "out.json"
    code, _, _ = run(capsys, "apply", fixture_path("bob"), "[true: right -> {r2}]+", "-o", str(out))
    assert code == 0
    assert out.read_text() == dump_model(load_model(fixture_path("bob_granted")))


def test_apply_noop_is_canonical_reserialization(capsys, tmp_path):
    out = tmp_path / "out.json"
    run(capsys, "apply", fixture_path("bob"), "[false: left -> {r1}]-", "-o", str(out))
    assert out.read_text() == dump_model(load_model(fixture_path("bob")))
    again = tmp_path / "again.json"
    run(capsys, "apply", str(out), "[false: left -> {r1}]-", "-o", str(again))
    assert again.read_text() == out.read_text()


def test_apply_epistemic_matches_fixture(capsys, tmp_path):
    out = tmp_path / "out.json"
    run(capsys, "apply", fixture_path("bob_imperfect"), "[!atBob: right -> {r2}]+", "--epistemic", "-o", str(out))
    assert out.read_text() == dump_model(load_model(fixture_path("bob_imperfect_granted")))


def test_apply_without_output_embeds_model(capsys):
    _, rep, _ = run(capsys, "apply", fixture_path("g1"), "[true: beta -> {a}]+")
    assert rep["result"]["model"]["states"] == [{"id": "v", "label": ["p"]}]


def test_synth_with_pool_file(capsys, tmp_path):
    pool = tmp_path / "pool.json"
    pool.write_text(json.dumps({"preconditions": ["true"], "actions": ["right"], "coalitions": [["r2"]],
                                "signs": ["+"]}))
    code, rep, _ = run(capsys, "synth", fixture_path("bob"), "q0", "<{r1,r2}> X atBob", "--pool", str(pool))
    assert code == 0 and rep["result"]["sequence"] == ["[true : right -> {r2}]+"]


def test_synth_nothing_found_exit_1(capsys, tmp_path):
    pool = tmp_path / "pool.json"
    pool.write_text(json.dumps({"preconditions": ["true"], "actions": ["left"], "coalitions": [["r2"]]}))
    code, rep, _ = run(capsys, "synth", fixture_path("bob"), "q0", "<{r1,r2}> X atBob", "--pool", str(pool),
                       "--bound", "2")
    assert code == 1 and rep["result"]["found"] is False and rep["result"]["bound"] == 2


@pytest.mark.parametrize("clauses,sat", [("1 2 3 0\n-1 -3 4 0\n", True), ("1 0\n-1 0\n", False)])
def test_gen3sat_then_check_assignment_update(capsys, tmp_path, clauses, sat):
    cnf_path = tmp_path / "f.cnf"
    cnf_path.write_text("p cnf 4 2\n" + clauses)
    outdir = tmp_path / "gen"
    code, rep, _ = run(capsys, "gen3sat", str(cnf_path), str(outdir))
    assert code == 0
    goal = (outdir / "goal.txt").read_text().strip()
    code, rep, _ = run(capsys, "synth", str(outdir / "model.json"), "X1", goal, "--pool", str(outdir / "pool.json"))
    assert rep["result"]["found"] is sat == brute_sat(CnfInstance.load(cnf_path))
    if sat:
        update = rep["result"]["sequence"][0]
        code, rep, _ = run(capsys, "check", str(outdir / "model.json"), f"{update} ({goal})", "--state", "X1")
        assert code == 0


def test_gen3sat_single_clause(capsys, tmp_path):
    p = tmp_path / "one.cnf"
    p.write_text("p cnf 1 1\n1 1 1 0\n")
    _, rep, _ = run(capsys, "gen3sat", str(p), str(tmp_path / "o"))
    assert rep["result"]["states"] == 7


def test_norm_zeta_and_eta(capsys, tmp_path):
    z = tmp_path / "z.json"
    z.write_text(json.dumps({"left": {"r1": "atBob"}}))
    code, rep, _ = run(capsys, "norm", fixture_path("bob_granted"), "--zeta", str(z), "true")
    assert code == 0 and rep["result"]["update"] == "[!atBob : left -> {r1}]-"
    e = tmp_path / "e.json"
    e.write_text(json.dumps({"left": {"r1": ["q0", "q2"]}}))
    code, rep, _ = run(capsys, "norm", fixture_path("bob"), "--eta", str(e), "true", "--state", "q1")
    assert code == 0 and rep["result"]["states"] == ["q0", "q1", "q2"]


def test_text_format(capsys):
    code = main(["check", fixture_path("bob"), "atBob", "--format", "text"])
    out, _ = capsys.readouterr()
    assert code == 0 and "states: q1" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "atld.cli", "check", fixture_path("bob"), "warm"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["states"] == ["q2"]
