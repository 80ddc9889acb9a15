import json

import pytest

from taxopt import fixtures as fx
from taxopt.cli import main
from taxopt.data.population import load_population, save_population
from taxopt.schemas import code_to_json, reform_to_json
from taxopt.solver import import_mps, problems_equal
from taxopt import model as m
from taxopt import scenarios as sc


@pytest.fixture()
def workspace(tmp_path):
    code_path = tmp_path / "code.json"
    pop_path = tmp_path / "population.csv"
    code_path.write_text(json.dumps(code_to_json(fx.example1_code())))
    save_population(fx.example1_population(), pop_path)
    return tmp_path, str(code_path), str(pop_path)


def write_spec(tmp_path, spec) -> str:
    path = tmp_path / f"{spec.name}.json"
    path.write_text(json.dumps(reform_to_json(spec)))
    return str(path)


def test_recover_writes_report(workspace, capsys):
    tmp_path, code_path, pop_path = workspace
    out = tmp_path / "out"
    rc = main(["recover", "--code", code_path, "--population", pop_path,
               "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "optimal"
    assert (out / "rates.csv").exists()


def test_reform_exit_zero_and_cap(workspace):
    tmp_path, code_path, pop_path = workspace
    spec_path = write_spec(tmp_path, fx.example1_reform2_spec())
    out = tmp_path / "reform_out"
    rc = main(["reform", "--spec", spec_path, "--code", code_path,
               "--population", pop_path, "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    rates = [row["new"] for row in report["rates"] if row["kind"] == "rate"]
    assert max(rates) <= 0.6 + 1e-9


def test_reform_infeasible_exit_two(workspace, capsys):
    tmp_path, code_path, pop_path = workspace
    spec = m.ReformSpec(
        name="impossible",
        constraints=(
            m.IncomeRelative(selector=m.Selector(kind="all"), epsilon=0.02,
                             direction=m.AT_LEAST, basis=m.NET, label="cut"),
            m.Budget(direction=m.LOSS_AT_MOST, cap=-1.0, label="gain"),
        ),
    )
    rc = main(["reform", "--spec", write_spec(tmp_path, spec), "--code", code_path,
               "--population", pop_path, "--out", str(tmp_path / "x")])
    assert rc == 2
    out = capsys.readouterr().out
    assert "infeasible" in out
    assert "cut" in out or "gain" in out


def test_sweep_writes_frontier(workspace):
    tmp_path, code_path, pop_path = workspace
    spec_path = write_spec(tmp_path, fx.example1_reform2_spec())
    out = tmp_path / "sweep_out"
    rc = main(["sweep", "--spec", spec_path, "--code", code_path,
               "--population", pop_path, "--caps", "0.55,0.6,0.65",
               "--out", str(out)])
    assert rc == 0
    text = (out / "frontier.csv").read_text()
    assert text.count("optimal") == 3


def test_validate_ok(workspace):
    _, _, pop_path = workspace
    assert main(["validate", "--population", pop_path]) == 0


def test_validate_bad_file(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("taxpayer_id,weight,current_tax\nz,-1,0\n")
    assert main(["validate", "--population", str(bad)]) == 65


def test_missing_file_exit_66(tmp_path):
    assert main(["validate", "--population", str(tmp_path / "nope.csv")]) == 66


def test_usage_error_exit_64():
    assert main(["reform", "--code", "x"]) == 64


def test_export_mps_round_trip(workspace):
    tmp_path, code_path, pop_path = workspace
    spec = fx.example1_recovery_spec()
    spec_path = write_spec(tmp_path, spec)
    out = tmp_path / "problem.mps"
    rc = main(["export-mps", "--spec", spec_path, "--code", code_path,
               "--population", pop_path, "--out", str(out)])
    assert rc == 0
    compiled = m.compile_reform(spec, fx.example1_code(),
                                load_population(pop_path))
    assert problems_equal(import_mps(out), compiled.problem)


def test_generate_deterministic(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"taxpayers": 120, "households": 80}))
    out1 = tmp_path / "pop1.csv"
    out2 = tmp_path / "pop2.csv"
    code_path = tmp_path / "code.json"
    code_path.write_text(json.dumps(code_to_json(fx.example4_code())))
    assert main(["generate", "--config", str(config), "--seed", "9",
                 "--code", str(code_path), "--out", str(out1)]) == 0
    assert main(["generate", "--config", str(config), "--seed", "9",
                 "--code", str(code_path), "--out", str(out2)]) == 0
    assert out1.read_text() == out2.read_text()
    pop = load_population(out1)
    assert len(pop) == 120
    assert pop.num_households == 80
