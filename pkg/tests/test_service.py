import time

import pytest
from fastapi.testclient import TestClient

from taxopt import fixtures as fx
from taxopt.data.population import dump_population_csv, population_to_json
from taxopt.schemas import code_to_json, reform_to_json
from taxopt.service import create_app


@pytest.fixture()
def client():
    with TestClient(create_app(max_workers=2)) as c:
        yield c


def upload_example1(client):
    pop = client.post("/populations", json=population_to_json(fx.example1_population()))
    assert pop.status_code == 201, pop.text
    code = client.post("/codes", json=code_to_json(fx.example1_code()))
    assert code.status_code == 201, code.text
    return pop.json()["id"], code.json()["id"]


def poll(client, job_id, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        payload = client.get(f"/solves/{job_id}").json()
        if payload["status"] not in ("queued", "running"):
            return payload
        time.sleep(0.05)
    raise AssertionError("job did not finish in time")


def test_recovery_solve_round_trip(client):
    pid, cid = upload_example1(client)
    submit = client.post("/solves", json={
        "population_id": pid,
        "code_id": cid,
        "reform": reform_to_json(fx.example1_recovery_spec()),
    })
    assert submit.status_code == 202
    job_id = submit.json()["id"]
    payload = poll(client, job_id)
    assert payload["status"] == "optimal"
    rates = [r["new"] for r in payload["report"]["rates"] if r["kind"] == "rate"]
    assert rates == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5], abs=1e-6)


def test_duplicate_population_conflict(client):
    doc = population_to_json(fx.example1_population())
    assert client.post("/populations", json=doc).status_code == 201
    again = client.post("/populations", json=doc)
    assert again.status_code == 409
    assert again.json()["detail"]["id"]


def test_csv_population_upload(client):
    csv_doc = {"csv": dump_population_csv(fx.example1_population())}
    response = client.post("/populations", json=csv_doc)
    assert response.status_code == 201
    assert response.json()["taxpayers"] == 100


def test_invalid_population_400_with_issues(client):
    response = client.post("/populations", json={"csv": "taxpayer_id,weight,current_tax\na,-2,0\n"})
    assert response.status_code == 400
    assert any("weight" in issue for issue in response.json()["detail"])


def test_unknown_ids_404(client):
    response = client.post("/solves", json={
        "population_id": "nope", "code_id": "nope",
        "reform": reform_to_json(fx.example1_recovery_spec()),
    })
    assert response.status_code == 404


def test_schema_violation_400(client):
    pid, cid = upload_example1(client)
    response = client.post("/solves", json={
        "population_id": pid, "code_id": cid,
        "reform": {"version": 1, "objective": {"kind": "nonsense"}},
    })
    assert response.status_code == 400
    assert any("objective" in issue for issue in response.json()["detail"])


def test_empty_selector_422(client):
    pid, cid = upload_example1(client)
    reform = reform_to_json(fx.example1_recovery_spec())
    reform["constraints"][0]["selector"] = {
        "kind": "input_range", "input": "income_before_tax", "minimum": 1e12,
    }
    response = client.post("/solves", json={
        "population_id": pid, "code_id": cid, "reform": reform,
    })
    assert response.status_code == 422
    assert "selects no taxpayers" in response.json()["detail"]


def test_infeasible_reported_with_conflicts(client):
    pid, cid = upload_example1(client)
    reform = {
        "version": 1,
        "name": "impossible",
        "constraints": [
            {"kind": "income_relative", "selector": {"kind": "all"},
             "epsilon": 0.02, "direction": "at_least", "basis": "net",
             "label": "everyone_gains"},
            {"kind": "budget", "direction": "loss_at_most", "cap": -1.0,
             "label": "revenue_up"},
        ],
        "objective": {"kind": "feasibility"},
    }
    submit = client.post("/solves", json={
        "population_id": pid, "code_id": cid, "reform": reform,
    })
    job = poll(client, submit.json()["id"])
    assert job["status"] == "infeasible"
    assert job["report"]["conflicts"]


def test_identical_submission_is_cached(client):
    pid, cid = upload_example1(client)
    body = {"population_id": pid, "code_id": cid,
            "reform": reform_to_json(fx.example1_recovery_spec())}
    first = client.post("/solves", json=body).json()
    poll(client, first["id"])
    second = client.post("/solves", json=body).json()
    assert second["id"] == first["id"]
    assert second["cached"] is True
    payload = poll(client, second["id"])
    assert payload["status"] == "optimal"


def test_sweep_job_frontier(client):
    pid, cid = upload_example1(client)
    submit = client.post("/solves", json={
        "population_id": pid, "code_id": cid,
        "reform": reform_to_json(fx.example1_reform2_spec()),
        "sweep": {"caps": [0.55, 0.6, 0.65]},
    })
    assert submit.status_code == 202
    job = poll(client, submit.json()["id"])
    assert job["status"] == "optimal"
    frontier = client.get(f"/solves/{submit.json()['id']}/frontier").json()
    losses = [e["revenue_loss"] for e in frontier["entries"]]
    assert len(losses) == 3
    assert losses == sorted(losses, reverse=True)


def test_frontier_on_plain_solve_404(client):
    pid, cid = upload_example1(client)
    submit = client.post("/solves", json={
        "population_id": pid, "code_id": cid,
        "reform": reform_to_json(fx.example1_recovery_spec()),
    })
    poll(client, submit.json()["id"])
    assert client.get(f"/solves/{submit.json()['id']}/frontier").status_code == 404


def test_scenarios_catalogue(client):
    catalogue = client.get("/scenarios").json()
    names = [entry["name"] for entry in catalogue]
    assert "example1_recovery" in names
    assert "example4_two_step" in names
    for entry in catalogue:
        assert set(entry) == {"name", "description", "code", "population", "reform"}


def test_catalogue_entry_is_solvable(client):
    catalogue = client.get("/scenarios").json()
    entry = next(e for e in catalogue if e["name"] == "example2_recovery")
    pid = client.post("/populations", json=entry["population"]).json()["id"]
    cid = client.post("/codes", json=entry["code"]).json()["id"]
    submit = client.post("/solves", json={
        "population_id": pid, "code_id": cid, "reform": entry["reform"],
    })
    payload = poll(client, submit.json()["id"])
    assert payload["status"] == "optimal"
