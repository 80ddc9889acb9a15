"""JSON-over-HTTP facade for the interactive workbench.

Populations and tax codes are uploaded once and addressed by content
hash; solves are asynchronous jobs in a bounded worker pool whose
terminal states never change.  Identical submissions share one job, so
re-running a recipe is free.
"""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from fastapi import Body, FastAPI, HTTPException

from . import scenarios
from .data.population import (
    Population,
    load_population_csv,
    population_from_json,
)
from .data.report import build_report
from .errors import CompileError, TaxOptError, ValidationError
from .schemas import code_from_json, reform_from_json, validate_reform_document

QUEUED = "queued"
RUNNING = "running"
ERROR = "error"


def _digest(payload) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass
class _Job:
    id: str
    kind: str  # "solve" or "sweep"
    status: str = QUEUED
    result: dict | None = None
    frontier: list[dict] | None = None
    error: str | None = None


@dataclass
class _State:
    populations: dict[str, Population] = field(default_factory=dict)
    codes: dict[str, object] = field(default_factory=dict)
    jobs: dict[str, _Job] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


def create_app(max_workers: int | None = None, detail_cap: int = 50_000) -> FastAPI:
    app = FastAPI(title="tax reform workbench", version="1")
    state = _State()
    pool = ThreadPoolExecutor(max_workers=max_workers)
    catalogue_cache: list[dict] = []

    def _run_job(job: _Job, code, population, reform_doc: dict, sweep: dict | None):
        job.status = RUNNING
        try:
            spec = reform_from_json(reform_doc)
            if sweep:
                entries = scenarios.sweep_frontier(
                    code, population, sweep["caps"],
                    spec_builder=scenarios.cap_sweep_builder(spec))
                job.frontier = [
                    {
                        "cap": e.cap,
                        "status": e.status,
                        "revenue_loss": e.revenue_loss,
                        "active_rules": e.active_rules,
                        "conflicts": e.conflicts,
                    }
                    for e in entries
                ]
                job.status = "optimal"
                return
            result = scenarios.solve_reform(spec, code, population)
            if result.is_optimal:
                job.result = build_report(result, detail_cap=detail_cap)
                job.status = "optimal"
            elif result.status == "infeasible":
                job.result = {
                    "status": "infeasible",
                    "conflicts": result.conflicts,
                    "rule_census": result.census,
                }
                job.status = "infeasible"
            else:
                job.status = ERROR
                job.error = f"solver returned {result.status}"
        except (TaxOptError, ValueError) as exc:
            job.status = ERROR
            job.error = str(exc)

    @app.post("/populations", status_code=201)
    def upload_population(document: dict = Body(...)):
        try:
            if "csv" in document:
                population = load_population_csv(document["csv"])
            else:
                population = population_from_json(document)
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=exc.issues)
        pid = _digest(document)
        with state.lock:
            if pid in state.populations:
                raise HTTPException(
                    status_code=409,
                    detail={"message": "duplicate upload", "id": pid},
                )
            state.populations[pid] = population
        return {
            "id": pid,
            "taxpayers": len(population),
            "households": population.num_households,
        }

    @app.post("/codes", status_code=201)
    def upload_code(document: dict = Body(...)):
        try:
            code = code_from_json(document)
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=exc.issues)
        cid = _digest(document)
        with state.lock:
            if cid in state.codes:
                raise HTTPException(
                    status_code=409,
                    detail={"message": "duplicate upload", "id": cid},
                )
            state.codes[cid] = code
        return {"id": cid, "rules": len(code.rules)}

    @app.post("/solves", status_code=202)
    def submit_solve(request: dict = Body(...)):
        for field_name in ("population_id", "code_id", "reform"):
            if field_name not in request:
                raise HTTPException(status_code=400,
                                    detail=[f"missing field {field_name!r}"])
        with state.lock:
            population = state.populations.get(request["population_id"])
            code = state.codes.get(request["code_id"])
        if population is None:
            raise HTTPException(status_code=404, detail="unknown population id")
        if code is None:
            raise HTTPException(status_code=404, detail="unknown code id")
        try:
            validate_reform_document(request["reform"])
            spec = reform_from_json(request["reform"])
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=exc.issues)
        sweep = request.get("sweep")
        if sweep is not None:
            caps = sweep.get("caps")
            if not isinstance(caps, list) or not caps or sorted(caps) != caps:
                raise HTTPException(status_code=400,
                                    detail=["sweep.caps must be a sorted list"])
        try:
            for ci, constraint in enumerate(spec.constraints):
                selector = getattr(constraint, "selector", None)
                if selector is not None and not selector.resolve(population):
                    raise CompileError(
                        f"constraint #{ci} ({constraint.kind}) selects no taxpayers"
                    )
        except CompileError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except TaxOptError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        job_id = _digest(request)
        with state.lock:
            if job_id in state.jobs:
                return {"id": job_id, "cached": True}
            job = _Job(id=job_id, kind="sweep" if sweep else "solve")
            state.jobs[job_id] = job
        pool.submit(_run_job, job, code, population, request["reform"], sweep)
        return {"id": job_id, "cached": False}

    @app.get("/solves/{job_id}")
    def poll_solve(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown solve id")
        payload = {"id": job.id, "kind": job.kind, "status": job.status}
        if job.error:
            payload["error"] = job.error
        if job.result is not None:
            payload["report"] = job.result
        if job.kind == "sweep" and job.frontier is not None:
            payload["frontier_available"] = True
        return payload

    @app.get("/solves/{job_id}/frontier")
    def frontier(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown solve id")
        if job.kind != "sweep":
            raise HTTPException(status_code=404, detail="not a sweep job")
        return {"id": job.id, "status": job.status, "entries": job.frontier or []}

    @app.get("/scenarios")
    def bundled_scenarios():
        if not catalogue_cache:
            from .fixtures import scenario_catalogue

            catalogue_cache.extend(scenario_catalogue(small=True))
        return [
            {k: entry[k] for k in ("name", "description", "code", "population", "reform")}
            for entry in catalogue_cache
        ]

    return app


app = create_app()
