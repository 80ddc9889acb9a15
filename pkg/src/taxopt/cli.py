"""Command-line entry point for batch workflows.

Exit codes: 0 optimal, 2 infeasible (conflicts printed), 3 other solver
outcome, 64 usage error, 65 invalid data, 66 missing or unreadable file.
Verbosity comes from the TAXOPT_LOG environment variable.
"""

from __future__ import annotations

import json
import logging
import os
import sys

import click

from . import model as m
from . import scenarios
from .data.population import Population, load_population, save_population
from .data.report import write_frontier, write_report
from .data.synth import SyntheticPopulationConfig, generate_population
from .errors import TaxOptError, ValidationError
from .schemas import code_from_json, reform_from_json
from .solver import export_mps

EX_USAGE = 64
EX_DATA = 65
EX_NOINPUT = 66

log = logging.getLogger("taxopt")


def _read_json(path: str) -> dict:
    with open(path, "r") as handle:
        return json.load(handle)


def _load_code(path: str):
    return code_from_json(_read_json(path))


def _load_reform(path: str) -> m.ReformSpec:
    return reform_from_json(_read_json(path))


def _finish_solve(result: scenarios.ScenarioResult, out: str | None) -> int:
    if result.is_optimal:
        if out:
            paths = write_report(result, out)
            click.echo(f"report written to {paths['report']}")
        click.echo(f"status: optimal  objective={result.solution.objective:.6g}  "
                   f"revenue_loss={result.revenue_loss:.6g}")
        return 0
    if result.status == "infeasible":
        click.echo("status: infeasible")
        click.echo("conflicting guarantees:")
        for name in result.conflicts:
            click.echo(f"  - {name}")
        return 2
    click.echo(f"status: {result.status}")
    return 3


@click.group()
def cli():
    """Model piecewise-linear tax codes and solve reform recipes."""


@cli.command()
@click.option("--code", "code_path", required=True, type=str)
@click.option("--population", "population_path", required=True, type=str)
@click.option("--out", "out_dir", required=True, type=str)
def recover(code_path, population_path, out_dir):
    """Reproduce the current system from tight income guarantees."""
    code = _load_code(code_path)
    population = load_population(population_path)
    result = scenarios.recover(code, population)
    if result.diagnostics.get("rank_deficient"):
        click.echo(f"warning: coefficient matrix is rank deficient "
                   f"(rank {result.diagnostics['column_rank']})")
    sys.exit(_finish_solve(result, out_dir))


@cli.command()
@click.option("--spec", "spec_path", required=True, type=str)
@click.option("--code", "code_path", required=True, type=str)
@click.option("--population", "population_path", required=True, type=str)
@click.option("--out", "out_dir", required=True, type=str)
def reform(spec_path, code_path, population_path, out_dir):
    """Compile, solve and report one reform recipe."""
    spec = _load_reform(spec_path)
    code = _load_code(code_path)
    population = load_population(population_path)
    result = scenarios.solve_reform(spec, code, population)
    sys.exit(_finish_solve(result, out_dir))


@cli.command()
@click.option("--spec", "spec_path", required=True, type=str)
@click.option("--code", "code_path", required=True, type=str)
@click.option("--population", "population_path", required=True, type=str)
@click.option("--caps", required=True, type=str, help="comma-separated ascending caps")
@click.option("--out", "out_dir", required=True, type=str)
def sweep(spec_path, code_path, population_path, caps, out_dir):
    """Trace minimal revenue loss across marginal-pressure caps."""
    spec = _load_reform(spec_path)
    code = _load_code(code_path)
    population = load_population(population_path)
    try:
        cap_values = [float(c) for c in caps.split(",") if c.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad --caps value: {exc}")
    if not cap_values:
        raise click.UsageError("--caps needs at least one value")

    entries = scenarios.sweep_frontier(
        code, population, cap_values,
        spec_builder=scenarios.cap_sweep_builder(spec))
    path = write_frontier(entries, out_dir)
    for entry in entries:
        loss = "-" if entry.revenue_loss is None else f"{entry.revenue_loss:.6g}"
        click.echo(f"cap={entry.cap:g} status={entry.status} loss={loss}")
    click.echo(f"frontier written to {path}")
    sys.exit(0 if all(e.status == "optimal" for e in entries) else 3)


@cli.command()
@click.option("--population", "population_path", required=True, type=str)
def validate(population_path):
    """Schema and invariant audit of a population file."""
    population = load_population(population_path)
    click.echo(f"{len(population)} taxpayers, {population.num_households} households: ok")
    sys.exit(0)


@cli.command("export-mps")
@click.option("--spec", "spec_path", required=True, type=str)
@click.option("--code", "code_path", required=True, type=str)
@click.option("--population", "population_path", required=True, type=str)
@click.option("--out", "out_path", required=True, type=str)
def export_mps_command(spec_path, code_path, population_path, out_path):
    """Compile a recipe and emit MPS without solving."""
    spec = _load_reform(spec_path)
    code = _load_code(code_path)
    population = load_population(population_path)
    compiled = m.compile_reform(spec, code, population)
    export_mps(compiled.problem, out_path)
    click.echo(f"{compiled.problem.num_rows} rows, {compiled.problem.num_cols} "
               f"columns written to {out_path}")
    sys.exit(0)


@cli.command()
@click.option("--config", "config_path", required=True, type=str)
@click.option("--seed", required=True, type=int)
@click.option("--code", "code_path", default=None, type=str,
              help="tax-code document used to stamp current taxes")
@click.option("--out", "out_path", required=True, type=str)
def generate(config_path, seed, code_path, out_path):
    """Generate a synthetic population (deterministic per seed)."""
    doc = _read_json(config_path)
    doc["seed"] = seed
    config = SyntheticPopulationConfig.from_json(doc)
    code = _load_code(code_path) if code_path else None
    population = generate_population(config, code=code)
    save_population(population, out_path)
    click.echo(f"{len(population)} taxpayers written to {out_path}")
    sys.exit(0)


@cli.command()
@click.option("--name", "names", multiple=True,
              help="scenario names (default: all bundled scenarios)")
@click.option("--out", "out_dir", required=True, type=str)
def fixtures(names, out_dir):
    """Write bundled demo scenarios (code, population, reform) to disk."""
    from .fixtures import scenario_catalogue

    entries = scenario_catalogue(small=True)
    wanted = set(names) if names else {e["name"] for e in entries}
    unknown = wanted - {e["name"] for e in entries}
    if unknown:
        raise click.UsageError(f"unknown scenarios: {sorted(unknown)}")
    from .data.population import population_from_json

    for entry in entries:
        if entry["name"] not in wanted:
            continue
        base = os.path.join(out_dir, entry["name"])
        os.makedirs(base, exist_ok=True)
        with open(os.path.join(base, "code.json"), "w") as handle:
            json.dump(entry["code"], handle, indent=2)
        with open(os.path.join(base, "reform.json"), "w") as handle:
            json.dump(entry["reform"], handle, indent=2)
        save_population(population_from_json(entry["population"]),
                        os.path.join(base, "population.csv"))
        click.echo(f"wrote {entry['name']} to {base}")
    sys.exit(0)


@cli.command()
@click.option("--host", default="127.0.0.1", type=str)
@click.option("--port", default=8000, type=int)
@click.option("--workers", default=None, type=int,
              help="solver worker threads (default: machine parallelism)")
def serve(host, port, workers):
    """Run the JSON service for the browser workbench."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(max_workers=workers), host=host, port=port)


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("TAXOPT_LOG", "WARNING").upper())
    try:
        cli.main(args=argv, standalone_mode=False)
    except SystemExit as exc:
        return int(exc.code or 0)
    except click.UsageError as exc:
        click.echo(exc.format_message(), err=True)
        click.echo("run with --help for usage", err=True)
        return EX_USAGE
    except FileNotFoundError as exc:
        click.echo(f"cannot read {exc.filename}", err=True)
        return EX_NOINPUT
    except (ValidationError, json.JSONDecodeError) as exc:
        if isinstance(exc, ValidationError):
            for issue in exc.issues:
                click.echo(issue, err=True)
        else:
            click.echo(f"invalid JSON: {exc}", err=True)
        return EX_DATA
    except TaxOptError as exc:
        click.echo(str(exc), err=True)
        return EX_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
