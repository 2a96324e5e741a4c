"""
CLI interface for reflexcr scenarios
"""
from pathlib import Path
from typing import Optional
import json
import logging
import sys

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from reflexcr.config import settings
from reflexcr.exceptions import ScenarioError
from reflexcr.layers.eow import kernel_property_report
from reflexcr.schemas import RunReport, load_scenario, parse_scenario
from reflexcr.tasks import EXIT_CONFIG, run_scenario

console = Console()
logger = logging.getLogger(__name__)


@click.group()
@click.option("--log-level", default=None, help="Logging level (defaults to REFLEXCR_LOG_LEVEL)")
def cli(log_level: Optional[str]):
    """reflexcr - Schwarz reflection, edge-of-the-wedge and CR extension"""
    level = (log_level or settings.log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def scenario_options(command):
    """--scenario, --out and the per-run overrides shared by every subcommand"""
    options = [
        click.option("--scenario", "scenario_path", required=True, type=click.Path(path_type=Path), help="Scenario JSON file"),
        click.option("--out", "out_dir", default="out", type=click.Path(path_type=Path), help="Output directory"),
        click.option("--nodes", type=int, help="Quadrature nodes"),
        click.option("--seed", type=int, help="Random seed for sampled grids"),
        click.option("--tol", type=float, help="Tolerance on the maximum absolute error"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def show_report(report: RunReport) -> None:
    colour = "green" if report.status == "PASS" else "red"
    lines = [
        f"[{colour}]{report.status}[/{colour}]",
        f"Kind: {report.kind}",
        f"Stages: {', '.join(report.stages) or 'none'}",
    ]
    if report.failed_stage:
        lines.append(f"[red]Failed stage: {report.failed_stage}: {report.error}[/red]")
    if report.outputs:
        lines.append(f"Outputs: {', '.join(report.outputs)}")
    console.print(Panel("\n".join(lines), title=report.scenario.get("name", "scenario")))

    if report.checks:
        table = Table(title="Checks")
        table.add_column("Check")
        table.add_column("Value")
        table.add_column("Limit")
        table.add_column("Result")
        for name, check in report.checks.items():
            value = "n/a" if check.value is None else f"{check.value:.3e}"
            result = "[green]ok[/green]" if check.passed else "[red]fail[/red]"
            table.add_row(name, value, f"{check.limit:.3e}", result)
        console.print(table)

    if report.timings:
        table = Table(title="Timings")
        table.add_column("Stage")
        table.add_column("Seconds")
        for stage, seconds in report.timings.items():
            table.add_row(stage, f"{seconds:.3f}")
        console.print(table)


def execute(kind: Optional[str], scenario_path: Path, out_dir: Path, nodes, seed, tol) -> None:
    """Load, override, run and exit with 0 (PASS), 1 (FAIL) or 2 (configuration error)"""
    try:
        scenario = load_scenario(scenario_path)
        if kind is not None and scenario.kind != kind:
            raise ScenarioError(f"scenario kind '{scenario.kind}' cannot run under '{kind}'", field="kind")
        overrides = {
            key: value
            for key, value in (("nodes", nodes), ("seed", seed), ("tolerance", tol))
            if value is not None
        }
        if overrides:
            scenario = parse_scenario(json.dumps({**scenario.model_dump(mode="json"), **overrides}))
        report = run_scenario(scenario, out_dir)
    except ScenarioError as e:
        console.print(f"[red]Error: {e}[/red]")
        sys.exit(EXIT_CONFIG)
    show_report(report)
    sys.exit(report.exit_code)


@cli.command()
@scenario_options
def reflect(scenario_path, out_dir, nodes, seed, tol):
    """Reflect f across the real axis using its imaginary trace"""
    execute("reflect", scenario_path, out_dir, nodes, seed, tol)


@cli.command()
@scenario_options
def harmonic(scenario_path, out_dir, nodes, seed, tol):
    """Extend a harmonic function across the real axis"""
    execute("harmonic", scenario_path, out_dir, nodes, seed, tol)


@cli.command()
@scenario_options
def curve(scenario_path, out_dir, nodes, seed, tol):
    """Reflect across a real-analytic curve through 0"""
    execute("curve", scenario_path, out_dir, nodes, seed, tol)


@cli.command()
@scenario_options
def eow(scenario_path, out_dir, nodes, seed, tol):
    """Edge-of-the-wedge extension by circular averaging"""
    execute("eow", scenario_path, out_dir, nodes, seed, tol)


@cli.command()
@scenario_options
def crextend(scenario_path, out_dir, nodes, seed, tol):
    """Extend a wedge function with a real-analytic imaginary trace"""
    execute("crextend", scenario_path, out_dir, nodes, seed, tol)


@cli.command()
@scenario_options
def verify(scenario_path, out_dir, nodes, seed, tol):
    """Check that the extended chart maps the chart wedge into the wedge"""
    execute("verify", scenario_path, out_dir, nodes, seed, tol)


@cli.command()
@scenario_options
def run(scenario_path, out_dir, nodes, seed, tol):
    """Run a scenario of any kind"""
    execute(None, scenario_path, out_dir, nodes, seed, tol)


@cli.command()
@click.option("--samples", default=100_000, type=int, help="Number of sampled kernel arguments")
@click.option("--seed", default=0, type=int, help="Random seed")
def kernel(samples: int, seed: int):
    """Sampled sign, identity and modulus checks of the Möbius kernel"""
    report = kernel_property_report(samples, seed)
    table = Table(title="Möbius kernel")
    table.add_column("Property")
    table.add_column("Value")
    for name, value in report.summary().items():
        table.add_row(name, str(value))
    console.print(table)
    sys.exit(0 if report.passed else 1)


if __name__ == "__main__":
    cli()
