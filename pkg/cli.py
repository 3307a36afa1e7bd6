"""
Command-line interface for the Gelfand-Dickey hierarchy engine
"""
import sys
from typing import Optional

import click
from rich.console import Console
from rich.table import Table
from rich.progress import Progress, SpinnerColumn, TextColumn

from config import apply_settings, load_settings, settings
from database import Database
from exceptions import ConfigurationError
from logger import LEVELS, set_global_level, setup_logger
from pipeline import run_manager

logger = setup_logger(__name__)
console = Console()

EXIT_FAILED = 1
EXIT_CONFIG = 3


def _config_error(error: ConfigurationError) -> None:
    console.print(f"\n[bold red]✗[/bold red] Configuration error: {error}")
    sys.exit(EXIT_CONFIG)


def _spinner() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        console=console,
        transient=True
    )


@click.group()
@click.version_option(version="1.0.0")
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False),
              help='KEY=value file overriding environment settings')
@click.option('--log-level', type=click.Choice(LEVELS, case_sensitive=False),
              help='Override LOG_LEVEL for this invocation')
def cli(config_file: Optional[str], log_level: Optional[str]):
    """Gelfand-Dickey hierarchy engine - CLI Tool"""
    if config_file:
        url = settings.database_url
        apply_settings(load_settings(config_file))
        if settings.database_url != url:
            run_manager.db = Database()
        set_global_level(settings.log_level)
    if log_level:
        set_global_level(log_level)
    # Initialize run ledger
    run_manager.db.create_tables()


@cli.command()
@click.option('--r', 'r', type=int, help='Order of the Lax operator (r >= 2)')
@click.option('--times', type=int, help='Highest time N (N >= r+1)')
@click.option('--degree', type=int, help='Degree cap D in T_2..T_N (D >= 3)')
@click.option('--genus-max', type=int, help='Highest genus stratum of phi')
@click.option('--depth', type=int, help='Retained negative d/dx orders')
@click.option('--eps-cap', type=int, help='Highest eps stratum of L')
@click.option('--out', type=click.Path(dir_okay=False), help='State file to write')
@click.option('--fresh', is_flag=True, help='Ignore a stored state at --out')
def solve(r, times, degree, genus_max, depth, eps_cap, out, fresh):
    """Solve the hierarchy and the wave function"""
    r = settings.r if r is None else r
    times = settings.times if times is None else times
    degree = settings.degree if degree is None else degree
    genus_max = settings.genus_max if genus_max is None else genus_max
    eps_cap = settings.eps_cap if eps_cap is None else eps_cap
    depth = settings.depth if depth is None else depth

    console.print(f"\n[bold cyan]Solving:[/bold cyan] r={r}, N={times}, D={degree}, G={genus_max}")
    try:
        with _spinner() as progress:
            task = progress.add_task("Integrating flows...", total=None)
            result = run_manager.solve(
                r=r, times=times, degree=degree, genus_max=genus_max,
                depth=depth, eps_cap=eps_cap, out=out, resume=not fresh,
            )
            progress.update(task, completed=True)
    except ConfigurationError as e:
        _config_error(e)

    if not result["success"]:
        console.print(f"\n[bold red]✗[/bold red] Solve failed: {result.get('error', 'Unknown error')}")
        sys.exit(EXIT_FAILED)

    summary = result["summary"]
    console.print(f"\n[bold green]✓[/bold green] State written to {result['path']}")
    for name, count in summary["coefficient_terms"].items():
        console.print(f"  • {name}: {count} terms")
    console.print(f"  • phi: {summary['phi_terms']} terms")
    if summary["resumed_from"] is not None:
        console.print(f"  • Resumed from degree {summary['resumed_from']}")


@cli.command()
@click.option('--state', 'state_path', type=click.Path(dir_okay=False), help='State file to read')
@click.option('--flavor', type=click.Choice(['closed', 'extended', 'open', 'conjectural']),
              help='Potential to export')
@click.option('--genus', type=int, help='Genus of the table')
@click.option('--out', type=click.Path(dir_okay=False), help='JSON file to write')
@click.option('--csv', 'csv_path', type=click.Path(dir_okay=False), help='Also write a CSV file')
@click.option('--show', default=20, help='Number of entries to print')
def numbers(state_path, flavor, genus, out, csv_path, show):
    """Export a correlator table"""
    try:
        result = run_manager.numbers(state_path, flavor, genus, out, csv_path)
    except ConfigurationError as e:
        _config_error(e)

    if not result["success"]:
        console.print(f"\n[bold red]✗[/bold red] Export failed: {result.get('error', 'Unknown error')}")
        sys.exit(EXIT_FAILED)

    table_data = result["table"]
    title = f"\n{table_data.flavor.capitalize()} correlators, r={table_data.r}, genus {table_data.genus}"
    if table_data.conjectural:
        title += " (conjectural)"
    table = Table(title=title, show_header=True, header_style="bold cyan")
    table.add_column("Insertions")
    table.add_column("k", justify="right")
    table.add_column("Value", style="green", justify="right")
    for entry in table_data.entries[:show]:
        table.add_row(entry.label(), str(entry.k), str(entry.value))
    console.print(table)
    console.print(f"\n[bold green]✓[/bold green] {len(table_data.entries)} entries written to {', '.join(result['paths'])}")


@cli.command()
@click.option('--state', 'state_path', type=click.Path(dir_okay=False), help='State file to read')
@click.option('--checks', help='Comma-separated checks to run')
@click.option('--report', 'report_path', type=click.Path(dir_okay=False), help='JSON report to write')
def verify(state_path, checks, report_path):
    """Verify a solved state"""
    names = [c.strip() for c in checks.split(",") if c.strip()] if checks else None
    try:
        with _spinner() as progress:
            task = progress.add_task("Running checks...", total=None)
            result = run_manager.verify(state_path, names, report_path)
            progress.update(task, completed=True)
    except ConfigurationError as e:
        _config_error(e)

    table = Table(title="\nChecks", show_header=True, header_style="bold cyan")
    table.add_column("Check")
    table.add_column("Params", style="dim")
    table.add_column("Status")
    table.add_column("ms", justify="right")
    table.add_column("Note")
    styles = {"pass": "green", "fail": "red", "skipped": "yellow"}
    for report in result["reports"]:
        style = styles.get(report.status, "white")
        params = ", ".join(f"{k}={v}" for k, v in report.params.items())
        table.add_row(report.check, params, f"[{style}]{report.status}[/{style}]", str(report.millis), report.note)
    console.print(table)

    for report in result["reports"]:
        if report.status == "fail" and report.residual_monomials:
            console.print(f"\n[bold red]{report.check}[/bold red] residuals:")
            for line in report.residual_monomials:
                console.print(f"  • {line}")

    if result["success"]:
        console.print("\n[bold green]✓[/bold green] All checks passed")
    else:
        console.print(f"\n[bold red]✗[/bold red] Failed: {', '.join(sorted(set(result['failed'])))}")
        sys.exit(EXIT_FAILED)


@cli.command()
@click.option('--limit', default=20, help='Number of runs to show')
@click.option('--command', 'command_name', type=click.Choice(['solve', 'numbers', 'verify']),
              help='Filter by command')
def history(limit: int, command_name: Optional[str]):
    """Show recent runs"""
    runs = run_manager.history(limit=limit, command=command_name)
    if not runs:
        console.print("\n[yellow]No runs recorded[/yellow]")
        return

    table = Table(title="\nRun History", show_header=True, header_style="bold cyan")
    table.add_column("ID", style="dim")
    table.add_column("Command")
    table.add_column("Status")
    table.add_column("r", justify="right")
    table.add_column("N", justify="right")
    table.add_column("D", justify="right")
    table.add_column("Duration", justify="right")
    table.add_column("Started")
    for run in runs:
        style = "green" if run["status"] == "success" else "red"
        duration = f"{run['duration_ms']} ms" if run["duration_ms"] is not None else "-"
        table.add_row(
            str(run["id"]),
            run["command"],
            f"[{style}]{run['status']}[/{style}]",
            *(str(run[k]) if run[k] is not None else "-" for k in ("r", "times", "degree")),
            duration,
            run["started_at"].strftime("%Y-%m-%d %H:%M"),
        )
    console.print(table)

    stats = run_manager.db.get_stats()
    console.print(f"\n  • Runs: {stats['total_runs']} ({stats['failed_runs']} failed)")
    console.print(f"  • Check results: {stats['total_checks']} ({stats['failed_checks']} failed)")


if __name__ == '__main__':
    cli()
