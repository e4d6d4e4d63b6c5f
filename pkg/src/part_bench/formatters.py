"""Output formatting for benchmark results using Rich library."""

from collections.abc import Sequence

from rich import box
from rich.table import Table
from rich.text import Text

from part_bench.models import MetricsReport, PartitionedDataset, Provenance, QueryRunReport, RunMode, Term


def format_ms(ms: float) -> str:
    """
    Format a duration for display.

    Args:
        ms: Duration in milliseconds

    Returns:
        "850.2 ms" below one second, "12.40 s" above
    """
    if ms < 1000:
        return f"{ms:.1f} ms"
    return f"{ms / 1000:.2f} s"


def get_status_icon(ok: bool) -> Text:
    if ok:
        return Text("✓ PASS", style="green bold")
    return Text("✗ FAIL", style="red bold")


def format_mode(report: QueryRunReport) -> str:
    """Colored run mode; forced local runs are flagged."""
    if report.mode is RunMode.LOCAL:
        return "[yellow]local (forced)[/yellow]" if report.forced else "[green]local[/green]"
    return "[magenta]distributed[/magenta]"


def _new_table() -> Table:
    return Table(box=box.ROUNDED, show_header=True, header_style="bold cyan")


def create_metrics_table(reports: Sequence[MetricsReport]) -> Table:
    """
    Create a Rich table with one row per (strategy, k) run.

    Args:
        reports: Metrics of each run

    Returns:
        Rich Table object
    """
    table = _new_table()
    table.add_column("Strategy", style="cyan")
    table.add_column("k", justify="right")
    table.add_column("Prep time", justify="right", style="yellow")
    table.add_column("Size std-dev", justify="right")
    table.add_column("Replication", justify="right", style="magenta")
    table.add_column("Edge cut", justify="right", style="dim")

    for report in reports:
        stages = ", ".join(f"{stage} {rate:.3f}" for stage, rate in report.replication_by_stage.items())
        replication = f"{report.replication_rate:.3f}" + (f" ({stages})" if stages else "")
        table.add_row(
            report.strategy,
            str(report.k),
            format_ms(report.total_prep_ms),
            f"{report.size_stddev:.1f}",
            replication,
            "N/A" if report.edge_cut is None else str(report.edge_cut),
        )
    return table


def create_query_table(reports: Sequence[QueryRunReport]) -> Table:
    table = _new_table()
    table.add_column("Strategy", style="cyan")
    table.add_column("k", justify="right")
    table.add_column("Query", style="bold")
    table.add_column("Mode")
    table.add_column("Results", justify="right")
    table.add_column("Exchanged", justify="right", style="magenta")
    table.add_column("Bytes", justify="right", style="dim")
    table.add_column("Time", justify="right", style="yellow")

    for report in reports:
        table.add_row(
            report.strategy,
            str(report.k),
            report.query_id,
            format_mode(report),
            str(report.result_count),
            str(report.shuffle.tuples_exchanged),
            str(report.shuffle.bytes_estimated),
            format_ms(report.time_ms),
        )
    return table


def create_partition_table(dataset: PartitionedDataset) -> Table:
    """Per-partition quad counts split by provenance."""
    table = _new_table()
    table.add_column("Partition", style="cyan", justify="right")
    table.add_column("Quads", justify="right")
    table.add_column("Originals", justify="right", style="green")
    table.add_column("Replicas", justify="right", style="magenta")

    for partition in range(dataset.k):
        entries = dataset.partition(partition)
        originals = sum(1 for provenance in entries.values() if provenance is Provenance.ORIGINAL)
        table.add_row(str(partition), str(len(entries)), str(originals), str(len(entries) - originals))
    return table


def create_checks_table(checks: Sequence) -> Table:
    table = _new_table()
    table.add_column("Check", style="cyan")
    table.add_column("Status")
    table.add_column("Detail", style="dim")
    for check in checks:
        table.add_row(check.name, get_status_icon(check.ok), Text(check.detail))
    return table


def create_results_table(variables: Sequence[str], rows: Sequence[tuple[Term, ...]]) -> Table:
    """Decoded query results, one column per projected variable."""
    table = _new_table()
    for name in variables:
        table.add_column(f"?{name}")
    for row in rows:
        table.add_row(*(Text(term.to_ntriples()) for term in row))
    return table
