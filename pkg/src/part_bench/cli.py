#!/usr/bin/env python3
"""CLI commands for the RDF partitioning workbench."""

import logging
from pathlib import Path

import typer
from rich.console import Console
from rich.logging import RichHandler

from part_bench import VERSION
from part_bench.bench import (
    BenchConfig,
    load_input,
    locality_hops,
    partition_dir,
    run_benchmark,
    verify_dataset,
)
from part_bench.config import (
    DEFAULT_EPSILON,
    DEFAULT_HOP_COUNT,
    DEFAULT_HYBRID_PREHOP,
    DEFAULT_SEED,
    DEFAULT_UNIVERSITIES,
    DEFAULT_WARP_HOPS,
    ENCODED_DIR,
    GRAPH_FILE,
    PARTITION_MAP_FILE,
    get_default_out_dir,
    load_config_file,
)
from part_bench.engine import SimulatedCluster
from part_bench.errors import (
    BenchLockedError,
    ConfigError,
    CorruptFileError,
    MalformedLineError,
    MetisFormatError,
    PartBenchError,
    QuerySyntaxError,
    UnsupportedPatternError,
)
from part_bench.formatters import (
    create_checks_table,
    create_metrics_table,
    create_partition_table,
    create_query_table,
    create_results_table,
    format_ms,
)
from part_bench.generator import GeneratorSpec, generate_random, generate_synthetic
from part_bench.graph_prep import (
    edge_cut,
    read_metis_graph,
    read_metis_partition,
    to_undirected,
    write_metis,
    write_partition,
)
from part_bench.metrics import replication_rate
from part_bench.models import RunMode, Strategy, StrategyConfig
from part_bench.partitioner import allocate_by_hash, allocate_by_subject, multilevel_partition
from part_bench.query import classify_locality, evaluate_global, load_prefixes, load_queries
from part_bench.rdf_io import ErrorPolicy, decode_rows, load_ntriples, save_encoded
from part_bench.replication import load_partitions, nhop_expand, save_partitions, warp_refine

app = typer.Typer(help="RDF partitioning workbench")
console = Console()


def parse_comma_separated(values: list[str] | None) -> list[str] | None:
    """
    Parse comma-separated values from CLI options.
    Supports both --k=4,8 and --k=4 --k=8

    Args:
        values: List of values that may contain comma-separated items

    Returns:
        Flattened list of values or None if empty
    """
    if not values:
        return None

    result = []
    for value in values:
        result.extend([v.strip() for v in value.split(",") if v.strip()])

    return result if result else None


def handle_error(error: PartBenchError) -> None:
    """
    Print a workbench error with a hint and exit with code 1.

    Args:
        error: PartBenchError exception
    """
    console.print(f"[red]Error:[/red] {error.message}", style="bold")

    if isinstance(error, CorruptFileError):
        console.print("Re-run 'partbench encode' (and 'partbench partition') to rebuild the stored files")
    elif isinstance(error, MetisFormatError):
        console.print("Check that the partition file was produced for this graph and number of partitions")
    elif isinstance(error, QuerySyntaxError) and error.position is not None:
        console.print(f"Syntax error at character {error.position}")
    elif isinstance(error, UnsupportedPatternError):
        console.print("Workload queries need constant predicates and connected patterns")
    elif isinstance(error, MalformedLineError):
        console.print("Use --skip-malformed to skip bad lines")
    elif isinstance(error, ConfigError):
        console.print("Check the configuration file keys and values")
    elif isinstance(error, BenchLockedError):
        console.print("Wait for the running benchmark or choose another --out-dir")

    raise typer.Exit(code=1)


def setup_logging(verbose: bool) -> None:
    """Route part_bench logging through a single RichHandler on stderr."""
    logger = logging.getLogger("part_bench")
    logger.handlers.clear()
    logger.addHandler(RichHandler(console=Console(stderr=True), show_path=False))
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    logger.propagate = False


def _out_dir(out_dir: Path | None) -> Path:
    return out_dir if out_dir is not None else get_default_out_dir()


@app.command()
def generate(
    output: Path = typer.Argument(..., help="N-Triples file to write (.gz for gzip)"),
    universities: int = typer.Option(DEFAULT_UNIVERSITIES, "--universities", "-u", help="Number of universities"),
    hub_fraction: float = typer.Option(
        0.0, "--hub-fraction", help="Share of triples given to one hub subject (skew studies)"
    ),
    random_size: int | None = typer.Option(
        None, "--random", help="Generate a Wikidata-like random graph with this many triples instead"
    ),
    seed: int = typer.Option(DEFAULT_SEED, "--seed", help="Random seed"),
):
    """
    Generate a synthetic dataset.

    Use --help for all options.
    """
    try:
        if random_size is not None:
            count = generate_random(random_size, output, seed)
        else:
            count = generate_synthetic(GeneratorSpec(universities, seed, hub_fraction), output)
    except PartBenchError as e:
        handle_error(e)

    console.print(f"[green]✓ Wrote {count} triples to[/green] [cyan]{output}[/cyan]")


@app.command(name="encode")
def encode_cmd(
    input_path: Path = typer.Argument(..., help="N-Triples file (plain or gzip)"),
    out_dir: Path | None = typer.Option(None, "--out-dir", "-o", help="Output directory"),
    skip_malformed: bool = typer.Option(False, "--skip-malformed", help="Skip malformed lines instead of aborting"),
):
    """
    Parse and dictionary-encode an N-Triples file.

    Use --help for all options.
    """
    out = _out_dir(out_dir)
    policy = ErrorPolicy.SKIP if skip_malformed else ErrorPolicy.ABORT
    try:
        triples, dictionaries, stats = load_ntriples(input_path, on_error=policy)
        save_encoded(triples, dictionaries, out / ENCODED_DIR)
    except PartBenchError as e:
        handle_error(e)
    except OSError as e:
        console.print(f"[red]Error:[/red] Cannot read '{input_path}': {e.strerror}", style="bold")
        raise typer.Exit(code=1)

    console.print(f"\n[bold]Encoded:[/bold] [cyan]{input_path}[/cyan]")
    console.print(f"[dim]Triples: {len(triples)} ({len(set(triples))} distinct)[/dim]")
    console.print(f"[dim]Nodes: {len(dictionaries.nodes)}, predicates: {len(dictionaries.predicates)}[/dim]")
    if stats.skipped:
        console.print(f"[yellow]Skipped {stats.skipped} malformed line(s)[/yellow]")
        for error in stats.errors:
            console.print(f"  [dim]{error.message}[/dim]")
    console.print(f"[green]✓ Saved to[/green] [cyan]{out / ENCODED_DIR}[/cyan]\n")


@app.command(name="prep-graph")
def prep_graph(
    out_dir: Path | None = typer.Option(None, "--out-dir", "-o", help="Output directory holding the encoded dataset"),
):
    """
    Build the undirected graph of the encoded dataset and write it in Metis format.

    Use --help for all options.
    """
    out = _out_dir(out_dir)
    try:
        data = load_input(out)
        graph = to_undirected(data.triples, data.num_nodes)
    except PartBenchError as e:
        handle_error(e)

    write_metis(graph, out / GRAPH_FILE)
    console.print(f"[green]✓ Graph with {graph.n} vertices and {graph.m} edges written to[/green] {out / GRAPH_FILE}")


@app.command()
def partition(
    strategy: Strategy = typer.Option(Strategy.SUBJECT_HASH, "--strategy", "-s", help="Distribution strategy"),
    k: int = typer.Option(4, "--k", "-k", help="Number of partitions"),
    seed: int = typer.Option(DEFAULT_SEED, "--seed", help="Hash / partitioner seed"),
    epsilon: float = typer.Option(DEFAULT_EPSILON, "--epsilon", help="Balance tolerance of the graph partitioner"),
    metis_partition_file: Path | None = typer.Option(
        None, "--metis-partition-file", help="Use an external Metis partition instead of the internal partitioner"
    ),
    out_dir: Path | None = typer.Option(None, "--out-dir", "-o", help="Output directory"),
):
    """
    Allocate every triple, as Original, to a partition.

    Graph-based strategies partition the vertex graph first; replication is a separate step.
    """
    out = _out_dir(out_dir)
    cut = None
    try:
        data = load_input(out)
        config = StrategyConfig(k=k, seed=seed, epsilon=epsilon, strategy=strategy)
        if strategy.is_graph_based:
            graph_path = out / GRAPH_FILE
            if graph_path.is_file():
                graph = read_metis_graph(graph_path)
            else:
                graph = to_undirected(data.triples, data.num_nodes)
            if metis_partition_file is not None:
                partition_map = read_metis_partition(metis_partition_file, k, graph.n)
            else:
                partition_map = multilevel_partition(graph, config)
            write_partition(partition_map, out / PARTITION_MAP_FILE)
            dataset = allocate_by_subject(data.triples, partition_map)
            cut = edge_cut(graph, partition_map)
        else:
            dataset = allocate_by_hash(data.triples, config, by_subject=strategy is not Strategy.RANDOM_HASH)
        directory = save_partitions(dataset, partition_dir(out, strategy, k), strategy)
    except PartBenchError as e:
        handle_error(e)

    console.print(f"\n[bold]Partitioned with[/bold] [cyan]{strategy}[/cyan] [dim](k={k})[/dim]")
    if cut is not None:
        console.print(f"[dim]Edge cut: {cut}[/dim]")
    console.print(create_partition_table(dataset))
    console.print(f"[green]✓ Saved to[/green] [cyan]{directory}[/cyan]\n")


@app.command()
def replicate(
    strategy: Strategy = typer.Option(Strategy.GRAPH_NHOP, "--strategy", "-s", help="Distribution strategy"),
    k: int = typer.Option(4, "--k", "-k", help="Number of partitions"),
    n_hop: int = typer.Option(DEFAULT_HOP_COUNT, "--n-hop", "-n", help="Hop guarantee for graph-nhop"),
    hybrid_prehop: int = typer.Option(
        DEFAULT_HYBRID_PREHOP, "--hybrid-prehop", help="n-hop stage before hybrid refinement (1 = none)"
    ),
    workload: str | None = typer.Option(
        None, "--workload", "-w", help="Workload .rq file, directory or corpus names (default q1,q2_corrected,q3,q4)"
    ),
    prefixes: Path | None = typer.Option(None, "--prefixes", help="Prefix table (prefix<TAB>iri)"),
    out_dir: Path | None = typer.Option(None, "--out-dir", "-o", help="Output directory"),
):
    """
    Add the replicas a strategy calls for to a partitioned dataset.

    Use --help for all options.
    """
    out = _out_dir(out_dir)
    if strategy not in (Strategy.GRAPH_NHOP, Strategy.WARP, Strategy.HYBRID):
        console.print(f"[yellow]{strategy} does not replicate triples; nothing to do[/yellow]")
        raise typer.Exit(code=0)

    try:
        data = load_input(out)
        directory = partition_dir(out, strategy, k)
        dataset = load_partitions(directory)
        if strategy is Strategy.GRAPH_NHOP:
            dataset = nhop_expand(dataset, data.triples, n_hop)
        else:
            queries = load_queries(workload, load_prefixes(prefixes), data.dictionaries)
            hops = DEFAULT_WARP_HOPS if strategy is Strategy.WARP else hybrid_prehop
            if hops > 1:
                dataset = nhop_expand(dataset, data.triples, hops)
            dataset = warp_refine(dataset, queries)
        save_partitions(dataset, directory, strategy)
    except PartBenchError as e:
        handle_error(e)

    console.print(f"\n[bold]Replicated[/bold] [cyan]{strategy}[/cyan] [dim](k={k})[/dim]")
    console.print(f"[dim]Replication rate: {replication_rate(dataset):.3f}[/dim]")
    console.print(create_partition_table(dataset))
    console.print()


@app.command()
def query(
    sources: list[str] = typer.Argument(..., help="Query files, directories or corpus names (e.g. q1)"),
    strategy: Strategy = typer.Option(Strategy.SUBJECT_HASH, "--strategy", "-s", help="Distribution strategy"),
    k: int = typer.Option(4, "--k", "-k", help="Number of partitions"),
    mode: str = typer.Option("auto", "--mode", "-m", help="auto, local or distributed"),
    n_hop: int = typer.Option(DEFAULT_HOP_COUNT, "--n-hop", "-n", help="Hop guarantee of graph-nhop data"),
    hybrid_prehop: int = typer.Option(DEFAULT_HYBRID_PREHOP, "--hybrid-prehop", help="Pre-hop used for hybrid data"),
    workload: str | None = typer.Option(None, "--workload", "-w", help="Workload the warp/hybrid data was built for"),
    prefixes: Path | None = typer.Option(None, "--prefixes", help="Prefix table (prefix<TAB>iri)"),
    seed: int = typer.Option(DEFAULT_SEED, "--seed", help="Shuffle hash seed"),
    limit: int = typer.Option(10, "--limit", "-l", help="Result rows to display"),
    oracle: bool = typer.Option(False, "--oracle", help="Compare against global evaluation"),
    out_dir: Path | None = typer.Option(None, "--out-dir", "-o", help="Output directory"),
):
    """
    Evaluate queries against a partitioned dataset on the simulated cluster.

    Use --help for all options.
    """
    if mode not in ("auto", "local", "distributed"):
        console.print(f"[red]Error:[/red] Unknown mode '{mode}'", style="bold")
        console.print("Valid modes: auto, local, distributed")
        raise typer.Exit(code=1)

    out = _out_dir(out_dir)
    reports = []
    try:
        data = load_input(out)
        dataset = load_partitions(partition_dir(out, strategy, k))
        prefix_table = load_prefixes(prefixes)
        workload_queries = load_queries(workload, prefix_table, data.dictionaries) if strategy.is_workload_aware else []
        hops = locality_hops(strategy, n_hop, hybrid_prehop)
        cluster = SimulatedCluster(dataset, seed=seed)

        for source in sources:
            for parsed in load_queries(source, prefix_table, data.dictionaries):
                classified = classify_locality(parsed, strategy, hops, workload_queries)
                run_mode = classified if mode == "auto" else RunMode(mode)
                forced = run_mode is RunMode.LOCAL and classified is not RunMode.LOCAL
                outcome = cluster.evaluate(parsed, run_mode, forced=forced)
                outcome.report.strategy = str(strategy)
                reports.append(outcome.report)

                console.print(f"\n[bold]{parsed.name}[/bold] [dim]{parsed}[/dim]")
                shown = decode_rows(
                    sorted(outcome.results)[:limit], parsed.projection, data.dictionaries, parsed.predicate_variables
                )
                if shown:
                    console.print(create_results_table(parsed.projection, shown))
                console.print(f"[dim]{len(outcome.results)} result(s) in {format_ms(outcome.report.time_ms)}[/dim]")
                if oracle:
                    expected = evaluate_global(parsed, data.triples)
                    if expected == outcome.results:
                        console.print("[green]✓ Matches global evaluation[/green]")
                    else:
                        console.print(f"[red]✗ Differs from global evaluation ({len(expected)} expected)[/red]")
    except PartBenchError as e:
        handle_error(e)

    console.print()
    console.print(create_query_table(reports))
    console.print()


@app.command()
def verify(
    strategy: Strategy = typer.Option(Strategy.SUBJECT_HASH, "--strategy", "-s", help="Distribution strategy"),
    k: int = typer.Option(4, "--k", "-k", help="Number of partitions"),
    n_hop: int = typer.Option(DEFAULT_HOP_COUNT, "--n-hop", "-n", help="Hop guarantee of graph-nhop data"),
    hybrid_prehop: int = typer.Option(DEFAULT_HYBRID_PREHOP, "--hybrid-prehop", help="Pre-hop used for hybrid data"),
    workload: str | None = typer.Option(None, "--workload", "-w", help="Workload the warp/hybrid data was built for"),
    prefixes: Path | None = typer.Option(None, "--prefixes", help="Prefix table (prefix<TAB>iri)"),
    out_dir: Path | None = typer.Option(None, "--out-dir", "-o", help="Output directory"),
):
    """
    Check provenance, the n-hop guarantee and workload locality of a partitioned dataset.

    Exits with code 1 if any check fails.
    """
    out = _out_dir(out_dir)
    try:
        data = load_input(out)
        dataset = load_partitions(partition_dir(out, strategy, k))
        queries = load_queries(workload, load_prefixes(prefixes), data.dictionaries)
        hops = locality_hops(strategy, n_hop, hybrid_prehop)
        if strategy.is_workload_aware:
            checks = verify_dataset(dataset, data.triples, strategy, hops, queries)
        else:
            checks = verify_dataset(dataset, data.triples, strategy, hops)
    except PartBenchError as e:
        handle_error(e)

    console.print(f"\n[bold]Verification of[/bold] [cyan]{strategy}[/cyan] [dim](k={k})[/dim]")
    console.print(create_checks_table(checks))
    failed = [check for check in checks if not check.ok]
    if failed:
        console.print(f"[red]{len(failed)} check(s) failed[/red]\n")
        raise typer.Exit(code=1)
    console.print("[green]✓ All checks passed[/green]\n")


@app.command()
def bench(
    config_file: Path | None = typer.Option(None, "--config", "-c", help="key=value benchmark config file"),
    dataset: Path | None = typer.Option(None, "--dataset", "-d", help="N-Triples file or encoded directory"),
    universities: int | None = typer.Option(None, "--universities", "-u", help="Generator size when no dataset"),
    hub_fraction: float | None = typer.Option(None, "--hub-fraction", help="Generator hub subject share"),
    strategy: list[str] | None = typer.Option(None, "--strategy", "-s", help="Strategies, comma-separated"),
    k: list[str] | None = typer.Option(None, "--k", "-k", help="Partition counts (comma-separated or repeated)"),
    n_hop: int | None = typer.Option(None, "--n-hop", "-n", help="Hop guarantee for graph-nhop"),
    hybrid_prehop: int | None = typer.Option(None, "--hybrid-prehop", help="n-hop stage before hybrid refinement"),
    workload: str | None = typer.Option(None, "--workload", "-w", help="Workload file, directory or corpus names"),
    prefixes: Path | None = typer.Option(None, "--prefixes", help="Prefix table (prefix<TAB>iri)"),
    seed: int | None = typer.Option(None, "--seed", help="Random seed"),
    epsilon: float | None = typer.Option(None, "--epsilon", help="Balance tolerance of the graph partitioner"),
    repetitions: int | None = typer.Option(None, "--repetitions", "-r", help="Runs per query (median reported)"),
    metis_partition_file: Path | None = typer.Option(None, "--metis-partition-file", help="External Metis partition"),
    workers: int | None = typer.Option(None, "--workers", help="Per-partition worker pool size"),
    out_dir: Path | None = typer.Option(None, "--out-dir", "-o", help="Output directory for reports"),
):
    """
    Run the full benchmark sweep and write CSV/JSON/TSV reports.

    Flags override values from --config.
    """
    strategies = parse_comma_separated(strategy)
    k_values = parse_comma_separated(k)
    overrides = {
        "dataset": dataset,
        "universities": universities,
        "hub_fraction": hub_fraction,
        "strategies": ",".join(strategies) if strategies else None,
        "k": ",".join(k_values) if k_values else None,
        "n_hop": n_hop,
        "hybrid_prehop": hybrid_prehop,
        "workload": workload,
        "prefixes": prefixes,
        "seed": seed,
        "epsilon": epsilon,
        "repetitions": repetitions,
        "metis_partition_file": metis_partition_file,
        "workers": workers,
        "out_dir": out_dir,
    }

    try:
        values = load_config_file(config_file) if config_file else {}
        values.update({key: str(value) for key, value in overrides.items() if value is not None})
        config = BenchConfig.from_mapping(values)
        reports = run_benchmark(config)
    except PartBenchError as e:
        handle_error(e)

    console.print(f"\n[bold]Benchmark results[/bold] [dim]({len(reports)} run(s))[/dim]")
    console.print(create_metrics_table(reports))
    query_reports = [q for report in reports for q in report.queries]
    if query_reports:
        console.print(create_query_table(query_reports))
    console.print(f"[green]✓ Reports written to[/green] [cyan]{config.out_dir}[/cyan]\n")


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    version: bool = typer.Option(None, "--version", "-v", help="Show version and exit"),
    verbose: bool = typer.Option(False, "--verbose", "-V", help="Log pipeline stages"),
):
    """
    RDF Partitioning Workbench

    Partition RDF datasets under hash, graph and workload-aware strategies and measure the cost.
    """
    if version:
        console.print(f"partbench version {VERSION}")
        raise typer.Exit()

    setup_logging(verbose)

    if ctx.invoked_subcommand is None:
        console.print("[yellow]No command specified. Use --help for available commands.[/yellow]")
        raise typer.Exit(code=1)


if __name__ == "__main__":
    app()
