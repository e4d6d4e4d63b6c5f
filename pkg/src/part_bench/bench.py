"""End-to-end experiment orchestration: build partitioned datasets, run queries, verify and report."""

import csv
import json
import logging
import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from part_bench.config import (
    DEFAULT_EPSILON,
    DEFAULT_HOP_COUNT,
    DEFAULT_HYBRID_PREHOP,
    DEFAULT_K_VALUES,
    DEFAULT_REPETITIONS,
    DEFAULT_SEED,
    DEFAULT_UNIVERSITIES,
    DEFAULT_WARP_HOPS,
    DATASET_FILE,
    ENCODED_DIR,
    LOCK_FILE,
    get_default_out_dir,
)
from part_bench.engine import SimulatedCluster, SuiteTarget, run_suite
from part_bench.errors import BenchLockedError, ConfigError, CorruptFileError
from part_bench.generator import GeneratorSpec, synthetic_triples
from part_bench.graph_prep import PartitionMap, UndirectedGraph, edge_cut, read_metis_partition, to_undirected
from part_bench.metrics import StageTimer, replication_by_stage, replication_rate, size_stddev
from part_bench.models import (
    EncodedTriple,
    MetricsReport,
    PartitionedDataset,
    Provenance,
    QueryRunReport,
    RunMode,
    Strategy,
    StrategyConfig,
)
from part_bench.partitioner import allocate_by_hash, allocate_by_subject, multilevel_partition
from part_bench.query import Query, classify_locality, evaluate_global, load_prefixes, load_queries
from part_bench.rdf_io import DictionaryPair, encode, load_encoded, load_ntriples
from part_bench.replication import hybrid_pipeline, nhop_expand, verify_nhop, warp_pipeline

logger = logging.getLogger(__name__)

METRICS_JSON = "metrics.json"
METRICS_CSV = "metrics.csv"
QUERIES_CSV = "queries.csv"
QUERIES_TSV = "queries.tsv"
PREP_TSV = "prep.tsv"
PREP_STAGES = ("encode", "graph-prep", "partition", "allocate", "replicate")


def _split(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_strategies(values: Sequence[str]) -> list[Strategy]:
    strategies = []
    for value in values:
        for name in _split(value):
            try:
                strategies.append(Strategy(name.lower()))
            except ValueError:
                valid = ", ".join(s.value for s in Strategy)
                raise ConfigError(f"Unknown strategy '{name}' (valid: {valid})")
    return strategies


def parse_k_values(values: Sequence[str]) -> list[int]:
    try:
        return [int(item) for value in values for item in _split(value)]
    except ValueError:
        raise ConfigError(f"k must be a comma-separated list of integers, got '{','.join(values)}'")


@dataclass
class BenchConfig:
    """One benchmark sweep: a dataset (file or generator) under every (strategy, k) combination."""

    dataset: Path | None = None
    universities: int = DEFAULT_UNIVERSITIES
    hub_fraction: float = 0.0
    strategies: list[Strategy] = field(default_factory=lambda: list(Strategy))
    k_values: list[int] = field(default_factory=lambda: list(DEFAULT_K_VALUES))
    n_hop: int = DEFAULT_HOP_COUNT
    hybrid_prehop: int = DEFAULT_HYBRID_PREHOP
    workload: str | None = None
    prefixes: Path | None = None
    seed: int = DEFAULT_SEED
    epsilon: float = DEFAULT_EPSILON
    repetitions: int = DEFAULT_REPETITIONS
    out_dir: Path = field(default_factory=get_default_out_dir)
    metis_partition_file: Path | None = None
    workers: int | None = None

    def __post_init__(self):
        if not self.strategies:
            raise ConfigError("At least one strategy is required")
        if not self.k_values:
            raise ConfigError("At least one k is required")
        if any(k < 1 for k in self.k_values):
            raise ConfigError(f"Every k must be at least 1, got {self.k_values}")
        if self.n_hop < 1 or self.hybrid_prehop < 1:
            raise ConfigError("Hop counts must be at least 1")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be at least 1, got {self.repetitions}")
        if self.metis_partition_file is not None and len(self.k_values) != 1:
            raise ConfigError("An external Metis partition file fixes k; give exactly one k value")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "BenchConfig":
        """Build a config from raw key=value strings (config file or CLI overrides)."""
        kwargs = {}
        try:
            for key, raw in values.items():
                match key:
                    case "dataset" | "prefixes" | "out_dir" | "metis_partition_file":
                        kwargs[key] = Path(raw)
                    case "strategies":
                        kwargs["strategies"] = parse_strategies([raw])
                    case "k":
                        kwargs["k_values"] = parse_k_values([raw])
                    case "universities" | "n_hop" | "hybrid_prehop" | "seed" | "repetitions" | "workers":
                        kwargs[key] = int(raw)
                    case "hub_fraction" | "epsilon":
                        kwargs[key] = float(raw)
                    case "workload":
                        kwargs[key] = raw
                    case _:
                        raise ConfigError(f"Unknown config key '{key}'")
        except ValueError as e:
            raise ConfigError(f"Invalid config value: {e}")
        return cls(**kwargs)

    def strategy_config(self, k: int, strategy: Strategy) -> StrategyConfig:
        return StrategyConfig(k=k, seed=self.seed, epsilon=self.epsilon, n=self.n_hop, strategy=strategy)


@dataclass
class LoadedData:
    triples: list[EncodedTriple]
    dictionaries: DictionaryPair
    encode_ms: float = 0.0

    @property
    def num_nodes(self) -> int:
        return len(self.dictionaries.nodes)


def load_input(path: str | Path) -> LoadedData:
    """Load an encoded dataset directory (or an output dir containing one) or parse an N-Triples file."""
    path = Path(path)
    encoded = path / ENCODED_DIR if (path / ENCODED_DIR).is_dir() else path
    if not path.exists() or (path.is_dir() and not (encoded / DATASET_FILE).is_file()):
        raise CorruptFileError(f"No encoded dataset in '{path}'; run 'partbench encode' first")

    timer = StageTimer()
    with timer.stage("encode"):
        if path.is_dir():
            triples, dictionaries = load_encoded(encoded)
        else:
            triples, dictionaries, _ = load_ntriples(path)
    return LoadedData(triples, dictionaries, timer.timings["encode"])


def prepare_input(config: BenchConfig) -> LoadedData:
    """The configured dataset, or a generated university dataset when none is given."""
    if config.dataset is not None:
        return load_input(config.dataset)
    term_triples = synthetic_triples(GeneratorSpec(config.universities, config.seed, config.hub_fraction))
    timer = StageTimer()
    with timer.stage("encode"):
        triples, dictionaries = encode(term_triples)
    return LoadedData(triples, dictionaries, timer.timings["encode"])


@dataclass
class BuiltDataset:
    strategy: Strategy
    dataset: PartitionedDataset
    timer: StageTimer
    graph: UndirectedGraph | None = None
    partition_map: PartitionMap | None = None

    @property
    def cut(self) -> int | None:
        if self.graph is None or self.partition_map is None:
            return None
        return edge_cut(self.graph, self.partition_map)


def locality_hops(strategy: Strategy, n_hop: int, hybrid_prehop: int) -> int:
    """Hop guarantee locality classification should assume for a dataset built by a strategy."""
    if strategy is Strategy.GRAPH_NHOP:
        return n_hop
    if strategy is Strategy.HYBRID:
        return hybrid_prehop
    if strategy is Strategy.WARP:
        return DEFAULT_WARP_HOPS
    return 1


def build_dataset(
    strategy: Strategy,
    data: LoadedData,
    config: StrategyConfig,
    workload: Sequence[Query] = (),
    hybrid_prehop: int = DEFAULT_HYBRID_PREHOP,
    partition_map: PartitionMap | None = None,
    timer: StageTimer | None = None,
) -> BuiltDataset:
    """
    Run one strategy's full preparation pipeline.

    Args:
        strategy: Distribution strategy
        data: Encoded input
        config: k, seed, epsilon and the GraphNHop hop count n
        workload: Encoded workload queries for Warp and Hybrid
        hybrid_prehop: n-hop stage inserted before Hybrid refinement (1 = none)
        partition_map: External vertex partition for graph-based strategies
        timer: Collects per-stage timings

    Returns:
        BuiltDataset with the partitioned data, its timings and, for graph strategies, the vertex partition
    """
    timer = timer or StageTimer()
    triples = data.triples
    graph = None

    if strategy in (Strategy.RANDOM_HASH, Strategy.SUBJECT_HASH):
        with timer.stage("allocate"):
            dataset = allocate_by_hash(triples, config, by_subject=strategy is Strategy.SUBJECT_HASH)
    elif strategy is Strategy.HYBRID:
        dataset = hybrid_pipeline(triples, workload, config, prehop=hybrid_prehop, timer=timer)
    else:
        with timer.stage("graph-prep"):
            graph = to_undirected(triples, data.num_nodes)
        if partition_map is None:
            with timer.stage("partition"):
                partition_map = multilevel_partition(graph, config)

        if strategy is Strategy.WARP:
            dataset = warp_pipeline(triples, workload, config, partition_map=partition_map, timer=timer)
        else:
            with timer.stage("allocate"):
                dataset = allocate_by_subject(triples, partition_map)
            if strategy is Strategy.GRAPH_NHOP:
                with timer.stage("replicate"):
                    dataset = nhop_expand(dataset, triples, config.n)

    logger.info("Built %s dataset with k=%d: sizes=%s", strategy, config.k, dataset.sizes())
    return BuiltDataset(strategy, dataset, timer, graph, partition_map)


def metrics_for(built: BuiltDataset, encode_ms: float, queries: Sequence[QueryRunReport] = ()) -> MetricsReport:
    dataset = built.dataset
    prep_ms = {"encode": encode_ms, **built.timer.timings}
    return MetricsReport(
        strategy=str(built.strategy),
        k=dataset.k,
        prep_ms=prep_ms,
        partition_sizes=dataset.sizes(),
        size_stddev=size_stddev(dataset),
        replication_rate=replication_rate(dataset),
        original_count=dataset.original_count,
        replication_by_stage=replication_by_stage(dataset),
        edge_cut=built.cut,
        queries=list(queries),
    )


class BenchLock:
    """Exclusive lock file guarding an output directory against concurrent benchmarks."""

    def __init__(self, directory: str | Path):
        self.path = Path(directory) / LOCK_FILE

    def __enter__(self) -> "BenchLock":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            with open(self.path, "x", encoding="utf-8") as f:
                f.write(f"{os.getpid()}\n")
        except FileExistsError:
            raise BenchLockedError(
                f"'{self.path.parent}' is locked by another benchmark; remove {self.path.name} if it is stale"
            )
        return self

    def __exit__(self, *exc_info) -> None:
        self.path.unlink(missing_ok=True)


def run_benchmark(config: BenchConfig) -> list[MetricsReport]:
    """
    Execute the pipeline for every (k, strategy) pair and write the reports.

    Reports collected so far are written even when a stage fails; the error is then re-raised.

    Raises:
        BenchLockedError: If another benchmark is using the output directory
    """
    out_dir = Path(config.out_dir)
    reports: list[MetricsReport] = []

    with BenchLock(out_dir):
        data = prepare_input(config)
        prefixes = load_prefixes(config.prefixes)
        workload = load_queries(config.workload, prefixes, data.dictionaries)
        logger.info("Benchmark over %d triples, workload: %s", len(data.triples), [q.name for q in workload])

        try:
            for k in config.k_values:
                external = None
                if config.metis_partition_file is not None:
                    external = read_metis_partition(config.metis_partition_file, k, data.num_nodes)
                for strategy in config.strategies:
                    strategy_config = config.strategy_config(k, strategy)
                    built = build_dataset(
                        strategy,
                        data,
                        strategy_config,
                        workload,
                        hybrid_prehop=config.hybrid_prehop,
                        partition_map=external if strategy.is_graph_based else None,
                    )
                    target = SuiteTarget(
                        strategy, built.dataset, locality_hops(strategy, config.n_hop, config.hybrid_prehop), workload
                    )
                    query_reports = run_suite(workload, [target], config.repetitions, config.seed, config.workers)
                    reports.append(metrics_for(built, data.encode_ms, query_reports))
        finally:
            if reports:
                write_reports(reports, out_dir)

    return reports


def write_reports(reports: Sequence[MetricsReport], out_dir: str | Path) -> list[Path]:
    """Write metrics.json, metrics.csv, queries.csv and the gnuplot-ready prep.tsv and queries.tsv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    json_path = out / METRICS_JSON
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump([report.to_dict() for report in reports], f, indent=2)

    metrics_path = out / METRICS_CSV
    with open(metrics_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        stage_columns = [f"{stage}_ms" for stage in PREP_STAGES]
        writer.writerow(
            ["strategy", "k", *stage_columns, "total_prep_ms", "size_stddev", "replication_rate", "original_count"]
            + ["edge_cut", "partition_sizes"]
        )
        for r in reports:
            stage_times = [round(r.prep_ms.get(stage, 0.0), 3) for stage in PREP_STAGES]
            cut = "" if r.edge_cut is None else r.edge_cut
            sizes = " ".join(map(str, r.partition_sizes))
            writer.writerow(
                [r.strategy, r.k, *stage_times, round(r.total_prep_ms, 3), round(r.size_stddev, 3)]
                + [round(r.replication_rate, 6), r.original_count, cut, sizes]
            )

    rows = [query.to_dict() for r in reports for query in r.queries]
    columns = list(QueryRunReport("", RunMode.LOCAL, 0, 0.0).to_dict())
    queries_path = out / QUERIES_CSV
    with open(queries_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)

    tsv_path = out / QUERIES_TSV
    with open(tsv_path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# strategy\tk\tquery\tmode\ttime_ms\ttuples_exchanged\n")
        for row in rows:
            fields = [row[name] for name in ("strategy", "k", "query", "mode", "time_ms", "tuples_exchanged")]
            f.write("\t".join(map(str, fields)) + "\n")

    prep_path = out / PREP_TSV
    with open(prep_path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# strategy\tk\t" + "\t".join(PREP_STAGES) + "\tsize_stddev\treplication_rate\n")
        for r in reports:
            stages = "\t".join(f"{r.prep_ms.get(s, 0.0):.3f}" for s in PREP_STAGES)
            f.write(f"{r.strategy}\t{r.k}\t{stages}\t{r.size_stddev:.3f}\t{r.replication_rate:.6f}\n")

    logger.info("Wrote %d report(s) to %s", len(reports), out)
    return [json_path, metrics_path, queries_path, tsv_path, prep_path]


# Verification


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def check_provenance(dataset: PartitionedDataset, triples: Sequence[EncodedTriple]) -> CheckResult:
    """Each input triple is Original in exactly one partition and every Replica has an Original."""
    distinct = set(triples)
    seen: dict[EncodedTriple, int] = {}
    for quad, provenance in dataset.quads():
        triple = quad.triple
        if triple not in distinct:
            return CheckResult("provenance", False, f"{tuple(triple)} is not an input triple")
        if provenance is Provenance.ORIGINAL:
            if triple in seen:
                return CheckResult("provenance", False, f"{tuple(triple)} is Original in two partitions")
            seen[triple] = quad.partition
    if len(seen) != len(distinct):
        return CheckResult("provenance", False, f"{len(distinct) - len(seen)} input triple(s) have no Original quad")
    return CheckResult("provenance", True, f"{len(seen)} originals, {dataset.replica_count} replicas")


def verify_dataset(
    dataset: PartitionedDataset,
    triples: Sequence[EncodedTriple],
    strategy: Strategy,
    n: int = 1,
    workload: Sequence[Query] = (),
) -> list[CheckResult]:
    """
    Check a partitioned dataset: provenance, its n-hop guarantee, and that every workload query it
    classifies as Local gives the global result when evaluated per partition.
    """
    results = [check_provenance(dataset, triples)]

    check = verify_nhop(dataset, triples, n)
    detail = "" if check.ok else f"partition {check.partition}, path {[tuple(t) for t in check.path]}"
    results.append(CheckResult(f"{n}-hop guarantee", check.ok, detail))

    cluster = SimulatedCluster(dataset)
    for query in workload:
        if classify_locality(query, strategy, n, workload) is not RunMode.LOCAL:
            continue
        local = cluster.evaluate_local(query).results
        expected = evaluate_global(query, triples)
        ok = local == expected
        detail = f"{len(local)} local vs {len(expected)} global results"
        results.append(CheckResult(f"local '{query.name}'", ok, detail))
    return results


def partition_dir(out_dir: str | Path, strategy: Strategy, k: int) -> Path:
    return Path(out_dir) / "partitions" / f"{strategy}-k{k}"

