"""Replication strategies: n-hop guarantee expansion, workload-aware refinement and the hybrid pipeline."""

import json
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from part_bench.config import DEFAULT_HYBRID_PREHOP, DEFAULT_WARP_HOPS
from part_bench.errors import CorruptFileError, DisconnectedPatternError
from part_bench.graph_prep import PartitionMap, to_undirected
from part_bench.metrics import StageTimer
from part_bench.models import EncodedTriple, PartitionedDataset, Provenance, Quad, SeedCandidate, StrategyConfig
from part_bench.partitioner import allocate_by_hash, allocate_by_subject, multilevel_partition
from part_bench.query import (
    Binding,
    Query,
    TripleIndex,
    canonical_key,
    generalize_query,
    is_connected,
    solve_bgp,
)

logger = logging.getLogger(__name__)

NHOP_STAGE = "nhop"
WARP_STAGE = "warp"
MANIFEST_FILE = "manifest.json"


def _subject_index(triples: Iterable[EncodedTriple]) -> dict[int, list[EncodedTriple]]:
    by_subject: dict[int, list[EncodedTriple]] = {}
    for triple in dict.fromkeys(triples):
        by_subject.setdefault(triple.s, []).append(triple)
    return by_subject


def _expand_frontier(
    dataset: PartitionedDataset,
    by_subject: dict[int, list[EncodedTriple]],
    frontier: list[set[int]],
    stage: str,
) -> list[set[int]]:
    """Add, per partition, every triple whose subject is a frontier object; return the objects brought in."""
    reached: list[set[int]] = [set() for _ in range(dataset.k)]
    for partition, objects in enumerate(frontier):
        for obj in sorted(objects):
            for triple in by_subject.get(obj, ()):
                if dataset.add_replica(triple, partition, stage):
                    reached[partition].add(triple.o)
    return reached


def _all_objects(dataset: PartitionedDataset) -> list[set[int]]:
    return [{triple.o for triple in dataset.partition(p)} for p in range(dataset.k)]


def one_hop_expand(
    dataset: PartitionedDataset, triples: Iterable[EncodedTriple], stage: str = NHOP_STAGE
) -> PartitionedDataset:
    """
    Extend each partition with the original triples whose subject is an object stored there.

    Args:
        dataset: Partitioned dataset to extend (left unchanged)
        triples: The full original dataset
        stage: Label the added replicas are attributed to

    Returns:
        New PartitionedDataset with the added Replica quads
    """
    expanded = dataset.copy()
    _expand_frontier(expanded, _subject_index(triples), _all_objects(expanded), stage)
    return expanded


def nhop_expand(
    dataset: PartitionedDataset, triples: Iterable[EncodedTriple], n: int, stage: str = NHOP_STAGE
) -> PartitionedDataset:
    """Apply one-hop expansion n-1 times, yielding an n-hop guarantee."""
    if n < 1:
        raise ValueError(f"Hop count must be at least 1, got {n}")

    expanded = dataset.copy()
    by_subject = _subject_index(triples)
    before = expanded.total_quads
    frontier = _all_objects(expanded)
    # Objects already expanded add nothing new, so each round only follows the latest replicas.
    for _ in range(n - 1):
        frontier = _expand_frontier(expanded, by_subject, frontier, stage)
        if not any(frontier):
            break

    logger.info("%d-hop expansion added %d replicas", n, expanded.total_quads - before)
    return expanded


@dataclass
class NHopCheck:
    """Outcome of an n-hop guarantee check; path is a violating path when ok is False."""

    ok: bool
    partition: int | None = None
    path: list[EncodedTriple] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def verify_nhop(dataset: PartitionedDataset, triples: Iterable[EncodedTriple], n: int) -> NHopCheck:
    """
    Check that every directed path of n triples starting at an Original of a partition lies in that partition.

    Paths follow the original dataset (object of one triple = subject of the next).
    """
    by_subject = _subject_index(triples)
    for partition in range(dataset.k):
        stored = dataset.partition(partition)
        parent: dict[EncodedTriple, EncodedTriple | None] = {}
        frontier = []
        for triple, provenance in stored.items():
            if provenance is Provenance.ORIGINAL:
                parent[triple] = None
                frontier.append(triple)

        for _ in range(n - 1):
            next_frontier = []
            for triple in frontier:
                for follower in by_subject.get(triple.o, ()):
                    if follower in parent:
                        continue
                    parent[follower] = triple
                    if follower not in stored:
                        path = [follower]
                        while parent[path[-1]] is not None:
                            path.append(parent[path[-1]])
                        path.reverse()
                        logger.debug("n-hop violation in partition %d: %s", partition, path)
                        return NHopCheck(False, partition, path)
                    next_frontier.append(follower)
            frontier = next_frontier
    return NHopCheck(True)


# Workload-aware refinement


def warp_generalize(workload: Sequence[Query]) -> list[Query]:
    """
    Turn workload queries into placement patterns: constants become fresh variables, duplicates merge.

    Raises:
        UnsupportedPatternError: If a workload query has a variable predicate
    """
    patterns: dict[tuple, Query] = {}
    for query in workload:
        pattern = generalize_query(query)
        key = canonical_key(pattern)
        if key in patterns:
            logger.debug("Pattern of '%s' merged with '%s'", query.name, patterns[key].name)
            continue
        patterns[key] = pattern
    return list(patterns.values())


@dataclass
class AnnotatedRow:
    """A solution of a pattern with the matched Original triple and its partition per triple pattern."""

    binding: Binding
    triples: tuple[EncodedTriple, ...]
    partitions: tuple[int, ...]


def annotate_bindings(
    pattern: Query, dataset: PartitionedDataset, index: TripleIndex | None = None
) -> list[AnnotatedRow]:
    """
    Evaluate a connected pattern over the Original quads and tag each matched triple with its partition.

    Raises:
        DisconnectedPatternError: If the patterns do not all share variables transitively
    """
    if not is_connected(pattern):
        raise DisconnectedPatternError(f"Pattern '{pattern.name}' is not connected")
    if index is None:
        index = TripleIndex(dataset.original_triples())

    return [
        AnnotatedRow(binding, matched, tuple(dataset.original_partition(t) for t in matched))
        for binding, matched in solve_bgp(pattern.bgp, index)
    ]


def _missing_pairs(
    seed_index: int, rows: Iterable[AnnotatedRow], dataset: PartitionedDataset
) -> set[tuple[EncodedTriple, int]]:
    pairs = set()
    for row in rows:
        target = row.partitions[seed_index]
        for position, triple in enumerate(row.triples):
            if position == seed_index or row.partitions[position] == target:
                continue
            if not dataset.contains(triple, target):
                pairs.add((triple, target))
    return pairs


def warp_seed_cost(
    pattern: Query, seed_index: int, rows: Iterable[AnnotatedRow], dataset: PartitionedDataset
) -> int:
    """Number of distinct (triple, target partition) pairs to replicate when anchoring on one triple pattern."""
    if not 0 <= seed_index < len(pattern.bgp):
        raise ValueError(f"Seed index {seed_index} out of range for a {len(pattern.bgp)}-pattern query")
    return len(_missing_pairs(seed_index, rows, dataset))


def choose_seed(pattern: Query, rows: Sequence[AnnotatedRow], dataset: PartitionedDataset) -> SeedCandidate:
    """Cheapest seed; ties go to the smallest pattern index."""
    candidates = [
        SeedCandidate(pattern.name, index, warp_seed_cost(pattern, index, rows, dataset))
        for index in range(len(pattern.bgp))
    ]
    return min(candidates, key=lambda c: (c.cost, c.seed_index))


def warp_refine(dataset: PartitionedDataset, workload: Sequence[Query], stage: str = WARP_STAGE) -> PartitionedDataset:
    """
    Replicate what each generalized workload pattern needs so every solution is local to its seed's partition.

    Returns:
        New PartitionedDataset; the union of per-partition results of every workload query equals its global result
    """
    refined = dataset.copy()
    index = TripleIndex(dataset.original_triples())

    for pattern in warp_generalize(workload):
        rows = annotate_bindings(pattern, refined, index)
        if not rows:
            logger.debug("Pattern '%s' has no solutions; nothing to replicate", pattern.name)
            continue
        seed = choose_seed(pattern, rows, refined)
        pairs = _missing_pairs(seed.seed_index, rows, refined)
        for triple, target in sorted(pairs):
            refined.add_replica(triple, target, stage)
        logger.info(
            "Pattern '%s': %d solutions, seed pattern %d, %d replicas",
            pattern.name,
            len(rows),
            seed.seed_index,
            seed.cost,
        )
    return refined


def warp_pipeline(
    triples: Sequence[EncodedTriple],
    workload: Sequence[Query],
    config: StrategyConfig,
    num_nodes: int | None = None,
    partition_map: PartitionMap | None = None,
    timer: StageTimer | None = None,
) -> PartitionedDataset:
    """
    Graph partitioning, subject allocation, 2-hop guarantee, then workload refinement.

    Args:
        triples: Encoded original triples
        workload: Workload queries (encoded)
        config: k, seed and balance tolerance for the graph partitioner
        num_nodes: Size of the node dictionary (vertex count)
        partition_map: External partition (e.g. from a Metis file) used instead of the internal partitioner
        timer: Collects per-stage timings

    Returns:
        Refined PartitionedDataset
    """
    timer = timer or StageTimer()
    if partition_map is None:
        with timer.stage("graph-prep"):
            graph = to_undirected(triples, num_nodes)
        with timer.stage("partition"):
            partition_map = multilevel_partition(graph, config)
    with timer.stage("allocate"):
        dataset = allocate_by_subject(triples, partition_map)
    with timer.stage("replicate"):
        dataset = nhop_expand(dataset, triples, DEFAULT_WARP_HOPS)
        dataset = warp_refine(dataset, workload)
    return dataset


def hybrid_pipeline(
    triples: Sequence[EncodedTriple],
    workload: Sequence[Query],
    config: StrategyConfig,
    prehop: int = DEFAULT_HYBRID_PREHOP,
    timer: StageTimer | None = None,
) -> PartitionedDataset:
    """Subject hashing followed by workload refinement; prehop > 1 inserts an n-hop stage in between."""
    timer = timer or StageTimer()
    with timer.stage("allocate"):
        dataset = allocate_by_hash(triples, config, by_subject=True)
    with timer.stage("replicate"):
        if prehop > 1:
            dataset = nhop_expand(dataset, triples, prehop)
        dataset = warp_refine(dataset, workload)
    return dataset


# Persistence: one part-NNNNN.quads file per partition (little-endian u64 s, p, o rows)
# with a part-NNNNN.prov sidecar (one byte per row: 0 original, 1 replica) and a manifest.


def save_partitions(dataset: PartitionedDataset, directory: str | Path, strategy: str = "") -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    for partition in range(dataset.k):
        entries = dataset.partition(partition)
        rows = np.array([tuple(t) for t in entries], dtype="<u8").reshape(-1, 3)
        provenance = np.array([p.value for p in entries.values()], dtype=np.uint8)
        (directory / f"part-{partition:05d}.quads").write_bytes(rows.tobytes())
        (directory / f"part-{partition:05d}.prov").write_bytes(provenance.tobytes())

    manifest = {
        "k": dataset.k,
        "strategy": strategy,
        "originals": dataset.original_count,
        "sizes": dataset.sizes(),
        "replicas_by_stage": dataset.replicas_by_stage,
    }
    (directory / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    logger.info("Saved %d partitions to %s", dataset.k, directory)
    return directory


def load_partitions(directory: str | Path) -> PartitionedDataset:
    """
    Load a dataset written by save_partitions.

    Raises:
        CorruptFileError: If a partition file or its sidecar is missing or truncated
    """
    directory = Path(directory)
    try:
        manifest = json.loads((directory / MANIFEST_FILE).read_text(encoding="utf-8"))
        k = int(manifest["k"])
    except (OSError, ValueError, KeyError) as e:
        raise CorruptFileError(f"Cannot read partition manifest in '{directory}': {e}")

    def quads():
        for partition in range(k):
            try:
                raw = (directory / f"part-{partition:05d}.quads").read_bytes()
                flags = (directory / f"part-{partition:05d}.prov").read_bytes()
            except OSError as e:
                raise CorruptFileError(f"Missing partition {partition}: {e}")
            if len(raw) % 24 or len(raw) // 24 != len(flags):
                raise CorruptFileError(f"Partition {partition} quads and provenance sidecar disagree")
            rows = np.frombuffer(raw, dtype="<u8").reshape(-1, 3)
            for (s, p, o), flag in zip(rows.tolist(), flags, strict=True):
                yield Quad(s, p, o, partition), Provenance(flag)

    dataset = PartitionedDataset.from_quads(k, quads())
    stages = manifest.get("replicas_by_stage")
    if stages and sum(stages.values()) == dataset.replica_count:
        dataset.replicas_by_stage = {str(stage): int(count) for stage, count in stages.items()}
    return dataset
