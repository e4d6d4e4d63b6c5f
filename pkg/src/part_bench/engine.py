"""Simulated cluster: partition-local evaluation and hash-join shuffles with exchange accounting."""

import logging
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from part_bench.config import BYTES_PER_BINDING, DEFAULT_REPETITIONS, DEFAULT_SEED, get_worker_count
from part_bench.models import PartitionedDataset, Provenance, QueryRunReport, RunMode, ShuffleStats, Strategy
from part_bench.partitioner import hash_ids
from part_bench.query import (
    Binding,
    JoinOrder,
    Query,
    ResultSet,
    TripleIndex,
    classify_locality,
    match_pattern,
    plan_join_order,
    project,
    solve_bgp,
)

logger = logging.getLogger(__name__)

# (partition holding the row, binding)
LocatedRow = tuple[int, Binding]


@dataclass
class QueryOutcome:
    results: ResultSet
    report: QueryRunReport


class SimulatedCluster:
    """
    One process standing in for k machines, one per partition.

    Local evaluation reads every quad of a partition (replicas included); distributed
    evaluation reads Originals only, so replicas never produce duplicate join input.
    """

    def __init__(
        self,
        dataset: PartitionedDataset,
        workers: int | None = None,
        seed: int = DEFAULT_SEED,
        order: JoinOrder = JoinOrder.CONNECTED,
    ):
        self.dataset = dataset
        self.workers = workers or get_worker_count()
        self.seed = seed
        self.order = order

    @property
    def k(self) -> int:
        return self.dataset.k

    @cached_property
    def local_indexes(self) -> list[TripleIndex]:
        return [TripleIndex(self.dataset.partition(p)) for p in range(self.k)]

    @cached_property
    def original_indexes(self) -> list[TripleIndex]:
        return [
            TripleIndex(t for t, provenance in self.dataset.partition(p).items() if provenance is Provenance.ORIGINAL)
            for p in range(self.k)
        ]

    def _evaluate_partition(self, query: Query, index: TripleIndex) -> tuple[ResultSet, float]:
        start = time.perf_counter()
        solutions = solve_bgp(query.bgp, index, self.order)
        results = project((binding for binding, _ in solutions), query.projection)
        return results, (time.perf_counter() - start) * 1000.0

    def evaluate_local(self, query: Query, forced: bool = False) -> QueryOutcome:
        """
        Evaluate the query inside each partition and union the distinct results; nothing is exchanged.

        Args:
            query: Encoded query
            forced: Set when the query was not classified Local; the result may then be incomplete
        """
        indexes = self.local_indexes
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            per_partition = list(pool.map(lambda index: self._evaluate_partition(query, index), indexes))

        results: ResultSet = set()
        for partial, _ in per_partition:
            results |= partial
        times = [elapsed for _, elapsed in per_partition]

        if forced:
            logger.warning("Query '%s' forced to local evaluation; results may be incomplete", query.name)
        report = QueryRunReport(
            query_id=query.name,
            mode=RunMode.LOCAL,
            result_count=len(results),
            time_ms=max(times, default=0.0),
            k=self.k,
            forced=forced,
            partition_time_sum_ms=sum(times),
        )
        return QueryOutcome(results, report)

    def _target(self, binding: Binding, key: Sequence[str]) -> int:
        return hash_ids((binding[name] for name in key), self.seed) % self.k

    def _repartition(self, rows: list[LocatedRow], key: Sequence[str], shuffle: ShuffleStats) -> list[list[Binding]]:
        """Move rows to the partition their join key hashes to, counting each row that changes partition."""
        buckets: list[list[Binding]] = [[] for _ in range(self.k)]
        for partition, binding in rows:
            target = self._target(binding, key)
            if target != partition:
                shuffle.tuples_exchanged += 1
                shuffle.bytes_estimated += BYTES_PER_BINDING * len(binding)
            buckets[target].append(binding)
        return buckets

    def _match_everywhere(self, query: Query, position: int) -> list[LocatedRow]:
        pattern = query.bgp[position]
        return [
            (partition, binding)
            for partition, index in enumerate(self.original_indexes)
            for binding, _ in match_pattern(pattern, {}, index)
        ]

    def evaluate_distributed(self, query: Query) -> QueryOutcome:
        """
        Iterative hash-join plan over Original quads.

        The first pattern is matched in place. Each further pattern is joined by repartitioning both the
        current rows and the pattern's matches on the hash of their shared variables.
        """
        start = time.perf_counter()
        shuffle = ShuffleStats()
        plan = plan_join_order(query.bgp, self.order, None)

        rows = self._match_everywhere(query, plan[0])
        bound = set(query.bgp[plan[0]].variables())
        for position in plan[1:]:
            variables = query.bgp[position].variables()
            key = [name for name in variables if name in bound]
            matches = self._match_everywhere(query, position)

            if self.k > 1:
                shuffle.stages += 1
            left = self._repartition(rows, key, shuffle)
            right = self._repartition(matches, key, shuffle)

            rows = []
            for partition in range(self.k):
                table: dict[tuple[int, ...], list[Binding]] = {}
                for binding in right[partition]:
                    table.setdefault(tuple(binding[name] for name in key), []).append(binding)
                for binding in left[partition]:
                    for other in table.get(tuple(binding[name] for name in key), ()):
                        rows.append((partition, binding | other))
            bound.update(variables)
            if not rows:
                break

        results = project((binding for _, binding in rows), query.projection)
        report = QueryRunReport(
            query_id=query.name,
            mode=RunMode.DISTRIBUTED,
            result_count=len(results),
            time_ms=(time.perf_counter() - start) * 1000.0,
            shuffle=shuffle,
            k=self.k,
        )
        logger.debug(
            "Query '%s' distributed: %d results, %d tuples exchanged over %d stage(s)",
            query.name,
            len(results),
            shuffle.tuples_exchanged,
            shuffle.stages,
        )
        return QueryOutcome(results, report)

    def evaluate(self, query: Query, mode: RunMode, forced: bool = False) -> QueryOutcome:
        if mode is RunMode.LOCAL:
            return self.evaluate_local(query, forced=forced)
        return self.evaluate_distributed(query)


def evaluate_local(query: Query, dataset: PartitionedDataset, workers: int | None = None, forced: bool = False):
    return SimulatedCluster(dataset, workers).evaluate_local(query, forced)


def evaluate_distributed(query: Query, dataset: PartitionedDataset, seed: int = DEFAULT_SEED):
    return SimulatedCluster(dataset, seed=seed).evaluate_distributed(query)


@dataclass
class SuiteTarget:
    """A partitioned dataset together with what locality classification needs to know about it."""

    strategy: Strategy
    dataset: PartitionedDataset
    n: int = 1
    workload: Sequence[Query] = field(default_factory=list)


def run_suite(
    queries: Sequence[Query],
    targets: Sequence[SuiteTarget],
    repetitions: int = DEFAULT_REPETITIONS,
    seed: int = DEFAULT_SEED,
    workers: int | None = None,
) -> list[QueryRunReport]:
    """
    Run every query against every target, repetitions times, reporting the median time.

    Local runs report the slowest partition's time; distributed runs report end-to-end time.
    """
    reports = []
    for target in targets:
        cluster = SimulatedCluster(target.dataset, workers, seed)
        for query in queries:
            mode = classify_locality(query, target.strategy, target.n, target.workload)
            outcomes = [cluster.evaluate(query, mode) for _ in range(max(1, repetitions))]
            counts = {outcome.report.result_count for outcome in outcomes}
            if len(counts) > 1:
                logger.warning("Query '%s' returned differing result counts across repetitions: %s", query.name, counts)

            report = outcomes[0].report
            report.time_ms = float(np.median([o.report.time_ms for o in outcomes]))
            report.partition_time_sum_ms = float(np.median([o.report.partition_time_sum_ms for o in outcomes]))
            report.strategy = str(target.strategy)
            reports.append(report)
            logger.info(
                "%s k=%d %s: %s, %d results, %d exchanged",
                target.strategy,
                cluster.k,
                query.name,
                mode,
                report.result_count,
                report.shuffle.tuples_exchanged,
            )
    return reports
