"""Balance and replication metrics plus per-stage preparation timing."""

import logging
import time
from collections.abc import Iterator, Sequence
from contextlib import contextmanager

import numpy as np

from part_bench.models import PartitionedDataset

logger = logging.getLogger(__name__)


def replication_rate(dataset: PartitionedDataset) -> float:
    """(stored quads - original triples) / original triples; 0 for an empty dataset."""
    if dataset.original_count == 0:
        return 0.0
    return dataset.replica_count / dataset.original_count


def replication_by_stage(dataset: PartitionedDataset) -> dict[str, float]:
    """Replication rate contributed by each stage that added replicas."""
    if dataset.original_count == 0:
        return {}
    return {stage: count / dataset.original_count for stage, count in sorted(dataset.replicas_by_stage.items())}


def size_stddev(sizes: PartitionedDataset | Sequence[int]) -> float:
    """Population standard deviation of per-partition quad counts."""
    if isinstance(sizes, PartitionedDataset):
        sizes = sizes.sizes()
    if not sizes:
        return 0.0
    return float(np.std(np.asarray(sizes, dtype=np.float64)))


class StageTimer:
    """Accumulates monotonic wall-clock time per named preparation stage, in milliseconds."""

    def __init__(self):
        self.timings: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = (time.perf_counter() - start) * 1000.0
            self.timings[name] = self.timings.get(name, 0.0) + elapsed
            logger.debug("Stage %s took %.1f ms", name, elapsed)

    @property
    def total_ms(self) -> float:
        return sum(self.timings.values())
