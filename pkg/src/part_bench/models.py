"""Data models for encoded RDF data, partitioned datasets and run reports."""

from collections.abc import Iterable, Iterator, Mapping
from dataclasses import asdict, dataclass, field
from enum import Enum, StrEnum
from types import MappingProxyType
from typing import Any, NamedTuple

from part_bench.config import DEFAULT_EPSILON, DEFAULT_HOP_COUNT, DEFAULT_SEED
from part_bench.errors import ConfigError, ProvenanceError


class TermKind(StrEnum):
    IRI = "iri"
    BLANK = "blank"
    LITERAL = "literal"


@dataclass(frozen=True, slots=True)
class Term:
    """An RDF term: IRI (stored without brackets), blank node label, or full literal token."""

    lexical: str
    kind: TermKind

    def __post_init__(self):
        if self.kind is TermKind.IRI and (not self.lexical or any(c.isspace() for c in self.lexical)):
            raise ValueError(f"Invalid IRI '{self.lexical}'")

    @classmethod
    def iri(cls, value: str) -> "Term":
        return cls(value, TermKind.IRI)

    @classmethod
    def blank(cls, label: str) -> "Term":
        return cls(label, TermKind.BLANK)

    @classmethod
    def literal(cls, token: str) -> "Term":
        return cls(token, TermKind.LITERAL)

    def to_ntriples(self) -> str:
        """Render the term as it appears in an N-Triples statement."""
        if self.kind is TermKind.IRI:
            return f"<{self.lexical}>"
        if self.kind is TermKind.BLANK:
            return f"_:{self.lexical}"
        return self.lexical

    def __str__(self) -> str:
        return self.to_ntriples()


class EncodedTriple(NamedTuple):
    s: int
    p: int
    o: int


class Quad(NamedTuple):
    s: int
    p: int
    o: int
    partition: int

    @property
    def triple(self) -> EncodedTriple:
        return EncodedTriple(self.s, self.p, self.o)


class Provenance(Enum):
    ORIGINAL = 0
    REPLICA = 1


class Strategy(StrEnum):
    RANDOM_HASH = "random-hash"
    SUBJECT_HASH = "subject-hash"
    GRAPH_SUBJECT = "graph-subject"
    GRAPH_NHOP = "graph-nhop"
    WARP = "warp"
    HYBRID = "hybrid"

    @property
    def is_graph_based(self) -> bool:
        return self in (Strategy.GRAPH_SUBJECT, Strategy.GRAPH_NHOP, Strategy.WARP)

    @property
    def is_workload_aware(self) -> bool:
        return self in (Strategy.WARP, Strategy.HYBRID)


@dataclass
class StrategyConfig:
    """Parameters shared by every partitioning strategy."""

    k: int
    seed: int = DEFAULT_SEED
    epsilon: float = DEFAULT_EPSILON
    n: int = DEFAULT_HOP_COUNT
    strategy: Strategy = Strategy.SUBJECT_HASH

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be at least 1, got {self.k}")
        if not 0 <= self.epsilon < 1:
            raise ConfigError(f"epsilon must be in [0, 1), got {self.epsilon}")
        if self.n < 1:
            raise ConfigError(f"hop count must be at least 1, got {self.n}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


class PartitionedDataset:
    """
    k partitions of quads with original/replica provenance.

    Each partition keeps an insertion-ordered map from triple to provenance, which doubles as
    the presence index used to suppress duplicate (triple, partition) pairs.
    """

    def __init__(self, k: int):
        if k < 1:
            raise ConfigError(f"k must be at least 1, got {k}")
        self.k = k
        self._partitions: list[dict[EncodedTriple, Provenance]] = [{} for _ in range(k)]
        self._original_partition: dict[EncodedTriple, int] = {}
        self.replicas_by_stage: dict[str, int] = {}

    def add_original(self, triple: EncodedTriple, partition: int) -> bool:
        """Store a triple as Original in one partition. Returns False for a repeated triple."""
        self._check_partition(partition)
        existing = self._original_partition.get(triple)
        if existing is not None:
            if existing != partition:
                raise ProvenanceError(f"Triple {tuple(triple)} is already original in partition {existing}")
            return False
        if triple in self._partitions[partition]:
            raise ProvenanceError(f"Triple {tuple(triple)} is already a replica in partition {partition}")

        self._partitions[partition][triple] = Provenance.ORIGINAL
        self._original_partition[triple] = partition
        return True

    def add_replica(self, triple: EncodedTriple, partition: int, stage: str) -> bool:
        """Copy a triple into a partition as Replica. Returns False when already present."""
        self._check_partition(partition)
        if triple not in self._original_partition:
            raise ProvenanceError(f"Cannot replicate {tuple(triple)}: no original copy exists")
        target = self._partitions[partition]
        if triple in target:
            return False

        target[triple] = Provenance.REPLICA
        self.replicas_by_stage[stage] = self.replicas_by_stage.get(stage, 0) + 1
        return True

    def contains(self, triple: EncodedTriple, partition: int) -> bool:
        return triple in self._partitions[partition]

    def original_partition(self, triple: EncodedTriple) -> int | None:
        return self._original_partition.get(triple)

    def partition(self, partition: int) -> Mapping[EncodedTriple, Provenance]:
        """Read-only view of one partition's triples and their provenance."""
        self._check_partition(partition)
        return MappingProxyType(self._partitions[partition])

    def originals(self) -> Iterator[tuple[EncodedTriple, int]]:
        """Yield (triple, partition) for every Original quad, in insertion order."""
        yield from self._original_partition.items()

    def original_triples(self) -> list[EncodedTriple]:
        return list(self._original_partition)

    def quads(self) -> Iterator[tuple[Quad, Provenance]]:
        for partition, entries in enumerate(self._partitions):
            for triple, provenance in entries.items():
                yield Quad(triple.s, triple.p, triple.o, partition), provenance

    def sizes(self) -> list[int]:
        return [len(entries) for entries in self._partitions]

    @property
    def original_count(self) -> int:
        return len(self._original_partition)

    @property
    def total_quads(self) -> int:
        return sum(self.sizes())

    @property
    def replica_count(self) -> int:
        return self.total_quads - self.original_count

    def copy(self) -> "PartitionedDataset":
        clone = PartitionedDataset(self.k)
        clone._partitions = [dict(entries) for entries in self._partitions]
        clone._original_partition = dict(self._original_partition)
        clone.replicas_by_stage = dict(self.replicas_by_stage)
        return clone

    @classmethod
    def from_quads(
        cls, k: int, quads: Iterable[tuple[Quad, Provenance]], stage: str = "loaded"
    ) -> "PartitionedDataset":
        """Rebuild a dataset from quads; originals are placed before replicas."""
        pending_replicas = []
        dataset = cls(k)
        for quad, provenance in quads:
            if provenance is Provenance.ORIGINAL:
                dataset.add_original(quad.triple, quad.partition)
            else:
                pending_replicas.append(quad)
        for quad in pending_replicas:
            dataset.add_replica(quad.triple, quad.partition, stage)
        return dataset

    def _check_partition(self, partition: int) -> None:
        if not 0 <= partition < self.k:
            raise ProvenanceError(f"Partition {partition} out of range for k={self.k}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartitionedDataset):
            return NotImplemented
        return self.k == other.k and self._partitions == other._partitions

    def __repr__(self) -> str:
        return f"PartitionedDataset(k={self.k}, originals={self.original_count}, quads={self.total_quads})"


@dataclass(frozen=True)
class SeedCandidate:
    """A candidate seed pattern for a workload pattern and its replication cost."""

    query_id: str
    seed_index: int
    cost: int


@dataclass
class ShuffleStats:
    """Cross-partition exchange accounting for one query run."""

    tuples_exchanged: int = 0
    bytes_estimated: int = 0
    stages: int = 0

    def add(self, other: "ShuffleStats") -> None:
        self.tuples_exchanged += other.tuples_exchanged
        self.bytes_estimated += other.bytes_estimated
        self.stages += other.stages


class RunMode(StrEnum):
    LOCAL = "local"
    DISTRIBUTED = "distributed"


@dataclass
class QueryRunReport:
    """Outcome of evaluating one query against one partitioned dataset."""

    query_id: str
    mode: RunMode
    result_count: int
    time_ms: float
    shuffle: ShuffleStats = field(default_factory=ShuffleStats)
    strategy: str = ""
    k: int = 0
    forced: bool = False
    partition_time_sum_ms: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy,
            "k": self.k,
            "query": self.query_id,
            "mode": str(self.mode),
            "results": self.result_count,
            "tuples_exchanged": self.shuffle.tuples_exchanged,
            "bytes_estimated": self.shuffle.bytes_estimated,
            "stages": self.shuffle.stages,
            "time_ms": round(self.time_ms, 3),
            "forced": self.forced,
        }


@dataclass
class MetricsReport:
    """Preparation, balance, replication and query metrics for one (strategy, k) run."""

    strategy: str
    k: int
    prep_ms: dict[str, float]
    partition_sizes: list[int]
    size_stddev: float
    replication_rate: float
    original_count: int
    replication_by_stage: dict[str, float] = field(default_factory=dict)
    edge_cut: int | None = None
    queries: list[QueryRunReport] = field(default_factory=list)

    @property
    def total_prep_ms(self) -> float:
        return sum(self.prep_ms.values())

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["total_prep_ms"] = self.total_prep_ms
        data["queries"] = [report.to_dict() for report in self.queries]
        return data
