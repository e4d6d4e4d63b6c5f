"""Undirected graph preparation and Metis graph/partition file interop."""

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

from part_bench.errors import LineCountMismatchError, MetisFormatError, PartitionOutOfRangeError
from part_bench.models import EncodedTriple

logger = logging.getLogger(__name__)


@dataclass
class UndirectedGraph:
    """Unlabeled undirected graph over dense NodeIds with sorted, deduplicated adjacency lists."""

    adjacency: list[list[int]]

    @property
    def n(self) -> int:
        return len(self.adjacency)

    @property
    def m(self) -> int:
        return sum(len(neighbors) for neighbors in self.adjacency) // 2

    def edges(self) -> Iterable[tuple[int, int]]:
        for u, neighbors in enumerate(self.adjacency):
            for v in neighbors:
                if u < v:
                    yield u, v

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "UndirectedGraph":
        """Build a graph, dropping self-loops and collapsing parallel edges."""
        neighbor_sets: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                continue
            neighbor_sets[u].add(v)
            neighbor_sets[v].add(u)
        return cls([sorted(neighbors) for neighbors in neighbor_sets])


@dataclass
class PartitionMap:
    """Assignment of every graph vertex to one of k partitions."""

    assignment: list[int]
    k: int

    def __getitem__(self, node: int) -> int:
        return self.assignment[node]

    def __len__(self) -> int:
        return len(self.assignment)

    def get(self, node: int) -> int | None:
        if 0 <= node < len(self.assignment):
            return self.assignment[node]
        return None

    def sizes(self) -> list[int]:
        counts = [0] * self.k
        for partition in self.assignment:
            counts[partition] += 1
        return counts


def to_undirected(triples: Iterable[EncodedTriple], num_nodes: int | None = None) -> UndirectedGraph:
    """
    Drop predicates and add reversed subject/object pairs to get an undirected graph.

    Args:
        triples: Encoded triples with dense node ids
        num_nodes: Vertex count (node dictionary size); defaults to max id + 1

    Returns:
        UndirectedGraph whose vertex set is every NodeId
    """
    triples = list(triples)
    if num_nodes is None:
        num_nodes = max((max(t.s, t.o) for t in triples), default=-1) + 1

    graph = UndirectedGraph.from_edges(num_nodes, ((t.s, t.o) for t in triples))
    logger.info("Prepared undirected graph: n=%d, m=%d", graph.n, graph.m)
    return graph


def format_metis(graph: UndirectedGraph) -> str:
    """Render the plain Metis graph format: 'n m' header then 1-based neighbor lists."""
    lines = [f"{graph.n} {graph.m}"]
    lines.extend(" ".join(str(v + 1) for v in neighbors) for neighbors in graph.adjacency)
    return "\n".join(lines) + "\n"


def write_metis(graph: UndirectedGraph, path: str | Path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(format_metis(graph))


def _content_lines(text: str) -> list[str]:
    """Split Metis text into lines, dropping '%' comments and the final newline."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line for line in lines if not line.startswith("%")]


def read_metis_graph(path: str | Path) -> UndirectedGraph:
    """Read a plain (unweighted) Metis graph file."""
    lines = _content_lines(Path(path).read_text(encoding="ascii"))
    if not lines:
        raise MetisFormatError(f"'{path}' is empty")

    header = lines[0].split()
    if len(header) < 2 or not all(field.isdigit() for field in header):
        raise MetisFormatError(f"'{path}' has an invalid header: '{lines[0]}'")
    if len(header) > 2 and int(header[2]) != 0:
        raise MetisFormatError("Weighted Metis graphs are not supported")

    n, m = int(header[0]), int(header[1])
    body = lines[1:]
    if len(body) != n:
        raise LineCountMismatchError(n, len(body))

    adjacency = []
    for index, line in enumerate(body):
        try:
            neighbors = sorted(int(token) - 1 for token in line.split())
        except ValueError:
            raise MetisFormatError(f"Vertex {index + 1}: non-integer neighbor")
        if any(not 0 <= v < n or v == index for v in neighbors):
            raise MetisFormatError(f"Vertex {index + 1}: neighbor out of range")
        adjacency.append(neighbors)

    graph = UndirectedGraph(adjacency)
    if graph.m != m or sum(len(a) for a in adjacency) != 2 * m:
        raise MetisFormatError(f"Header declares {m} edges, adjacency lists contain {graph.m}")
    return graph


def format_partition(partition_map: PartitionMap) -> str:
    return "".join(f"{partition}\n" for partition in partition_map.assignment)


def write_partition(partition_map: PartitionMap, path: str | Path) -> None:
    """Write a partition file in Metis output format (one 0-based id per line)."""
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(format_partition(partition_map))


def parse_partition(lines: Sequence[str], k: int, num_vertices: int) -> PartitionMap:
    if len(lines) != num_vertices:
        raise LineCountMismatchError(num_vertices, len(lines))

    assignment = []
    for line_number, line in enumerate(lines, 1):
        token = line.strip()
        if not token.isdigit():
            raise MetisFormatError(f"Line {line_number}: expected a partition id, found '{token}'")
        partition = int(token)
        if partition >= k:
            raise PartitionOutOfRangeError(line_number, partition, k)
        assignment.append(partition)
    return PartitionMap(assignment, k)


def read_metis_partition(path: str | Path, k: int, num_vertices: int) -> PartitionMap:
    """
    Read a Metis partition file: line i holds the partition of vertex i-1.

    Args:
        path: Partition file (e.g. produced by gpmetis)
        k: Number of partitions
        num_vertices: Vertex count of the graph the file refers to

    Returns:
        Total PartitionMap

    Raises:
        LineCountMismatchError: If the file does not have one line per vertex
        PartitionOutOfRangeError: If a partition id is >= k
    """
    lines = _content_lines(Path(path).read_text(encoding="ascii"))
    partition_map = parse_partition(lines, k, num_vertices)
    logger.info("Loaded external partition file %s (k=%d)", path, k)
    return partition_map


def edge_cut(graph: UndirectedGraph, partition_map: PartitionMap) -> int:
    """Number of edges whose endpoints fall in different partitions."""
    return sum(1 for u, v in graph.edges() if partition_map[u] != partition_map[v])
