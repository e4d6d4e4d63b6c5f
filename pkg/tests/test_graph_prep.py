"""Tests for undirected graph preparation and Metis file interop."""

from pathlib import Path

import pytest

from part_bench.errors import LineCountMismatchError, MetisFormatError, PartitionOutOfRangeError
from part_bench.graph_prep import (
    PartitionMap,
    UndirectedGraph,
    edge_cut,
    format_metis,
    parse_partition,
    read_metis_graph,
    read_metis_partition,
    to_undirected,
    write_metis,
    write_partition,
)
from part_bench.models import StrategyConfig
from part_bench.partitioner import allocate_by_subject, multilevel_partition

FIXTURES = Path(__file__).parent / "fixtures"

TRIANGLES = [
    ("n0", "p", "n1"),
    ("n1", "p", "n2"),
    ("n2", "p", "n0"),
    ("n3", "p", "n4"),
    ("n4", "p", "n5"),
    ("n5", "p", "n3"),
]


@pytest.mark.unit
class TestToUndirected:
    def test_drops_predicates_self_loops_and_parallel_edges(self, make_triples):
        """Test that reversed, repeated and self-referencing triples collapse into simple edges."""
        triples, _ = make_triples(("a", "p", "b"), ("b", "q", "a"), ("a", "r", "b"), ("a", "p", "a"))

        graph = to_undirected(triples)

        assert graph.adjacency == [[1], [0]]
        assert graph.m == 1

    def test_isolated_nodes_are_vertices(self, make_triples):
        """Test that nodes only used as objects of self-loops still get a vertex."""
        triples, dictionaries = make_triples(("a", "p", "b"), ("c", "p", "c"))

        graph = to_undirected(triples, len(dictionaries.nodes))

        assert graph.n == 3
        assert graph.adjacency[2] == []

    def test_edges_listed_once(self):
        graph = UndirectedGraph.from_edges(3, [(0, 1), (1, 2), (2, 1)])

        assert list(graph.edges()) == [(0, 1), (1, 2)]


@pytest.mark.unit
class TestMetisFormat:
    def test_path_matches_golden_file(self, make_triples):
        triples, _ = make_triples(("a", "p", "b"), ("b", "p", "c"), ("c", "p", "d"), ("b", "q", "a"))

        text = format_metis(to_undirected(triples))

        assert text == (FIXTURES / "path4.metis").read_text(encoding="ascii")

    def test_two_triangles_match_golden_file_byte_for_byte(self, make_triples, temp_directory):
        triples, _ = make_triples(*TRIANGLES)
        path = temp_directory / "graph.metis"

        write_metis(to_undirected(triples), path)

        assert path.read_bytes() == (FIXTURES / "two_triangles.metis").read_bytes()

    def test_read_golden_file(self):
        graph = read_metis_graph(FIXTURES / "two_triangles.metis")

        assert graph.n == 6
        assert graph.m == 6
        assert graph.adjacency[0] == [1, 2]
        assert graph.adjacency[5] == [3, 4]

    def test_comment_lines_are_ignored(self, temp_directory):
        path = temp_directory / "commented.metis"
        path.write_text("% generated\n2 1\n2\n% middle\n1\n", encoding="ascii")

        assert read_metis_graph(path).adjacency == [[1], [0]]

    @pytest.mark.parametrize(
        "content, error",
        [
            ("", MetisFormatError),
            ("two one\n2\n1\n", MetisFormatError),
            ("3 1\n2\n1\n", LineCountMismatchError),
            ("2 2\n2\n1\n", MetisFormatError),
            ("2 1\n3\n1\n", MetisFormatError),
            ("2 1 1\n2 5\n1 5\n", MetisFormatError),
        ],
    )
    def test_invalid_graph_files(self, temp_directory, content, error):
        """Test that malformed headers and adjacency lines are rejected."""
        path = temp_directory / "bad.metis"
        path.write_text(content, encoding="ascii")

        with pytest.raises(error):
            read_metis_graph(path)


@pytest.mark.unit
class TestPartitionFiles:
    def test_write_then_read(self, temp_directory):
        partition_map = PartitionMap([0, 2, 1, 2], 3)
        path = temp_directory / "graph.part"

        write_partition(partition_map, path)

        assert path.read_text(encoding="ascii") == "0\n2\n1\n2\n"
        assert read_metis_partition(path, 3, 4) == partition_map

    def test_line_count_mismatch(self):
        with pytest.raises(LineCountMismatchError) as exc_info:
            parse_partition(["0", "1"], 2, 3)

        assert exc_info.value.expected == 3
        assert exc_info.value.actual == 2

    def test_partition_out_of_range(self):
        with pytest.raises(PartitionOutOfRangeError) as exc_info:
            parse_partition(["0", "4", "1"], 4, 3)

        assert exc_info.value.line_number == 2
        assert exc_info.value.partition == 4

    def test_non_numeric_partition(self):
        with pytest.raises(MetisFormatError):
            parse_partition(["0", "x"], 2, 2)

    def test_sizes(self):
        assert PartitionMap([0, 1, 1, 1], 3).sizes() == [1, 3, 0]


@pytest.mark.integration
class TestExternalPartitionInterop:
    def test_hand_written_partition_drives_allocation_like_internal_map(self, make_triples):
        """Test that a partition file and the internal partitioner give the same allocation."""
        triples, dictionaries = make_triples(*TRIANGLES)
        graph = to_undirected(triples, len(dictionaries.nodes))

        from_file = read_metis_partition(FIXTURES / "two_triangles.part", 2, graph.n)
        internal = multilevel_partition(graph, StrategyConfig(k=2))

        assert from_file.assignment == internal.assignment == [0, 0, 0, 1, 1, 1]
        assert allocate_by_subject(triples, from_file) == allocate_by_subject(triples, internal)

    def test_edge_cut(self):
        graph = read_metis_graph(FIXTURES / "two_triangles.metis")

        assert edge_cut(graph, PartitionMap([0, 0, 0, 1, 1, 1], 2)) == 0
        assert edge_cut(graph, PartitionMap([0, 1, 0, 1, 0, 1], 2)) == 4
