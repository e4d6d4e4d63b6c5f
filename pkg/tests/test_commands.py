"""Tests for CLI commands."""

import json

import pytest
from typer.testing import CliRunner

from part_bench.cli import app
from part_bench.config import DATASET_FILE, ENCODED_DIR, GRAPH_FILE, PARTITION_MAP_FILE

runner = CliRunner()


@pytest.fixture
def workspace(temp_directory):
    """Generated one-university dataset, encoded into an output directory."""
    source = temp_directory / "lubm.nt"
    out = temp_directory / "out"
    result = runner.invoke(app, ["generate", str(source), "-u", "1"])
    assert result.exit_code == 0
    result = runner.invoke(app, ["encode", str(source), "-o", str(out)])
    assert result.exit_code == 0
    return out


@pytest.mark.unit
class TestMainCallback:
    def test_version(self):
        result = runner.invoke(app, ["--version"])

        assert result.exit_code == 0
        assert "partbench version 0.1.0" in result.stdout

    def test_no_command(self):
        result = runner.invoke(app, [])

        assert result.exit_code == 1
        assert "No command specified" in result.stdout


@pytest.mark.integration
class TestGenerateAndEncode:
    def test_encode_writes_dataset_and_dictionaries(self, workspace):
        assert (workspace / ENCODED_DIR / DATASET_FILE).is_file()
        assert (workspace / ENCODED_DIR / "nodes.dict").is_file()
        assert (workspace / ENCODED_DIR / "preds.dict").is_file()

    def test_generate_random_graph(self, temp_directory):
        path = temp_directory / "random.nt.gz"

        result = runner.invoke(app, ["generate", str(path), "--random", "200", "--seed", "3"])

        assert result.exit_code == 0
        assert "Wrote 200 triples" in result.stdout

    def test_malformed_input_aborts(self, temp_directory):
        path = temp_directory / "bad.nt"
        path.write_text("<a> <p> <b> .\n<a> <p>\n", encoding="utf-8")

        result = runner.invoke(app, ["encode", str(path), "-o", str(temp_directory / "out")])

        assert result.exit_code == 1
        assert "Malformed line 2" in result.stdout
        assert "--skip-malformed" in result.stdout

    def test_skip_malformed(self, temp_directory):
        path = temp_directory / "bad.nt"
        path.write_text("<a> <p> <b> .\n<a> <p>\n<b> <p> <c> .\n", encoding="utf-8")

        result = runner.invoke(app, ["encode", str(path), "-o", str(temp_directory / "out"), "--skip-malformed"])

        assert result.exit_code == 0
        assert "Skipped 1 malformed line(s)" in result.stdout
        assert "Triples: 2" in result.stdout

    def test_missing_input_file(self, temp_directory):
        result = runner.invoke(app, ["encode", str(temp_directory / "nope.nt"), "-o", str(temp_directory)])

        assert result.exit_code == 1
        assert "Error:" in result.stdout

    def test_commands_need_encoded_data(self, temp_directory):
        result = runner.invoke(app, ["prep-graph", "-o", str(temp_directory)])

        assert result.exit_code == 1
        assert "partbench encode" in result.stdout

    def test_missing_output_directory(self, temp_directory):
        out = str(temp_directory / "gone")

        result = runner.invoke(app, ["partition", "--strategy", "subject-hash", "-k", "2", "-o", out])

        assert result.exit_code == 1
        assert "partbench encode" in result.stdout


@pytest.mark.integration
class TestPipelineCommands:
    def test_graph_nhop_flow(self, workspace):
        """Test prep-graph, partition, replicate, verify and query on a graph-nhop dataset."""
        out = str(workspace)

        result = runner.invoke(app, ["prep-graph", "-o", out])
        assert result.exit_code == 0
        assert (workspace / GRAPH_FILE).is_file()

        result = runner.invoke(app, ["partition", "-s", "graph-nhop", "-k", "2", "-o", out])
        assert result.exit_code == 0
        assert "Edge cut" in result.stdout
        assert (workspace / PARTITION_MAP_FILE).is_file()

        result = runner.invoke(app, ["replicate", "-s", "graph-nhop", "-k", "2", "-n", "2", "-o", out])
        assert result.exit_code == 0
        assert "Replication rate" in result.stdout

        result = runner.invoke(app, ["verify", "-s", "graph-nhop", "-k", "2", "-n", "2", "-o", out])
        assert result.exit_code == 0
        assert "All checks passed" in result.stdout

        result = runner.invoke(app, ["query", "q1", "q4", "-s", "graph-nhop", "-k", "2", "-n", "2", "--oracle", "-o", out])
        assert result.exit_code == 0
        assert result.stdout.count("Matches global evaluation") == 2

    def test_verify_reports_broken_hop_guarantee(self, temp_directory):
        """Test that a chain split across partitions without replication fails the 2-hop check."""
        source = temp_directory / "chain.nt"
        source.write_text(
            "<http://ex.org/a> <http://ex.org/p> <http://ex.org/b> .\n"
            "<http://ex.org/b> <http://ex.org/p> <http://ex.org/c> .\n"
            "<http://ex.org/c> <http://ex.org/p> <http://ex.org/d> .\n",
            encoding="utf-8",
        )
        part = temp_directory / "chain.part"
        part.write_text("0\n1\n0\n1\n", encoding="ascii")
        out = str(temp_directory / "out")
        runner.invoke(app, ["encode", str(source), "-o", out])
        runner.invoke(app, ["partition", "-s", "graph-nhop", "-k", "2", "--metis-partition-file", str(part), "-o", out])

        result = runner.invoke(app, ["verify", "-s", "graph-nhop", "-k", "2", "-n", "2", "-o", out])

        assert result.exit_code == 1
        assert "check(s) failed" in result.stdout

    def test_warp_flow(self, workspace):
        out = str(workspace)

        assert runner.invoke(app, ["partition", "-s", "warp", "-k", "3", "-o", out]).exit_code == 0
        assert runner.invoke(app, ["replicate", "-s", "warp", "-k", "3", "-o", out]).exit_code == 0

        result = runner.invoke(app, ["verify", "-s", "warp", "-k", "3", "-o", out])
        assert result.exit_code == 0
        assert "local 'q3'" in result.stdout

    def test_hash_strategies_do_not_replicate(self, workspace):
        result = runner.invoke(app, ["replicate", "-s", "subject-hash", "-o", str(workspace)])

        assert result.exit_code == 0
        assert "does not replicate" in result.stdout

    def test_forced_local_query(self, workspace):
        out = str(workspace)
        runner.invoke(app, ["partition", "-s", "subject-hash", "-k", "2", "-o", out])

        result = runner.invoke(app, ["query", "q1", "-s", "subject-hash", "-k", "2", "-m", "local", "-o", out])

        assert result.exit_code == 0
        assert "forced" in result.output

    def test_unknown_mode(self, workspace):
        result = runner.invoke(app, ["query", "q1", "-m", "sideways", "-o", str(workspace)])

        assert result.exit_code == 1
        assert "Unknown mode" in result.stdout

    def test_missing_partitions(self, workspace):
        result = runner.invoke(app, ["query", "q1", "-s", "random-hash", "-k", "5", "-o", str(workspace)])

        assert result.exit_code == 1
        assert "Error:" in result.stdout

    def test_external_partition_file_with_wrong_line_count(self, workspace, temp_directory):
        part = temp_directory / "graph.part"
        part.write_text("0\n1\n", encoding="ascii")

        result = runner.invoke(
            app, ["partition", "-s", "graph-subject", "-k", "2", "--metis-partition-file", str(part), "-o", str(workspace)]
        )

        assert result.exit_code == 1
        assert "Expected" in result.stdout


@pytest.mark.integration
class TestBenchCommand:
    def test_bench_writes_reports(self, temp_directory):
        out = temp_directory / "reports"

        result = runner.invoke(
            app, ["bench", "-u", "1", "-s", "subject-hash,graph-nhop", "-k", "2", "-r", "1", "-o", str(out)]
        )

        assert result.exit_code == 0
        assert "Reports written" in result.stdout
        with open(out / "metrics.json", encoding="utf-8") as f:
            assert [r["strategy"] for r in json.load(f)] == ["subject-hash", "graph-nhop"]

    def test_bench_config_file_with_overrides(self, temp_directory):
        out = temp_directory / "reports"
        config = temp_directory / "bench.env"
        config.write_text(f"universities=1\nstrategies=random-hash\nk=2,3\nrepetitions=1\nout_dir={out}\n", encoding="utf-8")

        result = runner.invoke(app, ["bench", "-c", str(config), "-k", "2"])

        assert result.exit_code == 0
        with open(out / "metrics.json", encoding="utf-8") as f:
            assert [(r["strategy"], r["k"]) for r in json.load(f)] == [("random-hash", 2)]

    def test_bench_invalid_strategy(self, temp_directory):
        result = runner.invoke(app, ["bench", "-s", "metis", "-o", str(temp_directory)])

        assert result.exit_code == 1
        assert "Unknown strategy" in result.stdout
