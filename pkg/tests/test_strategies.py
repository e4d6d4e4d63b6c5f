"""End-to-end properties of the six distribution strategies on generated data."""

import pytest

from part_bench.bench import LoadedData, build_dataset, locality_hops
from part_bench.engine import SimulatedCluster
from part_bench.generator import GeneratorSpec, random_triples, synthetic_triples, university_iri
from part_bench.graph_prep import PartitionMap
from part_bench.metrics import replication_rate, size_stddev
from part_bench.models import RunMode, Strategy, StrategyConfig, Term
from part_bench.partitioner import allocate_by_subject
from part_bench.query import classify_locality, hop_depth, load_prefixes, load_queries
from part_bench.rdf_io import encode
from part_bench.replication import WARP_STAGE, hybrid_pipeline, nhop_expand, warp_pipeline

ORDERING_K = (5, 10)


@pytest.fixture(scope="module")
def two_universities():
    triples, dictionaries = encode(synthetic_triples(GeneratorSpec(universities=2)))
    return LoadedData(triples, dictionaries)


@pytest.fixture(scope="module")
def university_queries(two_universities):
    return load_queries(None, load_prefixes(), two_universities.dictionaries)


@pytest.fixture(scope="module")
def wikidata_like():
    """50,000 random Wikidata-style statements, encoded."""
    triples, dictionaries = encode(random_triples(50_000, seed=11))
    return LoadedData(triples, dictionaries)


@pytest.fixture(scope="module")
def random_queries(wikidata_like):
    return load_queries("q5,q6", load_prefixes(), wikidata_like.dictionaries)


@pytest.fixture(scope="module")
def expected_results(two_universities, university_queries, wikidata_like, random_queries, oracle):
    """Oracle result sets keyed by (dataset, query name)."""
    expected = {("lubm", q.name): oracle(q, two_universities.triples) for q in university_queries}
    expected.update({("random", q.name): oracle(q, wikidata_like.triples) for q in random_queries})
    return expected


@pytest.fixture(scope="module")
def five_universities():
    triples, dictionaries = encode(synthetic_triples(GeneratorSpec(universities=5)))
    return LoadedData(triples, dictionaries)


@pytest.fixture(scope="module")
def five_university_placements(five_universities):
    """GraphNHop (n=2), warp and hybrid placements per k; GraphNHop and warp share one vertex partition."""
    workload = load_queries(None, load_prefixes(), five_universities.dictionaries)
    placements = {}
    for k in ORDERING_K:
        config = StrategyConfig(k=k, n=2)
        nhop = build_dataset(Strategy.GRAPH_NHOP, five_universities, config)
        warp = build_dataset(Strategy.WARP, five_universities, config, workload, partition_map=nhop.partition_map)
        hybrid = build_dataset(Strategy.HYBRID, five_universities, config, workload)
        placements[k] = {"nhop": nhop.dataset, "warp": warp.dataset, "hybrid": hybrid.dataset}
    return placements


@pytest.mark.integration
class TestOracleEquivalence:
    @pytest.mark.parametrize("k", [1, 4, 8])
    @pytest.mark.parametrize("strategy", list(Strategy))
    def test_results_match_oracle(
        self, strategy, k, two_universities, university_queries, wikidata_like, random_queries, expected_results
    ):
        """Test that classified and distributed runs both return the oracle's results for every query."""
        for label, data, queries in (
            ("lubm", two_universities, university_queries),
            ("random", wikidata_like, random_queries),
        ):
            config = StrategyConfig(k=k, strategy=strategy)
            built = build_dataset(strategy, data, config, queries)
            cluster = SimulatedCluster(built.dataset)
            hops = locality_hops(strategy, config.n, 1)

            for query in queries:
                mode = classify_locality(query, strategy, hops, queries)
                expected = expected_results[(label, query.name)]
                assert cluster.evaluate(query, mode).results == expected, (label, query.name, mode)
                assert cluster.evaluate_distributed(query).results == expected, (label, query.name)

    def test_queries_are_not_trivial(self, expected_results):
        assert all(expected_results.values())


@pytest.mark.integration
class TestHopLocality:
    def test_three_step_chain_needs_three_hops(self, chain_data, make_query):
        _, dictionaries = chain_data
        query = make_query("SELECT ?x WHERE { ?x ex:p ?y . ?y ex:p ?z . ?z ex:p ?t }", dictionaries)

        assert classify_locality(query, Strategy.GRAPH_NHOP, 3) is RunMode.LOCAL
        assert classify_locality(query, Strategy.GRAPH_NHOP, 2) is RunMode.DISTRIBUTED

    def test_three_step_chain_local_after_three_hop_expansion(self, chain_data, make_query, oracle):
        triples, dictionaries = chain_data
        query = make_query("SELECT ?x ?t WHERE { ?x ex:p ?y . ?y ex:p ?z . ?z ex:p ?t }", dictionaries)
        dataset = allocate_by_subject(triples, PartitionMap([0, 1, 1, 1], 2))

        two_hop = SimulatedCluster(nhop_expand(dataset, triples, 2)).evaluate_local(query)
        three_hop = SimulatedCluster(nhop_expand(dataset, triples, 3)).evaluate_local(query)

        assert three_hop.results == oracle(query, triples)
        assert two_hop.results != three_hop.results

    def test_advisor_chain_depth(self, university_queries):
        depths = {query.name: hop_depth(query) for query in university_queries}

        assert depths == {"q1": 3, "q2_corrected": 2, "q3": 2, "q4": 2}


@pytest.mark.integration
class TestWorkloadLocality:
    @pytest.mark.parametrize("pipeline", [warp_pipeline, hybrid_pipeline])
    def test_workload_queries_run_locally(self, pipeline, two_universities, university_queries, expected_results):
        """Test that after refinement every workload query is local, exact and exchange-free."""
        dataset = pipeline(two_universities.triples, university_queries, StrategyConfig(k=4))
        cluster = SimulatedCluster(dataset)

        for query in university_queries:
            outcome = cluster.evaluate_local(query)
            assert outcome.results == expected_results[("lubm", query.name)], query.name
            assert outcome.report.shuffle.tuples_exchanged == 0

    @pytest.mark.parametrize("placement", ["warp", "hybrid"])
    @pytest.mark.parametrize("k", ORDERING_K)
    def test_cross_department_advisors_run_locally(
        self, placement, k, five_universities, five_university_placements, oracle
    ):
        workload = load_queries(None, load_prefixes(), five_universities.dictionaries)
        cluster = SimulatedCluster(five_university_placements[k][placement])

        for query in workload:
            outcome = cluster.evaluate_local(query)
            assert outcome.results == oracle(query, five_universities.triples), query.name
            assert outcome.report.shuffle.tuples_exchanged == 0


@pytest.mark.integration
class TestReplicationOrdering:
    @pytest.mark.parametrize("k", ORDERING_K)
    def test_rates_at_k(self, k, five_university_placements):
        """Test that two-hop replication is below warp, which is below hybrid."""
        rates = {name: replication_rate(dataset) for name, dataset in five_university_placements[k].items()}

        assert 0 < rates["nhop"] < rates["warp"] < rates["hybrid"], rates

    def test_rates_grow_with_k(self, five_university_placements):
        low, high = (
            {name: replication_rate(dataset) for name, dataset in five_university_placements[k].items()}
            for k in ORDERING_K
        )

        assert low["nhop"] <= high["nhop"]
        assert low["warp"] < high["warp"]
        assert low["hybrid"] < high["hybrid"]

    @pytest.mark.parametrize("k", ORDERING_K)
    def test_refinement_goes_beyond_two_hops(self, k, five_university_placements):
        """Test that advisors from other departments make warp refinement replicate past the two-hop closure."""
        warp = five_university_placements[k]["warp"]

        assert warp.replicas_by_stage.get(WARP_STAGE, 0) > 0


@pytest.mark.integration
class TestLoadBalance:
    def test_hub_subject_skews_subject_placement(self):
        """Test that random placement balances best and graph placement worst around a hub subject."""
        triples, dictionaries = encode(synthetic_triples(GeneratorSpec(universities=5, hub_fraction=0.10)))
        data = LoadedData(triples, dictionaries)
        hub = dictionaries.nodes.lookup(Term.iri(university_iri(0)))
        assert sum(1 for t in triples if t.s == hub) >= 0.10 * len(triples)

        stddev = {
            strategy: size_stddev(build_dataset(strategy, data, StrategyConfig(k=4)).dataset)
            for strategy in (Strategy.RANDOM_HASH, Strategy.SUBJECT_HASH, Strategy.GRAPH_SUBJECT)
        }

        assert stddev[Strategy.RANDOM_HASH] <= stddev[Strategy.SUBJECT_HASH] <= stddev[Strategy.GRAPH_SUBJECT]


@pytest.mark.integration
class TestPreparationCost:
    def test_subject_hash_prepares_faster_than_warp(self, five_universities):
        config = StrategyConfig(k=4)
        workload = load_queries(None, load_prefixes(), five_universities.dictionaries)

        subject = build_dataset(Strategy.SUBJECT_HASH, five_universities, config)
        warp = build_dataset(Strategy.WARP, five_universities, config, workload)

        assert subject.timer.total_ms < warp.timer.total_ms
        assert {"graph-prep", "partition", "allocate", "replicate"} <= set(warp.timer.timings)
