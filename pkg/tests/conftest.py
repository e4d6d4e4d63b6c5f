"""Shared pytest fixtures for partbench tests."""

import tempfile
from collections import defaultdict
from pathlib import Path

import pytest

from part_bench.bench import LoadedData
from part_bench.generator import GeneratorSpec, random_triples, synthetic_triples
from part_bench.models import PartitionedDataset, Term
from part_bench.query import Var, load_prefixes, load_queries, parse_query
from part_bench.rdf_io import encode

EX = "http://example.org/"
EX_PREFIXES = {"ex": EX}


def ex_term(name: str) -> Term:
    """Example-namespace IRI, or a literal when the name is quoted."""
    if name.startswith('"'):
        return Term.literal(name)
    return Term.iri(EX + name)


def nested_loop_oracle(query, triples):
    """
    Brute-force evaluation used as ground truth.

    Scans the whole dataset once per pattern, then extends bindings by nested loops over
    the per-pattern match lists (patterns taken in a connected order). Each list is bucketed
    by the positions holding variables bound at an earlier level.
    """
    distinct = set(triples)

    order, remaining, seen = [], list(query.bgp), set()
    while remaining:
        chosen = next((p for p in remaining if seen & set(p.variables())), remaining[0])
        order.append(chosen)
        remaining.remove(chosen)
        seen.update(chosen.variables())

    def fits_constants(pattern, triple):
        pairs = zip(pattern.positions, triple, strict=True)
        return all(isinstance(term, Var) or term.id == value for term, value in pairs)

    levels, bound = [], set()
    for pattern in order:
        keys = [i for i, term in enumerate(pattern.positions) if isinstance(term, Var) and term.name in bound]
        buckets = defaultdict(list)
        for triple in distinct:
            if fits_constants(pattern, triple):
                buckets[tuple(triple[i] for i in keys)].append(triple)
        levels.append((pattern, keys, buckets))
        bound.update(pattern.variables())

    results = set()

    def extend(level, binding):
        if level == len(levels):
            results.add(tuple(binding[name] for name in query.projection))
            return
        pattern, keys, buckets = levels[level]
        for triple in buckets.get(tuple(binding[pattern.positions[i].name] for i in keys), ()):
            extended = dict(binding)
            consistent = True
            for term, value in zip(pattern.positions, triple, strict=True):
                if isinstance(term, Var) and extended.setdefault(term.name, value) != value:
                    consistent = False
                    break
            if consistent:
                extend(level + 1, extended)

    extend(0, {})
    return results


@pytest.fixture(scope="session")
def oracle():
    """Fixture exposing the brute-force query oracle."""
    return nested_loop_oracle


@pytest.fixture
def make_triples():
    """Factory fixture encoding (subject, predicate, object) names in the example namespace."""

    def _make(*rows, dictionaries=None):
        term_triples = [tuple(ex_term(name) for name in row) for row in rows]
        return encode(term_triples, dictionaries)

    return _make


@pytest.fixture
def make_query():
    """Factory fixture parsing a query with the ex: prefix, encoded against the given dictionaries."""

    def _make(text, dictionaries=None, name="test"):
        return parse_query(text, EX_PREFIXES, dictionaries, name=name)

    return _make


@pytest.fixture
def chain_data(make_triples):
    """Three-triple chain a -> b -> c -> d."""
    return make_triples(("a", "p", "b"), ("b", "p", "c"), ("c", "p", "d"))


@pytest.fixture
def advisor_example(make_triples, make_query):
    """
    Fixture for the advisor / worksFor / subOrganizationOf example.

    The three triples are Original in partitions 1, 3 and 1 of a k=4 dataset.
    """
    triples, dictionaries = make_triples(
        ("Bob", "advisor", "Alice"),
        ("Alice", "worksFor", "DBteam"),
        ("DBteam", "subOrganizationOf", "Univ1"),
    )
    dataset = PartitionedDataset(4)
    for triple, partition in zip(triples, (1, 3, 1), strict=True):
        dataset.add_original(triple, partition)

    query = make_query(
        "SELECT ?x ?y ?z WHERE { ?x ex:advisor ?y . ?y ex:worksFor ?z . ?z ex:subOrganizationOf ?t }",
        dictionaries,
        name="chain",
    )
    return {"triples": triples, "dictionaries": dictionaries, "dataset": dataset, "query": query}


@pytest.fixture(scope="session")
def lubm_data():
    """One generated university, encoded."""
    triples, dictionaries = encode(synthetic_triples(GeneratorSpec(universities=1, seed=7)))
    return LoadedData(triples, dictionaries)


@pytest.fixture(scope="session")
def lubm_workload(lubm_data):
    """Default workload (q1, q2_corrected, q3, q4) encoded against the generated university."""
    return load_queries(None, load_prefixes(), lubm_data.dictionaries)


@pytest.fixture(scope="session")
def random_data():
    """A small Wikidata-like random graph, encoded."""
    triples, dictionaries = encode(random_triples(3000, seed=11))
    return LoadedData(triples, dictionaries)


@pytest.fixture
def temp_directory():
    """Fixture that provides a temporary directory for testing."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)
