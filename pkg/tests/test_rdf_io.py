"""Tests for N-Triples parsing, dictionary encoding and encoded persistence."""

import gzip
import random

import pytest

from part_bench.config import DATASET_FILE, NODES_DICT_FILE
from part_bench.errors import CorruptFileError, MalformedLineError, UnknownIdError
from part_bench.models import EncodedTriple, Term, TermKind
from part_bench.rdf_io import (
    Dictionary,
    DictionaryPair,
    ErrorPolicy,
    ParseStats,
    decode,
    decode_rows,
    encode,
    load_encoded,
    load_ntriples,
    parse_line,
    parse_ntriples,
    save_encoded,
    write_ntriples,
)

SAMPLE = b"""# people
<http://ex.org/alice> <http://ex.org/knows> <http://ex.org/bob> .

<http://ex.org/bob> <http://ex.org/name> "Bob"@en .
_:b1 <http://ex.org/age> "42"^^<http://www.w3.org/2001/XMLSchema#integer> .
<http://ex.org/bob> <http://ex.org/quote> "say \\"hi\\"" . # trailing comment
"""


@pytest.mark.unit
class TestParseLine:
    def test_simple_statement(self):
        """Test that three IRIs parse into an IRI triple."""
        s, p, o = parse_line("<a> <p> <b> .", 1)

        assert s == Term.iri("a")
        assert p == Term.iri("p")
        assert o == Term.iri("b")

    def test_literal_keeps_full_token(self):
        """Test that language tags and datatypes stay part of the literal lexical form."""
        _, _, tagged = parse_line('<a> <p> "chat"@fr .', 1)
        _, _, typed = parse_line('<a> <p> "1"^^<http://www.w3.org/2001/XMLSchema#int> .', 2)

        assert tagged.kind is TermKind.LITERAL
        assert tagged.lexical == '"chat"@fr'
        assert typed.lexical == '"1"^^<http://www.w3.org/2001/XMLSchema#int>'

    def test_blank_node_subject(self):
        s, _, _ = parse_line("_:x1 <p> <b> .", 1)

        assert s == Term.blank("x1")

    def test_comment_and_blank_lines(self):
        assert parse_line("# a comment", 1) is None
        assert parse_line("   ", 2) is None

    @pytest.mark.parametrize(
        "line, reason",
        [
            ("<a> <p> <b>", "truncated"),
            ("<a> <p> .", "truncated"),
            ('"lit" <p> <b> .', "subject"),
            ("<a> _:p <b> .", "predicate"),
            ("<a> <p> <b> <c> .", "too many"),
            ("<a> <p> <b> . <c>", "trailing"),
            ("<a> <p> %%% .", "unexpected character"),
        ],
    )
    def test_malformed_lines(self, line, reason):
        """Test that each kind of malformed statement reports its line number and reason."""
        with pytest.raises(MalformedLineError) as exc_info:
            parse_line(line, 7)

        assert exc_info.value.line_number == 7
        assert reason in exc_info.value.reason


@pytest.mark.unit
class TestParseNTriples:
    def test_parses_in_input_order(self):
        triples = list(parse_ntriples(SAMPLE))

        assert len(triples) == 4
        assert triples[0][0] == Term.iri("http://ex.org/alice")
        assert triples[1][2] == Term.literal('"Bob"@en')
        assert triples[2][0] == Term.blank("b1")
        assert triples[3][2] == Term.literal('"say \\"hi\\""')

    def test_gzip_input_is_detected(self):
        """Test that gzip-compressed bytes are decompressed transparently."""
        assert list(parse_ntriples(gzip.compress(SAMPLE))) == list(parse_ntriples(SAMPLE))

    def test_abort_policy_raises_on_first_error(self):
        data = b"<a> <p> <b> .\n<a> <p>\n<c> <p> <d> .\n"

        with pytest.raises(MalformedLineError) as exc_info:
            list(parse_ntriples(data))

        assert exc_info.value.line_number == 2

    def test_skip_policy_counts_errors(self):
        """Test that the skip policy keeps valid lines and records the malformed ones."""
        data = b"<a> <p> <b> .\n<a> <p>\n<c> <p> <d> .\nnot rdf\n"
        stats = ParseStats()

        triples = list(parse_ntriples(data, on_error=ErrorPolicy.SKIP, stats=stats))

        assert len(triples) == 2
        assert stats.lines == 4
        assert stats.statements == 2
        assert stats.skipped == 2
        assert [e.line_number for e in stats.errors] == [2, 4]

    def test_invalid_utf8_is_malformed(self):
        with pytest.raises(MalformedLineError, match="UTF-8"):
            list(parse_ntriples(b'<a> <p> "\xff" .\n'))


@pytest.mark.unit
class TestDictionary:
    def test_ids_are_dense_in_first_seen_order(self):
        dictionary = Dictionary()

        ids = [dictionary.encode(Term.iri(name)) for name in ("a", "b", "a", "c")]

        assert ids == [0, 1, 0, 2]
        assert len(dictionary) == 3

    def test_decode_unknown_id(self):
        dictionary = Dictionary()
        dictionary.encode(Term.iri("a"))

        with pytest.raises(UnknownIdError) as exc_info:
            dictionary.decode(5)

        assert exc_info.value.term_id == 5

    def test_sealed_dictionary_rejects_new_terms(self):
        dictionary = Dictionary()
        dictionary.encode(Term.iri("a"))
        dictionary.seal()

        assert dictionary.encode(Term.iri("a")) == 0
        with pytest.raises(ValueError):
            dictionary.encode(Term.iri("b"))

    def test_lookup_does_not_assign(self):
        dictionary = Dictionary()

        assert dictionary.lookup(Term.iri("a")) is None
        assert len(dictionary) == 0


@pytest.mark.unit
class TestEncode:
    def test_predicates_use_their_own_dictionary(self):
        """Test that subjects/objects and predicates are numbered independently."""
        a, p, b = Term.iri("a"), Term.iri("p"), Term.iri("b")

        triples, dictionaries = encode([(a, p, b), (b, p, a)])

        assert triples == [EncodedTriple(0, 0, 1), EncodedTriple(1, 0, 0)]
        assert len(dictionaries.nodes) == 2
        assert len(dictionaries.predicates) == 1

    def test_encode_then_decode(self):
        term_triples = list(parse_ntriples(SAMPLE))

        triples, dictionaries = encode(term_triples)

        assert decode(triples, dictionaries) == term_triples

    def test_decode_round_trip_on_random_triples(self):
        """Test that 10,000 random triples over IRIs, blank nodes and literals decode to their input."""
        rng = random.Random(21)

        def node() -> Term:
            kind = rng.randrange(3)
            if kind == 0:
                return Term.iri(f"http://ex.org/n{rng.randrange(3000)}")
            if kind == 1:
                return Term.blank(f"b{rng.randrange(500)}")
            return Term.literal(rng.choice(['"{}"', '"{}"@en', '"{}"^^<http://ex.org/t>']).format(rng.randrange(2000)))

        def subject() -> Term:
            if rng.random() < 0.8:
                return Term.iri(f"http://ex.org/n{rng.randrange(3000)}")
            return Term.blank(f"b{rng.randrange(500)}")

        term_triples = [(subject(), Term.iri(f"http://ex.org/p{rng.randrange(40)}"), node()) for _ in range(10_000)]

        triples, dictionaries = encode(term_triples)

        assert decode(triples, dictionaries) == term_triples
        assert len(dictionaries.predicates) <= 40

    def test_same_term_in_node_and_predicate_position(self):
        """Test that an IRI used as predicate and as node gets an id in each dictionary."""
        knows = Term.iri("knows")

        triples, dictionaries = encode([(knows, knows, knows)])

        assert triples == [EncodedTriple(0, 0, 0)]
        assert dictionaries.nodes.decode(0) == dictionaries.predicates.decode(0) == knows

    def test_extends_existing_dictionaries(self):
        _, dictionaries = encode([(Term.iri("a"), Term.iri("p"), Term.iri("b"))])
        second, dictionaries = encode([(Term.iri("b"), Term.iri("p"), Term.iri("c"))], dictionaries)

        assert second == [EncodedTriple(1, 0, 2)]

    def test_decode_rows_uses_predicate_dictionary_for_predicate_variables(self):
        triples, dictionaries = encode([(Term.iri("a"), Term.iri("p"), Term.iri("b"))])

        rows = decode_rows([(0, 0)], ["s", "pred"], dictionaries, frozenset({"pred"}))

        assert rows == [(Term.iri("a"), Term.iri("p"))]

    def test_decode_unknown_node_id(self):
        with pytest.raises(UnknownIdError):
            decode([(0, 0, 0)], DictionaryPair())


@pytest.mark.integration
class TestPersistence:
    def test_save_and_load_encoded(self, temp_directory):
        triples, dictionaries = encode(parse_ntriples(SAMPLE))

        save_encoded(triples, dictionaries, temp_directory)
        loaded_triples, loaded_dictionaries = load_encoded(temp_directory)

        assert loaded_triples == triples
        assert loaded_dictionaries.nodes == dictionaries.nodes
        assert loaded_dictionaries.predicates == dictionaries.predicates

    def test_truncated_dataset_file(self, temp_directory):
        """Test that a dataset file cut short is reported as corrupt."""
        triples, dictionaries = encode(parse_ntriples(SAMPLE))
        save_encoded(triples, dictionaries, temp_directory)
        path = temp_directory / DATASET_FILE
        path.write_bytes(path.read_bytes()[:-8])

        with pytest.raises(CorruptFileError, match="truncated"):
            load_encoded(temp_directory)

    def test_dictionary_without_final_newline(self, temp_directory):
        triples, dictionaries = encode(parse_ntriples(SAMPLE))
        save_encoded(triples, dictionaries, temp_directory)
        path = temp_directory / NODES_DICT_FILE
        path.write_text(path.read_text(encoding="utf-8").rstrip("\n"), encoding="utf-8")

        with pytest.raises(CorruptFileError):
            load_encoded(temp_directory)

    def test_missing_files(self, temp_directory):
        with pytest.raises(CorruptFileError, match="Missing"):
            load_encoded(temp_directory)

    @pytest.mark.parametrize("name", ["data.nt", "data.nt.gz"])
    def test_write_then_load_ntriples(self, temp_directory, name):
        """Test that written N-Triples (plain or gzip) load back to the same terms."""
        term_triples = list(parse_ntriples(SAMPLE))
        path = temp_directory / name

        count = write_ntriples(term_triples, path)
        triples, dictionaries, stats = load_ntriples(path)

        assert count == 4
        assert stats.statements == 4
        assert decode(triples, dictionaries) == term_triples
