"""N-Triples parsing, dictionary encoding and persistence of encoded datasets."""

import gzip
import io
import logging
import re
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import BinaryIO

import numpy as np

from part_bench.config import DATASET_FILE, NODES_DICT_FILE, PREDS_DICT_FILE
from part_bench.errors import CorruptFileError, MalformedLineError, UnknownIdError
from part_bench.models import EncodedTriple, Term, TermKind

logger = logging.getLogger(__name__)

TermTriple = tuple[Term, Term, Term]

GZIP_MAGIC = b"\x1f\x8b"
DATASET_MAGIC = b"PBTRIPL1"
DICTIONARY_HEADER = "#partbench-dictionary"
MAX_RECORDED_ERRORS = 20

_TOKEN = re.compile(
    r"""
    \s*(?:
        (?P<iri><[^<>"{}|^`\\\s]*>)
      | (?P<blank>_:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)
      | (?P<literal>"(?:[^"\\\n\r]|\\.)*"(?:@[A-Za-z]+(?:-[A-Za-z0-9]+)*|\^\^<[^<>"{}|^`\\\s]*>)?)
      | (?P<dot>\.)
      | (?P<comment>\#.*)
    )
    """,
    re.VERBOSE,
)


class ErrorPolicy(StrEnum):
    ABORT = "abort"
    SKIP = "skip"


@dataclass
class ParseStats:
    """Counters collected while parsing an N-Triples stream."""

    lines: int = 0
    statements: int = 0
    skipped: int = 0
    errors: list[MalformedLineError] = field(default_factory=list)

    def record(self, error: MalformedLineError) -> None:
        self.skipped += 1
        if len(self.errors) < MAX_RECORDED_ERRORS:
            self.errors.append(error)


def open_ntriples(path: str | Path) -> BinaryIO:
    """Open an N-Triples file, transparently decompressing gzip input detected by magic bytes."""
    handle = open(path, "rb")
    if handle.read(2) == GZIP_MAGIC:
        handle.seek(0)
        return gzip.GzipFile(fileobj=handle)
    handle.seek(0)
    return handle


def parse_line(line: str, line_number: int) -> TermTriple | None:
    """
    Parse a single N-Triples line.

    Args:
        line: Decoded line without trailing newline
        line_number: 1-based line number for error reporting

    Returns:
        Term triple, or None for blank and comment lines

    Raises:
        MalformedLineError: If the line is not a valid statement
    """
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None

    terms: list[Term] = []
    position = 0
    ended = False
    while position < len(line):
        if not line[position:].strip():
            break
        match = _TOKEN.match(line, position)
        if match is None or match.end() == position:
            raise MalformedLineError(line_number, f"unexpected character at column {position + 1}")
        position = match.end()
        kind = match.lastgroup

        if kind == "comment":
            break
        if ended:
            raise MalformedLineError(line_number, "trailing content after statement")
        if kind == "dot":
            ended = True
            continue
        if len(terms) == 3:
            raise MalformedLineError(line_number, "too many terms in statement")

        token = match.group(kind)
        if kind == "iri":
            if len(token) == 2:
                raise MalformedLineError(line_number, "empty IRI")
            terms.append(Term.iri(token[1:-1]))
        elif kind == "blank":
            terms.append(Term.blank(token[2:]))
        else:
            terms.append(Term.literal(token))

    if len(terms) < 3 or not ended:
        raise MalformedLineError(line_number, "truncated statement")

    subject, predicate, obj = terms
    if subject.kind is TermKind.LITERAL:
        raise MalformedLineError(line_number, "subject must be an IRI or blank node")
    if predicate.kind is not TermKind.IRI:
        raise MalformedLineError(line_number, "predicate must be an IRI")

    return subject, predicate, obj


def parse_ntriples(
    source: BinaryIO | bytes | Iterable[bytes],
    on_error: ErrorPolicy = ErrorPolicy.ABORT,
    stats: ParseStats | None = None,
) -> Iterator[TermTriple]:
    """
    Stream term triples from line-oriented N-Triples bytes.

    Args:
        source: Binary stream, raw bytes, or an iterable of byte lines
        on_error: Abort on the first malformed line, or skip and count it
        stats: Optional counters updated while parsing

    Yields:
        (subject, predicate, object) term triples in input order

    Raises:
        MalformedLineError: On the first malformed line when on_error is ABORT
    """
    stats = stats if stats is not None else ParseStats()
    if isinstance(source, bytes | bytearray):
        source = io.BytesIO(source)
    if hasattr(source, "seekable") and source.seekable():
        if source.read(2) == GZIP_MAGIC:
            source.seek(0)
            source = gzip.GzipFile(fileobj=source)
        else:
            source.seek(0)

    for line_number, raw in enumerate(source, 1):
        stats.lines += 1
        try:
            try:
                line = raw.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError:
                raise MalformedLineError(line_number, "invalid UTF-8")
            triple = parse_line(line, line_number)
        except MalformedLineError as e:
            if on_error is ErrorPolicy.ABORT:
                raise
            logger.debug("Skipping %s", e.message)
            stats.record(e)
            continue

        if triple is not None:
            stats.statements += 1
            yield triple

    if stats.skipped:
        logger.warning("Skipped %d malformed line(s)", stats.skipped)


class Dictionary:
    """Bidirectional map between terms and dense integer ids assigned in first-seen order."""

    def __init__(self):
        self._ids: dict[Term, int] = {}
        self._terms: list[Term] = []
        self.sealed = False

    def encode(self, term: Term) -> int:
        """Return the id of a term, assigning the next free id if it is new."""
        term_id = self._ids.get(term)
        if term_id is not None:
            return term_id
        if self.sealed:
            raise ValueError(f"Dictionary is sealed; cannot add {term}")

        term_id = len(self._terms)
        self._ids[term] = term_id
        self._terms.append(term)
        return term_id

    def lookup(self, term: Term) -> int | None:
        return self._ids.get(term)

    def decode(self, term_id: int) -> Term:
        if not 0 <= term_id < len(self._terms):
            raise UnknownIdError(term_id)
        return self._terms[term_id]

    def seal(self) -> None:
        self.sealed = True

    def items(self) -> Iterator[tuple[int, Term]]:
        yield from enumerate(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, term: object) -> bool:
        return term in self._ids

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dictionary):
            return NotImplemented
        return self._terms == other._terms


@dataclass
class DictionaryPair:
    """One dictionary for subjects/objects and another for predicates."""

    nodes: Dictionary = field(default_factory=Dictionary)
    predicates: Dictionary = field(default_factory=Dictionary)

    def seal(self) -> None:
        self.nodes.seal()
        self.predicates.seal()


def encode(
    term_triples: Iterable[TermTriple], dictionaries: DictionaryPair | None = None
) -> tuple[list[EncodedTriple], DictionaryPair]:
    """
    Encode term triples to integer ids.

    Args:
        term_triples: Parsed (subject, predicate, object) terms
        dictionaries: Existing dictionaries to extend, or None to start empty

    Returns:
        Encoded triples (same count and order as input) and the updated dictionaries
    """
    dictionaries = dictionaries if dictionaries is not None else DictionaryPair()
    node_encode = dictionaries.nodes.encode
    pred_encode = dictionaries.predicates.encode

    encoded = [EncodedTriple(node_encode(s), pred_encode(p), node_encode(o)) for s, p, o in term_triples]

    logger.info(
        "Encoded %d triples (%d nodes, %d predicates)",
        len(encoded),
        len(dictionaries.nodes),
        len(dictionaries.predicates),
    )
    return encoded, dictionaries


def decode(triples: Iterable[Sequence[int]], dictionaries: DictionaryPair) -> list[TermTriple]:
    """Map encoded triples back to terms. Raises UnknownIdError for ids missing from a dictionary."""
    nodes = dictionaries.nodes
    predicates = dictionaries.predicates
    return [(nodes.decode(s), predicates.decode(p), nodes.decode(o)) for s, p, o in triples]


def decode_rows(
    rows: Iterable[Sequence[int]],
    variables: Sequence[str],
    dictionaries: DictionaryPair,
    predicate_variables: frozenset[str] = frozenset(),
) -> list[tuple[Term, ...]]:
    """Decode projected binding rows; variables bound in predicate position use the predicate dictionary."""
    decoders = [
        dictionaries.predicates.decode if name in predicate_variables else dictionaries.nodes.decode
        for name in variables
    ]
    return [tuple(decoder(value) for decoder, value in zip(decoders, row, strict=True)) for row in rows]


def load_ntriples(
    path: str | Path, dictionaries: DictionaryPair | None = None, on_error: ErrorPolicy = ErrorPolicy.ABORT
) -> tuple[list[EncodedTriple], DictionaryPair, ParseStats]:
    """Parse and encode an N-Triples file (plain or gzip)."""
    stats = ParseStats()
    with open_ntriples(path) as handle:
        triples, dictionaries = encode(parse_ntriples(handle, on_error=on_error, stats=stats), dictionaries)
    return triples, dictionaries, stats


def save_triples(triples: Sequence[EncodedTriple], path: str | Path) -> None:
    """Write encoded triples as magic + little-endian uint64 count + N x 3 uint64 ids."""
    array = np.asarray(triples, dtype="<u8").reshape(-1, 3)
    with open(path, "wb") as f:
        f.write(DATASET_MAGIC)
        f.write(np.uint64(len(array)).astype("<u8").tobytes())
        f.write(array.tobytes())


def load_triples(path: str | Path) -> list[EncodedTriple]:
    """Read triples written by save_triples."""
    data = Path(path).read_bytes()
    header_size = len(DATASET_MAGIC) + 8
    if len(data) < header_size or not data.startswith(DATASET_MAGIC):
        raise CorruptFileError(f"'{path}' is not an encoded dataset file")

    count = int(np.frombuffer(data, dtype="<u8", count=1, offset=len(DATASET_MAGIC))[0])
    expected = header_size + count * 3 * 8
    if len(data) != expected:
        raise CorruptFileError(f"'{path}' is truncated or corrupt: expected {expected} bytes, found {len(data)}")

    array = np.frombuffer(data, dtype="<u8", offset=header_size).reshape(-1, 3)
    return [EncodedTriple(s, p, o) for s, p, o in array.tolist()]


def term_from_ntriples(token: str) -> Term:
    """Parse a single rendered term (as written by Term.to_ntriples)."""
    if token.startswith("<") and token.endswith(">"):
        return Term.iri(token[1:-1])
    if token.startswith("_:"):
        return Term.blank(token[2:])
    if token.startswith('"'):
        return Term.literal(token)
    raise ValueError(f"Not an N-Triples term: {token!r}")


def write_ntriples(triples: Iterable[TermTriple], path: str | Path) -> int:
    """Write term triples as N-Triples (gzip-compressed when the path ends in .gz). Returns the count."""
    opener = gzip.open if str(path).endswith(".gz") else open
    count = 0
    with opener(path, "wt", encoding="utf-8", newline="\n") as f:
        for s, p, o in triples:
            f.write(f"{s.to_ntriples()} {p.to_ntriples()} {o.to_ntriples()} .\n")
            count += 1
    return count


def save_dictionary(dictionary: Dictionary, path: str | Path) -> None:
    """Write a dictionary as a header line followed by sorted id<TAB>term lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{DICTIONARY_HEADER}\t{len(dictionary)}\n")
        for term_id, term in dictionary.items():
            f.write(f"{term_id}\t{term.to_ntriples()}\n")


def load_dictionary(path: str | Path) -> Dictionary:
    """Read a dictionary written by save_dictionary, validating ids and line count."""
    with open(path, encoding="utf-8", newline="\n") as f:
        lines = f.read().split("\n")

    header = lines[0].split("\t")
    if len(header) != 2 or header[0] != DICTIONARY_HEADER or not header[1].isdigit():
        raise CorruptFileError(f"'{path}' has no dictionary header")
    count = int(header[1])

    body = lines[1:]
    if body and body[-1] == "":
        body.pop()
    else:
        raise CorruptFileError(f"'{path}' is truncated: missing final newline")
    if len(body) != count:
        raise CorruptFileError(f"'{path}' is truncated: expected {count} entries, found {len(body)}")

    dictionary = Dictionary()
    for expected_id, line in enumerate(body):
        raw_id, _, token = line.partition("\t")
        try:
            term = term_from_ntriples(token)
        except ValueError:
            raise CorruptFileError(f"'{path}' line {expected_id + 2}: invalid term")
        if raw_id != str(expected_id):
            raise CorruptFileError(f"'{path}' line {expected_id + 2}: expected id {expected_id}, found '{raw_id}'")
        dictionary.encode(term)

    if len(dictionary) != count:
        raise CorruptFileError(f"'{path}' contains duplicate terms")
    return dictionary


def save_encoded(triples: Sequence[EncodedTriple], dictionaries: DictionaryPair, directory: str | Path) -> Path:
    """Persist dataset.bin, nodes.dict and preds.dict into a directory."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    save_triples(triples, out / DATASET_FILE)
    save_dictionary(dictionaries.nodes, out / NODES_DICT_FILE)
    save_dictionary(dictionaries.predicates, out / PREDS_DICT_FILE)
    logger.info("Saved %d encoded triples to %s", len(triples), out)
    return out


def load_encoded(directory: str | Path) -> tuple[list[EncodedTriple], DictionaryPair]:
    """Load a dataset persisted by save_encoded and check every id resolves."""
    src = Path(directory)
    for name in (DATASET_FILE, NODES_DICT_FILE, PREDS_DICT_FILE):
        if not (src / name).is_file():
            raise CorruptFileError(f"Missing '{name}' in {src}; run 'partbench encode' first")

    dictionaries = DictionaryPair(
        nodes=load_dictionary(src / NODES_DICT_FILE),
        predicates=load_dictionary(src / PREDS_DICT_FILE),
    )
    triples = load_triples(src / DATASET_FILE)

    node_count = len(dictionaries.nodes)
    pred_count = len(dictionaries.predicates)
    for triple in triples:
        if triple.s >= node_count or triple.o >= node_count or triple.p >= pred_count:
            raise CorruptFileError(f"Triple {tuple(triple)} references ids outside the dictionaries")
    return triples, dictionaries
