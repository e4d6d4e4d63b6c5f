"""SPARQL basic graph pattern queries: parsing, global evaluation and locality classification."""

import logging
from collections import Counter, deque
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, replace
from enum import StrEnum
from importlib import resources
from pathlib import Path

from pyparsing import ParseBaseException
from rdflib import BNode, Literal, URIRef, Variable
from rdflib.plugins.sparql.algebra import translateQuery
from rdflib.plugins.sparql.parser import parseQuery
from rdflib.plugins.sparql.parserutils import CompValue
from rdflib.term import Identifier

from part_bench.config import DEFAULT_WARP_HOPS
from part_bench.errors import QuerySyntaxError, UnsupportedPatternError, UnsupportedQueryError
from part_bench.models import EncodedTriple, RunMode, Strategy, Term

logger = logging.getLogger(__name__)

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
UNKNOWN_ID = -1
CORPUS_PACKAGE = "part_bench.corpus"
DEFAULT_WORKLOAD = ("q1", "q2_corrected", "q3", "q4")

Binding = dict[str, int]
ResultSet = set[tuple[int, ...]]


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("Variable names must be non-empty")

    def __str__(self) -> str:
        return f"?{self.name}"


@dataclass(frozen=True, slots=True)
class Const:
    """A constant term; id is None until encoded and UNKNOWN_ID when absent from the dictionary."""

    term: Term
    id: int | None = None

    def __str__(self) -> str:
        return self.term.to_ntriples()


PatternTerm = Var | Const


@dataclass(frozen=True)
class TriplePattern:
    s: PatternTerm
    p: PatternTerm
    o: PatternTerm

    @property
    def positions(self) -> tuple[PatternTerm, PatternTerm, PatternTerm]:
        return self.s, self.p, self.o

    def variables(self) -> list[str]:
        return list(dict.fromkeys(term.name for term in self.positions if isinstance(term, Var)))

    def __str__(self) -> str:
        return f"{self.s} {self.p} {self.o}"


@dataclass
class Query:
    """A conjunctive query: projected variables over an ordered basic graph pattern."""

    bgp: list[TriplePattern]
    projection: list[str]
    name: str = ""

    def __post_init__(self):
        if not self.bgp:
            raise QuerySyntaxError("Basic graph pattern must not be empty")
        known = set(self.variables())
        missing = [v for v in self.projection if v not in known]
        if missing:
            raise QuerySyntaxError(f"Projected variable(s) not in pattern: {', '.join(missing)}")

    def variables(self) -> list[str]:
        return list(dict.fromkeys(name for pattern in self.bgp for name in pattern.variables()))

    @property
    def has_variable_predicate(self) -> bool:
        return any(isinstance(pattern.p, Var) for pattern in self.bgp)

    @property
    def predicate_variables(self) -> frozenset[str]:
        """Variables that only ever appear in predicate position."""
        in_predicate = {p.p.name for p in self.bgp if isinstance(p.p, Var)}
        elsewhere = {t.name for p in self.bgp for t in (p.s, p.o) if isinstance(t, Var)}
        return frozenset(in_predicate - elsewhere)

    def __str__(self) -> str:
        body = " . ".join(str(pattern) for pattern in self.bgp)
        return f"SELECT {' '.join('?' + v for v in self.projection)} WHERE {{ {body} }}"


# Query text parsing

# Algebra nodes that wrap a plain basic graph pattern in a SELECT query.
_PASS_THROUGH = {"SelectQuery", "Distinct", "Reduced", "Project"}
_FEATURE_NAMES = {
    "LeftJoin": "OPTIONAL",
    "Union": "UNION",
    "Filter": "FILTER",
    "Minus": "MINUS",
    "Extend": "BIND and projection expressions",
    "Graph": "GRAPH",
    "ToMultiSet": "VALUES and sub-queries",
    "Join": "Nested group patterns",
    "OrderBy": "ORDER BY",
    "Slice": "LIMIT and OFFSET",
    "Group": "GROUP BY",
    "AggregateJoin": "Aggregates",
    "ServiceGraphPattern": "SERVICE",
}

RdfTriple = tuple[Identifier, Identifier, Identifier]


def _bgp_node(algebra: CompValue) -> CompValue:
    """Unwrap SELECT / DISTINCT / projection nodes down to the basic graph pattern."""
    if algebra.name != "SelectQuery":
        raise UnsupportedQueryError(f"{algebra.name} is not supported; only SELECT queries are")
    node = algebra
    while node.name in _PASS_THROUGH:
        node = node.p
    if node.name != "BGP":
        feature = _FEATURE_NAMES.get(node.name, node.name)
        raise UnsupportedQueryError(f"{feature} is not supported; only basic graph patterns are")
    return node


def _written_order(where: CompValue | None, triples: Sequence[RdfTriple]) -> list[RdfTriple]:
    """
    Triples of the WHERE clause in the order they were written.

    rdflib sorts BGP triples by selectivity; the resolved parse tree still holds the written
    order. Falls back to the algebra order if the two disagree.
    """
    flat = []
    parts = where.part if where is not None else None
    for part in parts or []:
        if isinstance(part, CompValue) and part.name == "TriplesBlock":
            for chunk in part.triples:
                flat.extend(chunk)
    written = [tuple(flat[i : i + 3]) for i in range(0, len(flat) - len(flat) % 3, 3)]
    if all(isinstance(term, Identifier) for row in written for term in row):
        if Counter(written) == Counter(triples):
            return written
    logger.debug("Written triple order not recoverable; using the algebra order")
    return list(triples)


def _pattern_term(term: Identifier, role: str) -> PatternTerm:
    if isinstance(term, Variable):
        return Var(str(term))
    if isinstance(term, URIRef):
        return Const(Term.iri(str(term)))
    if isinstance(term, Literal):
        if role == "subject":
            raise QuerySyntaxError("Subject must not be a literal")
        return Const(Term.literal(term.n3()))
    if isinstance(term, BNode):
        raise UnsupportedQueryError("Blank nodes and collections are not supported; use variables")
    raise UnsupportedQueryError(f"Property paths are not supported (found '{term}' as {role})")


def parse_query(text: str, prefixes: Mapping[str, str] | None = None, dictionaries=None, name: str = "") -> Query:
    """
    Parse a SELECT query whose WHERE clause is a basic graph pattern.

    Args:
        text: Query text; PREFIX declarations extend the supplied prefix table
        prefixes: Prefix table used to expand prefixed names
        dictionaries: Optional DictionaryPair used to encode constants
        name: Identifier carried into reports

    Returns:
        Parsed Query, encoded when dictionaries are given

    Raises:
        QuerySyntaxError: For malformed query text or unresolvable prefixed names
        UnsupportedQueryError: For OPTIONAL, UNION, FILTER and other non-BGP features
    """
    try:
        parsed = parseQuery(text)
    except ParseBaseException as e:
        raise QuerySyntaxError(f"Invalid SPARQL: {e.msg}", e.loc)
    try:
        # Same two stages as rdflib's prepareQuery; the parse tree is kept for the written order.
        prepared = translateQuery(parsed, initNs=dict(prefixes or {}))
    except Exception as e:  # rdflib raises a bare Exception for unknown prefixes
        raise QuerySyntaxError(f"Cannot resolve query terms: {e}")

    bgp_node = _bgp_node(prepared.algebra)
    select = parsed[1]
    triples = _written_order(select.where, bgp_node.triples or [])
    bgp = [
        TriplePattern(_pattern_term(s, "subject"), _pattern_term(p, "predicate"), _pattern_term(o, "object"))
        for s, p, o in triples
    ]

    if select.projection:
        projection = [str(variable) for variable in prepared.algebra.PV]
    else:
        projection = list(dict.fromkeys(v for pattern in bgp for v in pattern.variables()))
    query = Query(bgp=bgp, projection=projection, name=name)
    if dictionaries is not None:
        query = encode_query(query, dictionaries)
    return query


def encode_query(query: Query, dictionaries) -> Query:
    """Resolve constants to ids; constants absent from the dictionaries get UNKNOWN_ID (match nothing)."""

    def resolve(term: PatternTerm, dictionary) -> PatternTerm:
        if isinstance(term, Var):
            return term
        term_id = dictionary.lookup(term.term)
        return Const(term.term, UNKNOWN_ID if term_id is None else term_id)

    nodes, predicates = dictionaries.nodes, dictionaries.predicates
    bgp = [TriplePattern(resolve(p.s, nodes), resolve(p.p, predicates), resolve(p.o, nodes)) for p in query.bgp]
    return replace(query, bgp=bgp)


def load_prefixes(path: str | Path | None = None) -> dict[str, str]:
    """Read a prefix table of 'prefix<TAB>iri' lines; defaults to the bundled table."""
    if path is None:
        text = resources.files(CORPUS_PACKAGE).joinpath("prefixes.tsv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")

    prefixes = {}
    for line_number, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        prefix, sep, iri = line.partition("\t")
        if not sep or not iri.strip():
            raise QuerySyntaxError(f"Prefix table line {line_number} must be 'prefix<TAB>iri'")
        prefixes[prefix.strip().rstrip(":")] = iri.strip()
    return prefixes


def corpus_query_names() -> list[str]:
    return sorted(
        entry.name.removesuffix(".rq")
        for entry in resources.files(CORPUS_PACKAGE).iterdir()
        if entry.name.endswith(".rq")
    )


def corpus_query_text(name: str) -> str:
    entry = resources.files(CORPUS_PACKAGE).joinpath(f"{name}.rq")
    if not entry.is_file():
        raise UnsupportedQueryError(f"No bundled query named '{name}'")
    return entry.read_text(encoding="utf-8")


def load_queries(
    source: str | Path | Sequence[str] | None, prefixes: Mapping[str, str], dictionaries=None
) -> list[Query]:
    """
    Load queries from a .rq file, a directory of .rq files, or bundled corpus names.

    None selects the default workload (Q1, corrected Q2, Q3, Q4).
    """
    if source is None:
        source = list(DEFAULT_WORKLOAD)
    if isinstance(source, list | tuple):
        return [parse_query(corpus_query_text(name), prefixes, dictionaries, name=name) for name in source]

    path = Path(source)
    if path.is_dir():
        files = sorted(path.glob("*.rq"))
    elif path.is_file():
        files = [path]
    else:
        return load_queries([name.strip() for name in str(source).split(",") if name.strip()], prefixes, dictionaries)
    return [parse_query(f.read_text(encoding="utf-8"), prefixes, dictionaries, name=f.stem) for f in files]


# Evaluation


class TripleIndex:
    """Distinct triples indexed by predicate, (predicate, subject), (predicate, object), subject and object."""

    def __init__(self, triples: Iterable[EncodedTriple]):
        self.triples: list[EncodedTriple] = list(dict.fromkeys(triples))
        self._members = set(self.triples)
        self.by_p: dict[int, list[EncodedTriple]] = {}
        self.by_ps: dict[tuple[int, int], list[EncodedTriple]] = {}
        self.by_po: dict[tuple[int, int], list[EncodedTriple]] = {}
        self.by_s: dict[int, list[EncodedTriple]] = {}
        self.by_o: dict[int, list[EncodedTriple]] = {}
        for t in self.triples:
            self.by_p.setdefault(t.p, []).append(t)
            self.by_ps.setdefault((t.p, t.s), []).append(t)
            self.by_po.setdefault((t.p, t.o), []).append(t)
            self.by_s.setdefault(t.s, []).append(t)
            self.by_o.setdefault(t.o, []).append(t)

    def candidates(self, s: int | None, p: int | None, o: int | None) -> Sequence[EncodedTriple]:
        """Smallest indexed superset of the triples matching the bound positions."""
        if p is not None:
            if s is not None and o is not None:
                triple = EncodedTriple(s, p, o)
                return [triple] if triple in self._members else []
            if s is not None:
                return self.by_ps.get((p, s), ())
            if o is not None:
                return self.by_po.get((p, o), ())
            return self.by_p.get(p, ())
        if s is not None:
            return self.by_s.get(s, ())
        if o is not None:
            return self.by_o.get(o, ())
        return self.triples

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, triple: object) -> bool:
        return triple in self._members


def _bound_value(term: PatternTerm, binding: Binding) -> int | None:
    if isinstance(term, Var):
        return binding.get(term.name)
    if term.id is None:
        raise ValueError(f"Constant {term} is not encoded; call encode_query first")
    return term.id


def match_pattern(
    pattern: TriplePattern, binding: Binding, index: TripleIndex
) -> Iterator[tuple[Binding, EncodedTriple]]:
    """Yield extended bindings and the matched triple for each triple consistent with the binding."""
    bound = [_bound_value(term, binding) for term in pattern.positions]
    if UNKNOWN_ID in bound:
        return

    for triple in index.candidates(*bound):
        extended = dict(binding)
        for term, value, required in zip(pattern.positions, triple, bound, strict=True):
            if required is not None:
                if value != required:
                    break
            elif isinstance(term, Var):
                current = extended.get(term.name)
                if current is None:
                    extended[term.name] = value
                elif current != value:
                    break
        else:
            yield extended, triple


class JoinOrder(StrEnum):
    CONNECTED = "connected"
    SELECTIVE = "selective"


def plan_join_order(bgp: Sequence[TriplePattern], order: JoinOrder = JoinOrder.CONNECTED, index=None) -> list[int]:
    """
    Choose the order in which patterns are joined.

    CONNECTED takes patterns left-to-right, but always the leftmost pattern sharing a variable with
    those already joined. SELECTIVE picks, among connected patterns, the one with the fewest
    candidate triples given its constants.
    """
    remaining = list(range(len(bgp)))
    bound: set[str] = set()
    plan = []
    while remaining:
        connected = [i for i in remaining if bound & set(bgp[i].variables())]
        pool = connected or remaining
        if order is JoinOrder.SELECTIVE and index is not None:
            chosen = min(pool, key=lambda i: (len(index.candidates(*_constant_ids(bgp[i]))), i))
        else:
            chosen = pool[0]
        plan.append(chosen)
        remaining.remove(chosen)
        bound.update(bgp[chosen].variables())
    return plan


def _constant_ids(pattern: TriplePattern) -> tuple[int | None, int | None, int | None]:
    return tuple(None if isinstance(t, Var) else t.id for t in pattern.positions)


def solve_bgp(
    bgp: Sequence[TriplePattern], index: TripleIndex, order: JoinOrder = JoinOrder.CONNECTED
) -> list[tuple[Binding, tuple[EncodedTriple, ...]]]:
    """
    All solutions of a basic graph pattern with the triple matched by each pattern.

    Returns:
        (binding, matched triples indexed like the bgp) per solution
    """
    rows: list[tuple[Binding, list[EncodedTriple | None]]] = [({}, [None] * len(bgp))]
    for position in plan_join_order(bgp, order, index):
        pattern = bgp[position]
        extended_rows = []
        for binding, matched in rows:
            for extended, triple in match_pattern(pattern, binding, index):
                row_triples = list(matched)
                row_triples[position] = triple
                extended_rows.append((extended, row_triples))
        rows = extended_rows
        if not rows:
            break
    return [(binding, tuple(matched)) for binding, matched in rows]


def project(bindings: Iterable[Binding], projection: Sequence[str]) -> ResultSet:
    return {tuple(binding[name] for name in projection) for binding in bindings}


def evaluate_global(
    query: Query, triples: Iterable[EncodedTriple] | TripleIndex, order: JoinOrder = JoinOrder.CONNECTED
) -> ResultSet:
    """
    Reference evaluation of a query over the whole dataset.

    Natural join of the pattern match sets on shared variables, projected, duplicates removed.
    """
    index = triples if isinstance(triples, TripleIndex) else TripleIndex(triples)
    return project((binding for binding, _ in solve_bgp(query.bgp, index, order)), query.projection)


# Workload generalization and locality


def generalize_query(query: Query) -> Query:
    """
    Replace constant subjects and objects with fresh variables, keeping predicates constant.

    Repeated occurrences of one constant share a variable, so joins on the constant survive.

    Raises:
        UnsupportedPatternError: If a pattern has a variable predicate
    """
    if query.has_variable_predicate:
        raise UnsupportedPatternError(f"Query '{query.name}' has a variable predicate")

    used = set(query.variables())
    replacements: dict[Term, Var] = {}
    counter = 0

    def lift(term: PatternTerm) -> PatternTerm:
        nonlocal counter
        if isinstance(term, Var):
            return term
        if term.term not in replacements:
            counter += 1
            while f"v{counter}" in used:
                counter += 1
            used.add(f"v{counter}")
            replacements[term.term] = Var(f"v{counter}")
        return replacements[term.term]

    bgp = [TriplePattern(lift(p.s), p.p, lift(p.o)) for p in query.bgp]
    variables = list(dict.fromkeys(v for p in bgp for v in p.variables()))
    return Query(bgp=bgp, projection=variables, name=query.name)


def canonical_key(query: Query) -> tuple:
    """Structure of a query with variables renamed by first appearance, for matching up to renaming."""
    names: dict[str, int] = {}

    def key(term: PatternTerm) -> tuple:
        if isinstance(term, Var):
            return ("var", names.setdefault(term.name, len(names)))
        return ("const", term.term)

    return tuple(tuple(key(term) for term in pattern.positions) for pattern in query.bgp)


def is_connected(query: Query) -> bool:
    """True if every pattern is linked to every other through shared variables."""
    patterns = [set(p.variables()) for p in query.bgp]
    reached = {0}
    queue = deque([0])
    while queue:
        current = queue.popleft()
        for other, variables in enumerate(patterns):
            if other not in reached and variables & patterns[current]:
                reached.add(other)
                queue.append(other)
    return len(reached) == len(patterns)


def _node_key(term: PatternTerm) -> tuple:
    return ("var", term.name) if isinstance(term, Var) else ("const", term.term)


def hop_depth(query: Query) -> int | None:
    """
    Smallest n for which an n-hop guarantee makes the query local.

    That is 1 + the least, over root subjects, of the largest directed (subject to object) hop
    distance from the root to any pattern's subject; None if no root reaches every subject.
    """
    successors: dict[tuple, set[tuple]] = {}
    subjects = []
    for pattern in query.bgp:
        s, o = _node_key(pattern.s), _node_key(pattern.o)
        successors.setdefault(s, set()).add(o)
        subjects.append(s)
    required = set(subjects)

    best = None
    for root in sorted(required, key=repr):
        distances = {root: 0}
        queue = deque([root])
        while queue:
            node = queue.popleft()
            for nxt in successors.get(node, ()):
                if nxt not in distances:
                    distances[nxt] = distances[node] + 1
                    queue.append(nxt)
        if required <= distances.keys():
            depth = 1 + max(distances[s] for s in required)
            best = depth if best is None else min(best, depth)
    return best


def is_covered(query: Query, workload: Sequence[Query]) -> bool:
    """True if the query generalizes to the same pattern as some workload query."""
    try:
        key = canonical_key(generalize_query(query))
    except UnsupportedPatternError:
        return False
    for workload_query in workload:
        if workload_query.has_variable_predicate:
            continue
        if canonical_key(generalize_query(workload_query)) == key:
            return True
    return False


def classify_locality(
    query: Query, strategy: Strategy, n: int = 1, workload: Sequence[Query] | None = None
) -> RunMode:
    """
    Decide whether a query is answered exactly by the union of per-partition results.

    Args:
        query: Query to classify
        strategy: Distribution strategy of the dataset
        n: Hop guarantee of GraphNHop datasets, or the pre-hop count of Hybrid datasets
        workload: Workload queries the Warp/Hybrid dataset was refined for

    Returns:
        RunMode.LOCAL or RunMode.DISTRIBUTED
    """
    if len(query.bgp) == 1:
        return RunMode.LOCAL
    if query.has_variable_predicate or strategy is Strategy.RANDOM_HASH:
        return RunMode.DISTRIBUTED

    guarantee = {
        Strategy.SUBJECT_HASH: 1,
        Strategy.GRAPH_SUBJECT: 1,
        Strategy.GRAPH_NHOP: n,
        Strategy.WARP: DEFAULT_WARP_HOPS,
        Strategy.HYBRID: n,
    }[strategy]
    depth = hop_depth(query)
    if depth is not None and depth <= guarantee:
        return RunMode.LOCAL
    if strategy.is_workload_aware and workload and is_covered(query, workload):
        return RunMode.LOCAL
    return RunMode.DISTRIBUTED

