"""Exception types raised across partbench."""


class PartBenchError(Exception):
    """Base exception for partbench errors."""

    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


class MalformedLineError(PartBenchError):
    """Raised when an N-Triples line cannot be parsed."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"Malformed line {line_number}: {reason}")


class UnknownIdError(PartBenchError):
    """Raised when decoding an id that is not in the dictionary."""

    def __init__(self, term_id: int):
        self.term_id = term_id
        super().__init__(f"Unknown id {term_id}")


class CorruptFileError(PartBenchError):
    """Raised when a persisted file is truncated or malformed."""


class MetisFormatError(PartBenchError):
    """Raised when a Metis graph file has an invalid header or body."""


class LineCountMismatchError(MetisFormatError):
    """Raised when a Metis file has a different number of lines than expected."""

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Expected {expected} lines, found {actual}")


class PartitionOutOfRangeError(MetisFormatError):
    """Raised when a partition file references a partition id >= k."""

    def __init__(self, line_number: int, partition: int, k: int):
        self.line_number = line_number
        self.partition = partition
        self.k = k
        super().__init__(f"Line {line_number}: partition {partition} out of range for k={k}")


class InfeasibleBalanceError(PartBenchError):
    """Raised when a graph cannot be split into k non-empty balanced partitions."""


class UnmappedSubjectError(PartBenchError):
    """Raised when a triple's subject has no partition assignment."""

    def __init__(self, subject: int):
        self.subject = subject
        super().__init__(f"Subject {subject} has no partition assignment")


class ProvenanceError(PartBenchError):
    """Raised when an operation would break original/replica provenance."""


class UnsupportedPatternError(PartBenchError):
    """Raised when a workload pattern cannot be used for placement analysis."""


class DisconnectedPatternError(UnsupportedPatternError):
    """Raised when a basic graph pattern is not connected through shared variables."""


class QuerySyntaxError(PartBenchError):
    """Raised when query text cannot be parsed."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        super().__init__(message if position is None else f"{message} (at position {position})")


class UnsupportedQueryError(PartBenchError):
    """Raised for SPARQL features outside the basic graph pattern subset."""


class ConfigError(PartBenchError):
    """Raised for invalid configuration values or files."""


class BenchLockedError(PartBenchError):
    """Raised when another benchmark holds the output directory lock."""
