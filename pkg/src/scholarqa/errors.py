"""Exception types shared across the package."""


class ScholarQaError(Exception):
    """Base class for all package-specific errors."""


class MalformedRecord(ScholarQaError):
    """A corpus, FAQ or dataset record is not parseable or violates an invariant."""


class EmptyCorpus(ScholarQaError):
    """No valid documents were found where at least one is required."""


class CorpusTooSmall(ScholarQaError):
    """The corpus does not have enough usable documents for the requested model."""


class UnknownPassage(ScholarQaError):
    """A passage id is not present in the store or index."""


class UnknownDocument(ScholarQaError):
    """A document id is not present in the store or fitted model."""


class ReaderUnreachable(ScholarQaError):
    """The external reader endpoint could not be reached in time."""


class ProtocolViolation(ScholarQaError):
    """The external reader sent a response that violates the wire protocol."""


class EmptyRun(ScholarQaError):
    """A ranked run contains no queries."""


class MissingPrediction(ScholarQaError):
    """A dataset question has no prediction list at all."""


class LengthMismatch(ScholarQaError):
    """Two label sequences that must align have different lengths."""
