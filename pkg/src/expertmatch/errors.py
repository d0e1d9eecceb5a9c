"""Exception types shared across the toolkit."""


class ExpertMatchError(Exception):
    """Base class for all toolkit errors."""


class CorpusValidationError(ExpertMatchError, ValueError):
    """Corpus file violates the schema or an internal invariant."""


class EmbeddingFormatError(ExpertMatchError, ValueError):
    """Embedding interchange file is malformed."""


class ScoreParseError(ExpertMatchError, ValueError):
    """Completion text could not be parsed as a bare numeric score."""


class ScoreRangeError(ExpertMatchError, ValueError):
    """Parsed score lies outside the 0..100 scale."""


class InsufficientPairsError(ExpertMatchError, ValueError):
    """Too few nonzero paired differences for a signed-rank test."""
