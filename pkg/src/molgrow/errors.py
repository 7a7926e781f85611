"""Exception taxonomy shared across the framework.

Every error a module contract names maps to exactly one class here, so the
CLI can translate them into stable exit codes.
"""


class MolgrowError(Exception):
    """Base class for all framework errors."""


class ParseError(MolgrowError):
    """Input line notation could not be parsed or sanitized. Terminal for
    the candidate: callers discard, never repair."""


class EngineError(MolgrowError):
    """The cheminformatics engine failed on an operation other than parsing."""


class FormatError(MolgrowError):
    """Malformed ingestion file. Carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class EmptyBaseError(MolgrowError):
    """Knowledge-base ingestion produced zero valid records."""


class UnknownIdError(MolgrowError):
    """A requested record id is not present in the knowledge base."""


class EncoderUnavailableError(MolgrowError):
    """External embedding model service is absent or failed."""


class DimensionMismatchError(MolgrowError):
    """Embedding dimensions disagree where they must match."""


class ZeroNormError(MolgrowError):
    """A vector with zero norm reached a cosine computation."""


class EmptyPoolError(MolgrowError):
    """Fragment pool is empty (all fragments filtered out or none supplied)."""


class EmptyLibraryError(MolgrowError):
    """Template library construction received zero rules."""


class EmptyActionSetError(MolgrowError):
    """A policy distribution was requested over zero actions."""


class ToolNotFoundError(MolgrowError):
    """An external tool binary or its input file is missing."""


class ConversionError(MolgrowError):
    """An external conversion tool exited nonzero."""


class DockingFailure(MolgrowError):
    """Docking subprocess or pose generation failed. The environment maps
    this to worst-case affinity instead of aborting the episode."""


class NonFiniteLossError(MolgrowError):
    """A PPO update produced a non-finite loss; parameters are unchanged."""
