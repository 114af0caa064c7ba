"""Exception types shared across the pipeline."""


class PremiseGuardError(Exception):
    """Base class for all pipeline errors."""


class ParseError(PremiseGuardError):
    """No parseable logical form could be read from some text."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class MissingComponent(PremiseGuardError):
    pass


class FormatError(PremiseGuardError):
    """A record in an input file is malformed.

    ``line`` is 1-based for line-oriented files, ``None`` when unknown.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NoCandidates(PremiseGuardError):
    pass


class EmptyGraph(PremiseGuardError):
    pass


class ProviderError(PremiseGuardError):
    """Transport, auth, quota or transcript failure in a chat/embedding backend."""


class DimensionMismatch(PremiseGuardError, ValueError):
    pass


class ZeroVector(PremiseGuardError, ValueError):
    pass


class UnparseableVerdict(PremiseGuardError):
    def __init__(self, text: str):
        super().__init__(f"cannot read a yes/no answer from {text!r}")
        self.text = text


class AllVotesUnparseable(PremiseGuardError):
    pass


class EmptyDataset(PremiseGuardError):
    pass


class LengthMismatch(PremiseGuardError, ValueError):
    pass


class TooFewPairs(PremiseGuardError, ValueError):
    pass


class IdMismatch(PremiseGuardError):
    pass


class ConfigError(PremiseGuardError):
    pass
