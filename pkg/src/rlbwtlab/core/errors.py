"""Exception hierarchy shared by the rlbwt-lab modules."""


class RlbwtLabError(Exception):
    """Base class for library errors."""


class TextFormatError(RlbwtLabError):
    """Input bytes cannot be turned into a terminated text."""


class MalformedParseError(RlbwtLabError, ValueError):
    """An LZ77 parse record is unreadable or references a later source."""


class GrammarError(RlbwtLabError):
    """Invalid grammar access (unused symbol, child index out of range)."""


class RestartRequested(RlbwtLabError, RuntimeError):
    """A randomized construction failed its check and must be rerun with a new seed."""


class RetryLimitExceeded(RlbwtLabError, RuntimeError):
    """Raised when a Las Vegas loop runs out of attempts."""


class VerificationError(RlbwtLabError):
    """Computed output disagrees with the ground-truth oracle."""
