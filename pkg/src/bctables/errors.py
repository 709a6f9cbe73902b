"""Exception types raised across the package.

Every exception carries a short machine-readable ``code`` used by the CLI
when rendering ``{"error": code, "message": ...}`` documents.
"""


class BctError(Exception):
    code = "Error"


class MarginMismatch(BctError, ValueError):
    code = "MarginMismatch"


class ColumnExceedsRows(BctError, ValueError):
    code = "ColumnExceedsRows"


class WrongSubsetSize(BctError, ValueError):
    code = "WrongSubsetSize"


class InsufficientActiveRows(BctError):
    """Fewer strictly positive residual rows than the next column sum."""

    code = "InsufficientActiveRows"


class TooLarge(BctError, ValueError):
    code = "TooLarge"


class StateSpaceExceeded(BctError):
    code = "StateSpaceExceeded"


class DeadState(BctError, ValueError):
    code = "DeadState"


class AllFailed(BctError):
    """Every replication hit the stopping time before the last column.

    The partially filled summary is attached as ``summary``.
    """

    code = "AllFailed"

    def __init__(self, message, summary=None):
        super().__init__(message)
        self.summary = summary


class RateDegenerate(BctError):
    code = "RateDegenerate"


class GenerationExhausted(BctError):
    code = "GenerationExhausted"


class ParseError(BctError, ValueError):
    code = "ParseError"
