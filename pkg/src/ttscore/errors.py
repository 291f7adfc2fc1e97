"""Exception hierarchy shared across the toolkit.

The CLI maps these onto distinct exit codes, so library code should raise
the most specific class that applies.
"""


class TTScoreError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(TTScoreError):
    """An input violates a documented invariant (bad ids, overlaps, ...)."""


class FormatError(TTScoreError):
    """A file does not conform to its on-disk format contract."""


class NumericError(TTScoreError):
    """A numeric computation failed (non-finite loss, undefined correlation)."""
