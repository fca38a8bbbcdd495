"""Exception hierarchy shared across the toolkit."""


class EntropyDPError(Exception):
    """Base class for all toolkit errors."""


class SchemaMismatch(EntropyDPError):
    """A file header does not match the patients schema."""


class RowParseError(EntropyDPError):
    """A row could not be parsed.

    Attributes:
        row: zero-based index of the offending data row.
    """

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class WriteError(EntropyDPError):
    """Persisting a dataset or report failed."""


class FieldKindError(EntropyDPError):
    """An operation was applied to a field of the wrong kind."""


class DistributionError(EntropyDPError):
    """A probability distribution is malformed or unusable."""


class DegenerateEntropyError(EntropyDPError):
    """Budget allocation has no field with positive entropy."""


class BudgetExhausted(EntropyDPError):
    """A spend would push the composition ledger past its total."""


class ParameterError(EntropyDPError, ValueError):
    """An argument is outside the mechanism's domain."""


class EmptyQueryError(EntropyDPError, ValueError):
    """A query was issued against empty input."""


class ScoreDegenerateError(EntropyDPError):
    """Scores cannot be normalised because all losses coincide."""
