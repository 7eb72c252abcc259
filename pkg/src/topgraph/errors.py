"""Exception types shared across the package."""


class TopGraphError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(TopGraphError, ValueError):
    """Input document does not conform to the expected schema."""


class UnknownVertexError(SchemaError):
    pass


class MetricError(TopGraphError, ValueError):
    """A distance table violates one of the metric axioms."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class GraphMismatchError(TopGraphError, ValueError):
    pass


class PreconditionError(TopGraphError, ValueError):
    """An operation was called on data outside its domain."""


class CapacityError(TopGraphError, ValueError):
    """A construction would exceed a configured size cap."""
