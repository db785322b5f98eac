"""Exception types shared across the toolkit."""


class TrafficBNError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(TrafficBNError, ValueError):
    """Input table is missing required columns or is otherwise unusable."""


class ContractError(TrafficBNError, ValueError):
    """An operation was called with arguments violating its preconditions."""


class DegenerateClassError(TrafficBNError, ValueError):
    """One class of a binary target has no rows."""


class ImpossibleEvidenceError(TrafficBNError, ValueError):
    """Evidence has zero probability under the model."""


class NotAnnotatedError(TrafficBNError, ValueError):
    """Edges lack chi-squared annotations (the network was never pruned)."""


class InsufficientDataError(TrafficBNError, ValueError):
    """Not enough rows to satisfy a requested sample."""
