"""Exception types shared across the engine."""


class SymcallError(Exception):
    """Base class for all engine errors."""


class ContractViolation(SymcallError):
    """An operation was invoked outside its precondition."""


class NotFound(SymcallError):
    """A referenced id does not exist."""


class AlreadyReviewed(SymcallError):
    """A review was submitted for a record that is no longer pending."""


class InconsistentEvidence(SymcallError):
    """Every branch of the model has zero probability for the given evidence."""


class ConfigError(SymcallError):
    """A configuration value is out of its allowed range."""
