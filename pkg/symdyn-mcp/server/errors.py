"""Exception hierarchy for the symbolic dynamics lab.

Every exception carries the exit status the CLI reports for it.
"""


class SymdynError(Exception):
    """Base class for all lab errors."""

    exit_code = 1


class ConfigError(SymdynError):
    """Invalid run configuration, model spec or tool arguments."""

    exit_code = 2


class DomainError(ConfigError):
    """An operation was called outside its precondition."""


class CapabilityError(ConfigError):
    """The model lacks a property the operation needs (mixing, bounded zero runs)."""


class PrecisionError(SymdynError):
    """A decision could not be settled at the current guard or precision."""

    exit_code = 3


class BudgetError(SymdynError):
    """A search or iteration cap was exhausted."""

    exit_code = 4


class InvariantError(SymdynError):
    """Verification of a constructed object failed."""

    exit_code = 5
