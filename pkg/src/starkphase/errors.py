"""Exception and warning types shared across the package."""


class StarkPhaseError(Exception):
    """Base class for all package errors."""


class DomainError(StarkPhaseError, ValueError):
    """An input lies outside the domain of a physical formula."""


class SingularityError(StarkPhaseError, ZeroDivisionError):
    """A formula was evaluated exactly at a pole."""


class ConfigError(StarkPhaseError, ValueError):
    """Invalid run configuration or simulation grid."""


class UsageError(StarkPhaseError, ValueError):
    """Operation called with mutually inconsistent arguments."""


class DegenerateInputError(StarkPhaseError, ValueError):
    """Input carries no information to act on (e.g. an all-zero envelope)."""


class NumericalInstabilityError(StarkPhaseError, RuntimeError):
    """The integrator produced non-finite or unphysical values."""


class ValidityWarning(UserWarning):
    """A far-detuned or narrow-band approximation is being stretched."""
