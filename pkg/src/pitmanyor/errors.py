"""Exception hierarchy shared by all modules."""


class ConfigError(ValueError):
    """Invalid user configuration (bad JSON, out-of-range parameter)."""


class DomainError(ArithmeticError):
    """A numeric quantity is undefined for the given inputs."""


class DivergentMomentError(DomainError):
    """Requested moment of a heavy-tailed law is infinite."""


class IterationCapError(DomainError):
    """Stick-breaking did not reach the truncation level within the cap."""


class DegenerateError(DomainError):
    """A Beta/Dirichlet/scale parameter collapsed to zero."""


class InsufficientDrawsError(ValueError):
    """Too few posterior draws to form empirical quantiles."""
