"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """A configuration value is missing, inconsistent, or out of range."""


class BracketError(ValueError):
    """A root/quantile search received a bracket that does not contain the target."""


class GeometryError(ValueError):
    """A tower geometry violates a structural precondition (e.g. t >= r)."""


class ConsistencyError(ValueError):
    """Two inputs that must be aligned (lengths, ids, grids) do not match."""


class CapacityError(ValueError):
    """A physical capacity (e.g. ballast column volume) would be exceeded."""


class RejectedStateError(ValueError):
    """An environmental state cannot be simulated (outside operating range)."""


class InfeasibleError(RuntimeError):
    """The optimizer could not produce a feasible design."""
