"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain where an operation is defined."""


class ResourceError(RuntimeError):
    """A request exceeds a table size or memory budget."""


class ConstructionError(RuntimeError):
    """A kernel could not be built to the requested accuracy."""
