"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ResourceError(MemoryError):
    """A requested computation would exceed the configured memory budget.

    The offending size is kept on ``count`` so callers can report it.
    """

    def __init__(self, message, count):
        super().__init__(message)
        self.count = int(count)


class StepRejected(RuntimeError):
    """A time step was refused because it violated a solver invariant."""
